#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mogp/io.hpp"
#include "mogp/series.hpp"

namespace mogp {

struct PlotData {
  std::string channel;
  std::vector<std::pair<double, double>> train;  // (t, y) markers
  std::vector<std::pair<double, double>> truth;  // held-out observations, dashed
  std::vector<PredictionRow> predictions;        // sorted by t
  std::vector<TimeRange> ranges;                 // shaded imputation windows
};

struct SvgLayout {
  double width = 800.0;
  double height = 320.0;
  double margin = 48.0;
};

/// Self-contained SVG: shaded ranges, 95% band, posterior mean, dashed
/// held-out truth and one circle per training point.
std::string render_svg(const PlotData& data, const SvgLayout& layout = {});

/// Splits a dataset plus prediction rows into one PlotData per channel.
/// With `original` the observations are mapped back through each channel's
/// transforms to match original-scale predictions.
std::vector<PlotData> plot_data(const TimeSeriesSet& ts, const std::vector<PredictionRow>& rows, bool original);

}  // namespace mogp
