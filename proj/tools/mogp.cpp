// mogp: train, predict, synth, crosscorr and plot subcommands.
//
// Exit status: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "mogp/analytics.hpp"
#include "mogp/error.hpp"
#include "mogp/io.hpp"
#include "mogp/pipeline.hpp"
#include "mogp/svg.hpp"

namespace fs = std::filesystem;
using namespace mogp;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 1;
}

// "NAME:T1,T2,..." -> explicit query times for one channel.
void parse_times(const std::string& arg, std::map<std::string, std::vector<double>>& out) {
  auto colon = arg.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("--at expects CHANNEL:T1,T2,...");
  std::string name = arg.substr(0, colon);
  std::stringstream ss(arg.substr(colon + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out[name].push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--at: '" + tok + "' is not a number");
    }
  }
}

TimeSeriesSet load_dataset(const std::string& data_path, const std::string& config_path) {
  if (!data_path.empty()) return series_from_json(read_json_file(data_path));
  if (!config_path.empty()) return prepare_dataset(load_experiment_config(config_path));
  throw ConfigError("either --data (dataset.json) or --config is required");
}

std::optional<Variant> opt_variant(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_variant(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-output spectral mixture Gaussian processes for multichannel time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // train
  auto* train = app.add_subcommand("train", "Fit models and write models, metrics, correlations and predictions");
  std::string t_config, t_out, t_scale, t_variant;
  std::optional<std::uint64_t> t_seed;
  std::optional<std::size_t> t_trials, t_q;
  train->add_option("--config", t_config, "Experiment config (JSON)")->required();
  train->add_option("--seed", t_seed, "Master seed (overrides config)");
  train->add_option("--out", t_out, "Output directory");
  train->add_option("--scale", t_scale, "Metric scale")->check(CLI::IsMember({"transformed", "original"}));
  train->add_option("--trials", t_trials, "Number of trials");
  train->add_option("--variant", t_variant, "Kernel")->check(CLI::IsMember({"mosm", "csm", "smlmc", "smigp"}));
  train->add_option("--q", t_q, "Spectral components per channel");

  // predict
  auto* predict = app.add_subcommand("predict", "Posterior mean, variance and 95% band at query points");
  std::string p_model, p_data, p_config, p_out, p_scale = "transformed", p_variant;
  std::size_t p_grid = 0;
  std::vector<std::string> p_at, p_channels;
  predict->add_option("--model", p_model, "models.json from train")->required();
  predict->add_option("--data", p_data, "dataset.json from train");
  predict->add_option("--config", p_config, "Experiment config to rebuild the dataset from");
  predict->add_option("--grid", p_grid, "Uniform grid points per channel over its observed span");
  predict->add_option("--at", p_at, "Explicit times, CHANNEL:T1,T2,...");
  predict->add_option("--channel", p_channels, "Restrict the grid to these channels");
  predict->add_option("--out", p_out, "Output CSV (default: stdout)");
  predict->add_option("--scale", p_scale, "Output scale")->check(CLI::IsMember({"transformed", "original"}));
  predict->add_option("--variant", p_variant, "Run to use from models.json")
      ->check(CLI::IsMember({"mosm", "csm", "smlmc", "smigp"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic coupled dataset with known delays and phases");
  std::string s_config, s_out = ".";
  std::optional<std::uint64_t> s_seed;
  synth->add_option("--config", s_config, "Synthetic spec (JSON)")->required();
  synth->add_option("--out", s_out, "Output directory");
  synth->add_option("--seed", s_seed, "Seed (overrides spec)");

  // crosscorr
  auto* cc = app.add_subcommand("crosscorr", "Kernel-implied and empirical cross-correlation matrices");
  std::string c_model, c_data, c_config, c_out = ".", c_norm = "diagonal-sqrt", c_variant;
  cc->add_option("--model", c_model, "models.json from train")->required();
  cc->add_option("--data", c_data, "dataset.json from train");
  cc->add_option("--config", c_config, "Experiment config to rebuild the dataset from");
  cc->add_option("--out", c_out, "Output directory");
  cc->add_option("--normalization", c_norm, "diagonal-sqrt or weight-sum");
  cc->add_option("--variant", c_variant, "Run to use from models.json")
      ->check(CLI::IsMember({"mosm", "csm", "smlmc", "smigp"}));

  // plot
  auto* plot = app.add_subcommand("plot", "One SVG per channel from predictions and data");
  std::string g_pred, g_data, g_config, g_out = ".", g_scale = "transformed";
  plot->add_option("--predictions", g_pred, "predictions.csv")->required();
  plot->add_option("--data", g_data, "dataset.json from train");
  plot->add_option("--config", g_config, "Experiment config to rebuild the dataset from");
  plot->add_option("--out", g_out, "Output directory");
  plot->add_option("--scale", g_scale, "Scale of the predictions file")
      ->check(CLI::IsMember({"transformed", "original"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      auto cfg = load_experiment_config(t_config);
      Overrides o;
      o.seed = t_seed;
      if (!t_out.empty()) o.out = fs::path(t_out);
      if (!t_scale.empty()) o.scale = parse_scale(t_scale);
      o.trials = t_trials;
      o.variant = opt_variant(t_variant);
      o.Q = t_q;
      apply_overrides(cfg, o);
      auto summary = run_train(cfg);
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& r : summary.runs) {
        std::cout << to_string(r.variant) << ": best objective " << r.fit.trials.front().final_objective;
        if (!r.metrics.trial_nmae.empty())
          std::cout << ", nMAE " << format_mean_std(r.metrics.nmae).text << ", nRMSE "
                    << format_mean_std(r.metrics.nrmse).text;
        std::cout << '\n';
        for (const auto& f : r.fit.failures) std::cerr << "trial failed: " << f << '\n';
      }
      std::cout << "outputs written to " << cfg.outputs.string() << '\n';
    } else if (*predict) {
      auto ts = load_dataset(p_data, p_config);
      auto model = load_best_model(p_model, opt_variant(p_variant));
      QuerySpec q;
      q.grid = p_grid;
      q.channels = p_channels;
      for (const auto& a : p_at) parse_times(a, q.times);
      if (q.grid == 0 && q.times.empty()) throw ConfigError("predict needs --grid or --at");
      auto rows = run_predict(model, ts, q, parse_scale(p_scale));
      auto text = predictions_csv(rows);
      if (p_out.empty())
        std::cout << text;
      else
        write_text_file(p_out, text);
    } else if (*synth) {
      run_synth(s_config, s_out, s_seed);
    } else if (*cc) {
      auto ts = load_dataset(c_data, c_config);
      auto model = load_best_model(c_model, opt_variant(c_variant));
      auto report = correlation_report(model, ts, parse_normalization(c_norm));
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      fs::path out = c_out;
      write_text_file(out / "correlation.json", dump(to_json(report)));
      write_text_file(out / "correlation-kernel.csv", correlation_csv(report.labels, report.kernel_corr));
      write_text_file(out / "correlation-empirical.csv", correlation_csv(report.labels, report.empirical_corr));
    } else if (*plot) {
      auto ts = load_dataset(g_data, g_config);
      auto rows = parse_predictions_csv(read_text_file(g_pred));
      auto plots = plot_data(ts, rows, parse_scale(g_scale) == ReportScale::original);
      fs::path out = g_out;
      for (std::size_t c = 0; c < plots.size(); ++c)
        write_text_file(out / ("plot-" + std::to_string(c) + ".svg"), render_svg(plots[c]));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
