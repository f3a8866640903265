#include "mogp/analytics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"

namespace mogp {

std::string to_string(Normalization n) { return n == Normalization::diagonal_sqrt ? "diagonal-sqrt" : "weight-sum"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "diagonal-sqrt" || name == "diag") return Normalization::diagonal_sqrt;
  if (name == "weight-sum" || name == "weights") return Normalization::weight_sum;
  throw ConfigError("unknown normalization '" + name + "' (expected diagonal-sqrt or weight-sum)");
}

Eigen::MatrixXd kernel_cross_correlation(const KernelSpec& spec, Normalization mode) {
  const std::size_t M = spec.M();
  CrossTable table(spec);
  std::vector<double> zero(spec.N(), 0.0);
  Eigen::VectorXd denom(static_cast<Eigen::Index>(M));
  for (std::size_t i = 0; i < M; ++i) {
    double d = 0.0;
    if (mode == Normalization::diagonal_sqrt) {
      d = table.eval(i, i, zero.data(), spec.N());
    } else {
      for (std::size_t q = 0; q < spec.Q(); ++q) d += table.at(q, i, i).alpha;
    }
    if (!(d > 0.0)) throw NumericalError("degenerate channel " + std::to_string(i) + ": k_ii(0) <= 0");
    denom(static_cast<Eigen::Index>(i)) = std::sqrt(d);
  }
  Eigen::MatrixXd rho(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      rho(ii, jj) = i == j && mode == Normalization::diagonal_sqrt
                        ? 1.0
                        : table.eval(i, j, zero.data(), spec.N()) / (denom(ii) * denom(jj));
    }
  return rho;
}

EmpiricalCorrelation empirical_cross_correlation(const TimeSeriesSet& ts) {
  const std::size_t M = ts.num_channels();
  EmpiricalCorrelation out;
  out.matrix = Eigen::MatrixXd::Constant(M, M, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = i; j < M; ++j) {
      const auto& a = ts.channels[i].observations;
      const auto& b = ts.channels[j].observations;
      std::vector<double> x, y;
      for (std::size_t p = 0, q = 0; p < a.size() && q < b.size();) {
        if (a[p].t < b[q].t)
          ++p;
        else if (b[q].t < a[p].t)
          ++q;
        else {
          x.push_back(a[p++].y);
          y.push_back(b[q++].y);
        }
      }
      const std::string pair = "(" + ts.channels[i].name + ", " + ts.channels[j].name + ")";
      if (x.size() < 3) {
        out.warnings.push_back("empirical correlation " + pair + ": fewer than 3 shared timestamps");
        continue;
      }
      double mx = 0.0, my = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
      }
      mx /= static_cast<double>(x.size());
      my /= static_cast<double>(y.size());
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
      }
      if (!(sxx > 0.0 && syy > 0.0)) {
        out.warnings.push_back("empirical correlation " + pair + ": constant series");
        continue;
      }
      double r = i == j ? 1.0 : sxy / std::sqrt(sxx * syy);
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      out.matrix(ii, jj) = r;
      out.matrix(jj, ii) = r;
    }
  }
  return out;
}

CorrelationReport correlation_report(const GPModel& model, const TimeSeriesSet& ts, Normalization mode) {
  CorrelationReport r;
  for (const auto& ch : ts.channels) r.labels.push_back(ch.name);
  r.kernel_corr = kernel_cross_correlation(model.spec, mode);
  auto emp = empirical_cross_correlation(ts);
  r.empirical_corr = emp.matrix;
  r.warnings = std::move(emp.warnings);
  r.normalization = mode;
  return r;
}

namespace {

double truth_mean(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || truth.empty())
    throw DataError("metrics: prediction and truth must have equal nonzero length");
  double m = 0.0;
  for (double v : truth) m += v;
  m /= static_cast<double>(truth.size());
  if (m == 0.0) throw NumericalError("metrics: truth mean is zero, normalization undefined");
  return std::abs(m);
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  double s = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) s += std::abs(pred[k] - truth[k]);
  return s / static_cast<double>(truth.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  double s = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) s += (pred[k] - truth[k]) * (pred[k] - truth[k]);
  return std::sqrt(s / static_cast<double>(truth.size()));
}

}  // namespace

double nmae(std::span<const double> pred, std::span<const double> truth) {
  double m = truth_mean(pred, truth);
  return mae(pred, truth) / m;
}

double nrmse(std::span<const double> pred, std::span<const double> truth) {
  double m = truth_mean(pred, truth);
  return rmse(pred, truth) / m;
}

std::string to_string(ReportScale s) { return s == ReportScale::transformed ? "transformed" : "original"; }

ReportScale parse_scale(const std::string& name) {
  if (name == "transformed") return ReportScale::transformed;
  if (name == "original") return ReportScale::original;
  throw ConfigError("unknown scale '" + name + "' (expected transformed or original)");
}

MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

FormattedMetric format_mean_std(const MeanStd& ms) {
  FormattedMetric f;
  if (ms.mean != 0.0 && std::isfinite(ms.mean)) f.exponent = static_cast<int>(std::floor(std::log10(std::abs(ms.mean))));
  const double unit = std::pow(10.0, f.exponent);
  const double m = ms.mean / unit, s = ms.std / unit;
  int decimals = 3;
  if (s > 0.0) decimals = std::max(0, -static_cast<int>(std::floor(std::log10(s))));
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, m, decimals, s);
  f.text = buf;
  return f;
}

MetricsReport aggregate_trials(std::span<const TrialResult> results, const TimeSeriesSet& ts, ReportScale scale) {
  if (results.empty()) throw ConfigError("aggregate_trials: no trials");
  const TrainingData train = training_data(ts);
  const TrainingData test = test_data(ts);
  if (test.size() == 0) throw DataError("aggregate_trials: empty test set");

  MetricsReport rep;
  rep.variant = to_string(results.front().model.spec.variant());
  rep.n_train = train.size();
  rep.n_test = test.size();
  rep.scale = scale;

  std::map<std::string, bool> fallback_noted;
  for (const auto& trial : results) {
    Posterior post = posterior(trial.model.spec, trial.model.noise, train, test.inputs);
    double sum_mae = 0.0, sum_rmse = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < ts.num_channels(); ++c) {
      std::vector<double> pred, truth;
      for (std::size_t r = 0; r < test.size(); ++r) {
        if (test.inputs.channel[r] != c) continue;
        const auto rr = static_cast<Eigen::Index>(r);
        double t = test.inputs.x(rr, 0), mu = post.mean(rr), y = test.y(rr);
        if (scale == ReportScale::original) {
          mu = invert_value(ts.channels[c].transforms, t, mu);
          y = invert_value(ts.channels[c].transforms, t, y);
        }
        pred.push_back(mu);
        truth.push_back(y);
      }
      if (truth.empty()) continue;
      ++used;
      try {
        sum_mae += nmae(pred, truth);
        sum_rmse += nrmse(pred, truth);
      } catch (const NumericalError&) {
        sum_mae += mae(pred, truth);
        sum_rmse += rmse(pred, truth);
        const auto& name = ts.channels[c].name;
        if (!fallback_noted[name]) {
          rep.notes.push_back("channel '" + name + "': zero truth mean, unnormalized errors used");
          fallback_noted[name] = true;
        }
      }
    }
    rep.trial_nmae.push_back(sum_mae / static_cast<double>(used));
    rep.trial_nrmse.push_back(sum_rmse / static_cast<double>(used));
  }
  rep.nmae = mean_std(rep.trial_nmae);
  rep.nrmse = mean_std(rep.trial_nrmse);
  return rep;
}

std::string metrics_csv(std::span<const MetricsReport> reports) {
  std::ostringstream out;
  out << "# per-channel metrics averaged with equal channel weights; mean and sample std over trials\n";
  for (const auto& r : reports) {
    out << "# " << r.variant << ": scale=" << to_string(r.scale) << " trials=" << r.trial_nmae.size()
        << " n_train=" << r.n_train << " n_test=" << r.n_test << "\n";
    for (const auto& n : r.notes) out << "# " << r.variant << ": " << n << "\n";
  }
  out << "variant,metric,mean,std,exponent,formatted,trials,n_train,n_test\n";
  for (const auto& r : reports) {
    for (int k = 0; k < 2; ++k) {
      const MeanStd& ms = k == 0 ? r.nmae : r.nrmse;
      auto f = format_mean_std(ms);
      out << r.variant << ',' << (k == 0 ? "nMAE" : "nRMSE") << ',' << csv::format_double(ms.mean) << ','
          << csv::format_double(ms.std) << ',' << f.exponent << ',' << csv::escape(f.text) << ','
          << r.trial_nmae.size() << ',' << r.n_train << ',' << r.n_test << '\n';
    }
  }
  return out.str();
}

}  // namespace mogp
