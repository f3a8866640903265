#include "mogp/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"
#include "mogp/rng.hpp"
#include "mogp/synth.hpp"

namespace mogp {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage, const Error& e) {
  throw Error(e.kind(), "stage '" + stage + "': " + e.what());
}

template <class F>
auto in_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_in_stage(stage, e);
  } catch (const Json::exception& e) {
    throw ConfigError("stage '" + stage + "': " + e.what());
  }
}

TransformKind parse_transform(const std::string& s) {
  if (s == "log") return TransformKind::log;
  if (s == "detrend" || s == "detrend_linear" || s == "detrend-linear") return TransformKind::detrend_linear;
  throw ConfigError("unknown transform '" + s + "' (expected log or detrend)");
}

std::string transform_name(TransformKind k) { return k == TransformKind::log ? "log" : "detrend"; }

std::string schema_name(CsvSchema s) { return s == CsvSchema::wide ? "wide" : "long"; }

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

double resolve_bound(const Json& v, const std::string& origin) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    if (origin.empty()) throw ConfigError("mask range uses a calendar date but the dataset has no date origin");
    return static_cast<double>(parse_iso_date(v.get<std::string>()) - parse_iso_date(origin));
  }
  throw ConfigError("mask range bounds must be day offsets or ISO dates");
}

Json run_manifest(const ExperimentConfig& cfg, const TrainSummary& s) {
  Json m;
  m["tool"] = "mogp";
  m["version"] = kVersion;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  m["config"] = to_json(cfg);
  m["dataset"] = {{"channels", s.dataset.num_channels()},
                  {"n_train", s.dataset.num_train()},
                  {"n_test", s.dataset.num_test()},
                  {"origin", s.dataset.origin}};
  Json runs = Json::array();
  for (const auto& r : s.runs) {
    Json seeds = Json::array();
    for (std::size_t k = 0; k < cfg.training.trials; ++k) seeds.push_back(derive_seed(cfg.training.seed, 1000 + k));
    runs.push_back({{"variant", to_string(r.variant)},
                    {"trial_seeds", seeds},
                    {"completed_trials", r.fit.trials.size()},
                    {"failures", r.fit.failures}});
  }
  m["runs"] = runs;
  m["warnings"] = s.warnings;
  return m;
}

std::string predictions_name(std::size_t k, Variant v) {
  return k == 0 ? "predictions.csv" : "predictions-" + to_string(v) + ".csv";
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& j, const fs::path& base_dir) {
  try {
    ExperimentConfig c;
    const auto& data = j.at("data");
    c.data_path = resolve(base_dir, data.at("path").get<std::string>());
    c.schema = parse_schema(data.value("schema", std::string("wide")));

    if (j.contains("transforms"))
      for (const auto& t : j["transforms"]) c.transforms.push_back(parse_transform(t.get<std::string>()));

    if (j.contains("mask")) {
      const auto& m = j["mask"];
      c.mask_seed = m.value("seed", std::uint64_t{0});
      if (m.contains("channels"))
        for (const auto& [name, spec] : m["channels"].items()) {
          ChannelMaskSpec cm;
          cm.random_fraction = spec.value("random_fraction", 0.0);
          if (!(cm.random_fraction >= 0.0 && cm.random_fraction <= 1.0))
            throw ConfigError("mask: random_fraction for '" + name + "' must lie in [0, 1]");
          if (spec.contains("ranges"))
            for (const auto& r : spec["ranges"]) {
              if (!r.is_array() || r.size() != 2) throw ConfigError("mask: each range must be [start, end]");
              cm.ranges.push_back({r[0], r[1]});
            }
          c.mask[name] = std::move(cm);
        }
    }

    if (j.contains("model")) {
      const auto& m = j["model"];
      if (m.contains("variant")) {
        c.variants.clear();
        if (m["variant"].is_array())
          for (const auto& v : m["variant"]) c.variants.push_back(parse_variant(v.get<std::string>()));
        else
          c.variants.push_back(parse_variant(m["variant"].get<std::string>()));
        if (c.variants.empty()) throw ConfigError("model.variant must name at least one kernel");
      }
      c.training.Q = m.value("Q", c.training.Q);
    }

    if (j.contains("training")) {
      const auto& t = j["training"];
      c.training.trials = t.value("trials", c.training.trials);
      c.training.seed = t.value("seed", c.training.seed);
      c.training.max_iterations = t.value("max_iterations", c.training.max_iterations);
      c.training.grid_size = t.value("grid_size", c.training.grid_size);
      c.training.gradient_check = t.value("gradient_check", c.training.gradient_check);
      c.training.threads = t.value("threads", c.training.threads);
      if (t.contains("perturbation")) {
        c.training.lognormal_std = t["perturbation"].value("lognormal_std", c.training.lognormal_std);
        c.training.additive_std = t["perturbation"].value("additive_std", c.training.additive_std);
      }
    }

    c.outputs = resolve(base_dir, j.value("outputs", std::string("out")));
    c.report_scale = parse_scale(j.value("report_scale", std::string("transformed")));
    c.normalization = parse_normalization(j.value("normalization", std::string("diagonal-sqrt")));
    c.prediction_grid = j.value("prediction_grid", c.prediction_grid);

    if (c.training.Q == 0) throw ConfigError("model.Q must be at least 1");
    if (c.training.trials == 0) throw ConfigError("training.trials must be at least 1");
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.training.seed = *o.seed;
  if (o.out) cfg.outputs = *o.out;
  if (o.scale) cfg.report_scale = *o.scale;
  if (o.trials) {
    if (*o.trials == 0) throw ConfigError("--trials must be at least 1");
    cfg.training.trials = *o.trials;
  }
  if (o.variant) cfg.variants = {*o.variant};
  if (o.Q) {
    if (*o.Q == 0) throw ConfigError("--q must be at least 1");
    cfg.training.Q = *o.Q;
  }
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["data"] = {{"path", c.data_path.generic_string()}, {"schema", schema_name(c.schema)}};
  Json tr = Json::array();
  for (auto t : c.transforms) tr.push_back(transform_name(t));
  j["transforms"] = tr;
  Json ch = Json::object();
  for (const auto& [name, m] : c.mask) {
    Json ranges = Json::array();
    for (const auto& r : m.ranges) ranges.push_back(Json::array({r.start, r.end}));
    ch[name] = {{"random_fraction", m.random_fraction}, {"ranges", ranges}};
  }
  j["mask"] = {{"seed", c.mask_seed}, {"channels", ch}};
  Json vs = Json::array();
  for (auto v : c.variants) vs.push_back(to_string(v));
  j["model"] = {{"variant", vs}, {"Q", c.training.Q}};
  j["training"] = {{"trials", c.training.trials},
                   {"seed", c.training.seed},
                   {"max_iterations", c.training.max_iterations},
                   {"grid_size", c.training.grid_size},
                   {"gradient_check", c.training.gradient_check},
                   {"perturbation",
                    {{"lognormal_std", c.training.lognormal_std}, {"additive_std", c.training.additive_std}}}};
  j["outputs"] = c.outputs.generic_string();
  j["report_scale"] = to_string(c.report_scale);
  j["normalization"] = to_string(c.normalization);
  j["prediction_grid"] = c.prediction_grid;
  return j;
}

TimeSeriesSet prepare_dataset(const ExperimentConfig& cfg, std::vector<std::string>* warnings) {
  auto raw = in_stage("load", [&] {
    if (!fs::exists(cfg.data_path)) throw DataError("data file not found: " + cfg.data_path.string());
    return load_csv(cfg.data_path, cfg.schema);
  });

  // Masking happens before transforms so that trends are fit on training points only.
  auto masked = in_stage("mask", [&] {
    MaskSpec spec;
    spec.seed = cfg.mask_seed;
    for (const auto& [name, m] : cfg.mask) {
      ChannelMask cm;
      cm.random_fraction = m.random_fraction;
      for (const auto& r : m.ranges)
        cm.ranges.push_back({resolve_bound(r.start, raw.origin), resolve_bound(r.end, raw.origin)});
      spec.channels[name] = std::move(cm);
    }
    return apply_mask(raw, spec);
  });
  if (warnings) warnings->insert(warnings->end(), masked.warnings.begin(), masked.warnings.end());

  return in_stage("transform", [&] { return transform_set(masked.set, cfg.transforms); });
}

Json models_json(const std::vector<VariantRun>& runs) {
  Json out = Json::array();
  for (const auto& r : runs) {
    Json trials = Json::array();
    for (const auto& t : r.fit.trials) trials.push_back(to_json(t));
    out.push_back({{"variant", to_string(r.variant)},
                   {"init", to_json(r.fit.init)},
                   {"trials", trials},
                   {"failures", r.fit.failures}});
  }
  return {{"runs", out}};
}

TrainSummary run_train(const ExperimentConfig& cfg) {
  TrainSummary s;
  s.dataset = prepare_dataset(cfg, &s.warnings);
  if (s.dataset.num_test() == 0) s.warnings.push_back("mask leaves no test points; metrics are empty");

  for (Variant v : cfg.variants) {
    VariantRun run;
    run.variant = v;
    TrainingConfig tc = cfg.training;
    tc.variant = v;
    run.fit = in_stage("fit", [&] { return fit(s.dataset, tc); });
    if (s.dataset.num_test() > 0)
      run.metrics = in_stage("aggregate", [&] { return aggregate_trials(run.fit.trials, s.dataset, cfg.report_scale); });
    else
      run.metrics.variant = to_string(v);
    run.correlation =
        in_stage("aggregate", [&] { return correlation_report(run.fit.trials.front().model, s.dataset, cfg.normalization); });
    s.runs.push_back(std::move(run));
  }

  in_stage("write", [&] {
    const auto& out = cfg.outputs;
    write_text_file(out / "models.json", dump(models_json(s.runs)));

    std::vector<MetricsReport> reports;
    for (const auto& r : s.runs) reports.push_back(r.metrics);
    write_text_file(out / "metrics.csv", metrics_csv(reports));

    Json corr = Json::array();
    for (const auto& r : s.runs) {
      Json c = to_json(r.correlation);
      c["variant"] = to_string(r.variant);
      corr.push_back(c);
    }
    write_text_file(out / "correlation.json", dump({{"runs", corr}}));

    QuerySpec q;
    q.grid = cfg.prediction_grid;
    for (std::size_t k = 0; k < s.runs.size(); ++k) {
      auto rows = run_predict(s.runs[k].fit.trials.front().model, s.dataset, q, cfg.report_scale);
      write_text_file(out / predictions_name(k, s.runs[k].variant), predictions_csv(rows));
    }
    write_text_file(out / "dataset.json", dump(to_json(s.dataset)));
    write_text_file(out / "run-manifest.json", dump(run_manifest(cfg, s)));
    return 0;
  });
  return s;
}

GPModel load_best_model(const fs::path& models_path, std::optional<Variant> variant) {
  Json j = read_json_file(models_path);
  try {
    const Json* runs = &j;
    if (j.is_object() && j.contains("runs")) runs = &j["runs"];
    if (j.is_object() && j.contains("kernel")) return model_from_json(j);
    for (const auto& r : *runs) {
      if (variant && parse_variant(r.at("variant").get<std::string>()) != *variant) continue;
      const auto& trials = r.at("trials");
      if (trials.empty()) throw DataError("models file has a run without completed trials");
      return trial_from_json(trials.front()).model;
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("models file: ") + e.what());
  }
  throw DataError(variant ? "models file has no run for variant " + to_string(*variant) : "models file has no runs");
}

InputSet build_query(const TimeSeriesSet& ts, const QuerySpec& q) {
  std::vector<std::size_t> chan;
  std::vector<double> t;
  for (const auto& name : q.channels) ts.channel_index(name);  // validates names

  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    const auto& ch = ts.channels[c];
    bool selected = q.channels.empty() || std::find(q.channels.begin(), q.channels.end(), ch.name) != q.channels.end();
    if (q.grid > 0 && selected && !ch.observations.empty()) {
      double a = ch.observations.front().t, b = ch.observations.back().t;
      for (std::size_t k = 0; k < q.grid; ++k) {
        chan.push_back(c);
        t.push_back(q.grid == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(q.grid - 1));
      }
    }
  }
  for (const auto& [name, times] : q.times) {
    std::size_t c = ts.channel_index(name);
    for (double v : times) {
      if (!std::isfinite(v)) throw ConfigError("query time for '" + name + "' is not finite");
      chan.push_back(c);
      t.push_back(v);
    }
  }
  return InputSet::time_points(std::move(chan), t);
}

std::vector<PredictionRow> run_predict(const GPModel& model, const TimeSeriesSet& ts, const QuerySpec& q,
                                       ReportScale scale) {
  if (model.spec.M() != ts.num_channels())
    throw DataError("model has " + std::to_string(model.spec.M()) + " channels but the dataset has " +
                    std::to_string(ts.num_channels()));
  auto query = build_query(ts, q);
  auto post = posterior(model, ts, query);
  return prediction_rows(post, ts, scale == ReportScale::original);
}

void run_synth(const fs::path& spec_path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  Json j;
  try {
    j = read_json_file(spec_path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  auto spec = synthetic_spec_from_json(j);
  if (seed) spec.seed = *seed;
  auto data = generate(spec);
  write_text_file(out_dir / "data.csv", synthetic_csv(spec, data));
  write_text_file(out_dir / "truth.json", dump(to_json(spec)));
  write_text_file(out_dir / "dataset.json", dump(to_json(data)));
}

}  // namespace mogp
