#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seqdrift/common.hpp"
#include "seqdrift/detector.hpp"
#include "seqdrift/discriminator.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/oselm.hpp"
#include "seqdrift/reconstruction.hpp"
#include "seqdrift/streams.hpp"

namespace seqdrift {

enum class Method : std::uint8_t { proposed, baseline_no_detector, onlad_forgetting };
enum class LabelSource : std::uint8_t { provided, kmeans };
enum class DatasetSource : std::uint8_t { generator, csv, nslkdd };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::baseline_no_detector: return "baseline_no_detector";
    default: return "onlad_forgetting";
  }
}

struct DatasetSpec {
  DatasetSource source = DatasetSource::generator;
  DriftSchedule schedule;
  GenConfig gen;
  std::string csv_path;
  CsvSchema csv;
  std::string nslkdd_train_path;
  std::string nslkdd_test_path;
  NslKddConfig nslkdd;
};

struct TrainingOptions {
  int epochs = 3;
  LabelSource label_source = LabelSource::provided;
  int kmeans_clusters = 2;
};

struct ReportOptions {
  std::size_t rolling_window = 200;  // smoothing window for the accuracy timeline
  std::size_t timeline_stride = 50;
  std::size_t audit_stride = 1000;   // state-size sampling interval
};

struct ExperimentConfig {
  Method method = Method::proposed;
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  OselmParams oselm;  // input_dim is filled in from the data
  DetectorConfig detector;
  double k_err = 1.0;
  std::optional<double> theta_error_override;
  std::optional<double> theta_drift_override;
  ReconstructionConfig reconstruction;
  TrainingOptions training;
  ReportOptions report;
  std::optional<std::size_t> drift_at_override;
};

struct TraceRow {
  std::size_t index = 0;
  std::optional<int> true_label;
  int predicted_label = -1;
  double score = std::numeric_limits<double>::quiet_NaN();
  double dist = 0.0;
  StepMode mode = StepMode::normal;
  bool drift_detected = false;
};

struct DelayRecord {
  std::size_t true_drift = 0;
  std::size_t detected = 0;
  std::size_t delay = 0;
};

struct ExperimentReport {
  double accuracy_overall = std::numeric_limits<double>::quiet_NaN();
  std::size_t samples = 0;
  std::size_t labeled_samples = 0;
  std::vector<std::pair<std::size_t, double>> accuracy_timeline;
  std::vector<DelayRecord> detection_delays;
  std::vector<std::size_t> detections;  // every step where the decision fired
  int false_alarms = 0;
  int reconstruction_failures = 0;
  std::vector<std::pair<std::size_t, std::size_t>> state_bytes_timeline;
  std::vector<std::pair<std::string, double>> phase_timings_ms;
  std::vector<TraceRow> trace;
};

// ---------------------------------------------------------------------------
// Config file parsing (JSON; every field below has a default)

namespace cfgjson {

using nlohmann::json;

inline Activation parse_activation(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + s);
}

inline Method parse_method(const std::string& s) {
  if (s == "proposed") return Method::proposed;
  if (s == "baseline_no_detector") return Method::baseline_no_detector;
  if (s == "onlad_forgetting") return Method::onlad_forgetting;
  throw ConfigError("unknown method: " + s);
}

inline DriftKind parse_kind(const std::string& s) {
  if (s == "sudden") return DriftKind::sudden;
  if (s == "gradual") return DriftKind::gradual;
  if (s == "incremental") return DriftKind::incremental;
  if (s == "reoccurring") return DriftKind::reoccurring;
  throw ConfigError("unknown drift kind: " + s);
}

inline StreamProfile parse_profile(const std::string& s) {
  if (s == "gaussian_mixture") return StreamProfile::gaussian_mixture;
  if (s == "fan_spectrum") return StreamProfile::fan_spectrum;
  throw ConfigError("unknown stream profile: " + s);
}

inline DatasetSpec parse_dataset(const json& j) {
  DatasetSpec spec;
  const std::string source = j.value("source", std::string("generator"));
  if (source == "generator") {
    spec.source = DatasetSource::generator;
    const json g = j.value("generator", json::object());
    spec.schedule.kind = parse_kind(g.value("kind", std::string("sudden")));
    spec.schedule.drift_at = g.value("drift_at", std::size_t{0});
    if (g.contains("drift_end") && !g["drift_end"].is_null())
      spec.schedule.drift_end = g["drift_end"].get<std::size_t>();
    spec.gen.profile = parse_profile(g.value("profile", std::string("gaussian_mixture")));
    spec.gen.num_clusters = g.value("num_clusters", spec.gen.num_clusters);
    spec.gen.dim = g.value("dim", spec.gen.dim);
    spec.gen.train_count = g.value("train_count", spec.gen.train_count);
    spec.gen.test_count = g.value("test_count", spec.gen.test_count);
    spec.gen.default_sigma = g.value("sigma", spec.gen.default_sigma);
    if (g.contains("cluster_sigma"))
      spec.gen.cluster_sigma = g["cluster_sigma"].get<std::vector<double>>();
    spec.gen.drift_shift = g.value("drift_shift", spec.gen.drift_shift);
    spec.gen.drift_sigma_scale = g.value("drift_sigma_scale", spec.gen.drift_sigma_scale);
    spec.gen.drift_cluster = g.value("drift_cluster", spec.gen.drift_cluster);
    spec.gen.normalize =
        g.value("normalize", spec.gen.profile != StreamProfile::fan_spectrum);
    spec.gen.fan_noise = g.value("fan_noise", spec.gen.fan_noise);
    spec.gen.fan_peak_amp = g.value("fan_peak_amp", spec.gen.fan_peak_amp);
    spec.gen.fan_peak_shift = g.value("fan_peak_shift", spec.gen.fan_peak_shift);
  } else if (source == "csv") {
    spec.source = DatasetSource::csv;
    const json c = j.value("csv", json::object());
    spec.csv_path = c.value("path", std::string());
    if (spec.csv_path.empty()) throw ConfigError("dataset.csv.path is required");
    std::string delim = c.value("delimiter", std::string(","));
    if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
    spec.csv.delimiter = delim[0];
    spec.csv.has_header = c.value("has_header", true);
    spec.csv.label_column = c.value("label_column", std::string());
    if (c.contains("label_values"))
      spec.csv.label_values = c["label_values"].get<std::vector<std::string>>();
    spec.csv.train_rows = c.value("train_rows", std::size_t{0});
    spec.csv.normalize = c.value("normalize", true);
  } else if (source == "nslkdd") {
    spec.source = DatasetSource::nslkdd;
    const json n = j.value("nslkdd", json::object());
    spec.nslkdd_train_path = n.value("train_path", std::string());
    spec.nslkdd_test_path = n.value("test_path", std::string());
    if (spec.nslkdd_train_path.empty() || spec.nslkdd_test_path.empty())
      throw ConfigError("dataset.nslkdd needs train_path and test_path");
    spec.nslkdd.train_count = n.value("train_count", spec.nslkdd.train_count);
    spec.nslkdd.predrift_count = n.value("predrift_count", spec.nslkdd.predrift_count);
  } else {
    throw ConfigError("unknown dataset source: " + source);
  }
  return spec;
}

}  // namespace cfgjson

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using cfgjson::json;
  ExperimentConfig cfg;
  cfg.method = cfgjson::parse_method(j.value("method", std::string("proposed")));
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.dataset = cfgjson::parse_dataset(j.value("dataset", json::object()));
  if (cfg.dataset.source == DatasetSource::nslkdd) cfg.dataset.nslkdd.seed = mix_seed(cfg.seed, 7);

  const json o = j.value("oselm", json::object());
  cfg.oselm.hidden_dim = o.value("hidden_dim", 22);
  cfg.oselm.activation = cfgjson::parse_activation(o.value("activation", std::string("sigmoid")));
  cfg.oselm.ridge_lambda = o.value("ridge_lambda", 0.01);
  cfg.oselm.forgetting_rate = o.value("forgetting_rate", 1.0);
  cfg.oselm.seed = o.value("seed", mix_seed(cfg.seed, 22));

  const json d = j.value("detector", json::object());
  cfg.detector.window_size = d.value("window_size", 100);
  cfg.detector.reset_window_state = d.value("reset_window_state", true);
  cfg.detector.recent_weight = d.value("recent_weight", 1.0);
  cfg.k_err = d.value("k_err", 1.0);
  if (d.contains("theta_error") && !d["theta_error"].is_null())
    cfg.theta_error_override = d["theta_error"].get<double>();
  if (d.contains("theta_drift") && !d["theta_drift"].is_null())
    cfg.theta_drift_override = d["theta_drift"].get<double>();

  const json r = j.value("reconstruction", json::object());
  cfg.reconstruction.n_search = r.value("n_search", 50);
  cfg.reconstruction.n_update = r.value("n_update", 150);
  cfg.reconstruction.n_total = r.value("n_total", 600);
  cfg.reconstruction.seed = r.value("seed", mix_seed(cfg.seed, 23));
  cfg.reconstruction.k_err = cfg.k_err;
  cfg.reconstruction.validate();

  const json t = j.value("training", json::object());
  cfg.training.epochs = t.value("epochs", 3);
  const std::string src = t.value("label_source", std::string("provided"));
  if (src == "provided") cfg.training.label_source = LabelSource::provided;
  else if (src == "kmeans") cfg.training.label_source = LabelSource::kmeans;
  else throw ConfigError("unknown label_source: " + src);
  cfg.training.kmeans_clusters = t.value("kmeans_clusters", 2);

  const json rep = j.value("report", json::object());
  cfg.report.rolling_window = rep.value("rolling_window", std::size_t{200});
  cfg.report.timeline_stride = rep.value("timeline_stride", std::size_t{50});
  cfg.report.audit_stride = rep.value("audit_stride", std::size_t{1000});
  if (j.contains("drift_at") && !j["drift_at"].is_null())
    cfg.drift_at_override = j["drift_at"].get<std::size_t>();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    file >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Experiment driver

inline StreamData resolve_dataset(const ExperimentConfig& cfg) {
  switch (cfg.dataset.source) {
    case DatasetSource::generator:
      return gen_drift_stream(cfg.dataset.schedule, cfg.dataset.gen, mix_seed(cfg.seed, 3));
    case DatasetSource::csv:
      return load_csv(cfg.dataset.csv_path, cfg.dataset.csv);
    default:
      return prepare_nslkdd(cfg.dataset.nslkdd_train_path, cfg.dataset.nslkdd_test_path,
                            cfg.dataset.nslkdd);
  }
}

inline Discriminator fit_from_config(const ExperimentConfig& cfg, const StreamData& data) {
  if (data.train.empty()) throw DataError("experiment needs training samples");
  std::vector<int> labels;
  int num_classes;
  if (cfg.training.label_source == LabelSource::kmeans) {
    num_classes = cfg.training.kmeans_clusters;
    labels = kmeans_label(matrix_of(data.train), num_classes, mix_seed(cfg.seed, 21));
  } else {
    labels = labels_of(data.train);
    num_classes = data.meta.num_classes;
    for (int l : labels) num_classes = std::max(num_classes, l + 1);
  }
  OselmParams params = cfg.oselm;
  params.input_dim = data.meta.dim;
  Discriminator d = Discriminator::fit_initial(matrix_of(data.train), labels, num_classes,
                                               params, {cfg.training.epochs, cfg.k_err});
  if (cfg.theta_error_override || cfg.theta_drift_override)
    d.set_thresholds(cfg.theta_error_override.value_or(d.theta_error()),
                     cfg.theta_drift_override.value_or(d.theta_drift()));
  return d;
}

// Byte size of the canonical serialized pipeline state. Constant over the
// stream: nothing here grows with the number of processed samples.
inline std::size_t audit_state_size(const DriftDetector* detector, const Discriminator& d,
                                    const ModelReconstruction* recon) {
  std::ostringstream os;
  d.save(os);
  if (detector) detector->save(os);
  if (recon) recon->save(os);
  return static_cast<std::size_t>(os.tellp());
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const StreamData data = resolve_dataset(cfg);
  Discriminator d = fit_from_config(cfg, data);
  DriftDetector detector(d, cfg.detector);
  ModelReconstruction recon(cfg.reconstruction);

  ExperimentReport rep;
  rep.samples = data.test.size();
  rep.trace.reserve(data.test.size());

  std::size_t correct = 0;
  std::deque<bool> rolling;
  std::size_t rolling_correct = 0;

  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const StreamSample& s = data.test[i];
    TraceRow row;
    row.index = i;
    row.true_label = s.true_label;

    switch (cfg.method) {
      case Method::proposed: {
        const StepOutcome out = detector.step(d, recon, s.x);
        row.predicted_label = out.reported_label;
        row.score = out.score;
        row.dist = out.dist;
        row.mode = out.mode;
        row.drift_detected = out.drift_detected;
        if (out.drift_detected) rep.detections.push_back(i);
        if (out.reconstruction_failed) ++rep.reconstruction_failures;
        break;
      }
      case Method::baseline_no_detector: {
        const Prediction pred = d.predict(s.x);
        row.predicted_label = d.report_label(pred.label);
        row.score = pred.score;
        break;
      }
      case Method::onlad_forgetting: {
        const Prediction pred = d.predict(s.x);
        row.predicted_label = d.report_label(pred.label);
        row.score = pred.score;
        d.instance(pred.label).seq_train(s.x);  // uses the configured forgetting rate
        break;
      }
    }

    if (s.true_label) {
      ++rep.labeled_samples;
      const bool ok = row.predicted_label == *s.true_label;
      if (ok) ++correct;
      rolling.push_back(ok);
      if (ok) ++rolling_correct;
      if (rolling.size() > cfg.report.rolling_window) {
        if (rolling.front()) --rolling_correct;
        rolling.pop_front();
      }
      if (i % cfg.report.timeline_stride == 0 && !rolling.empty())
        rep.accuracy_timeline.emplace_back(
            i, static_cast<double>(rolling_correct) / static_cast<double>(rolling.size()));
    }

    if (cfg.report.audit_stride > 0 &&
        ((i + 1) % cfg.report.audit_stride == 0 || i + 1 == data.test.size())) {
      const bool with_detector = cfg.method == Method::proposed;
      rep.state_bytes_timeline.emplace_back(
          i + 1, audit_state_size(with_detector ? &detector : nullptr, d,
                                  with_detector ? &recon : nullptr));
    }
    rep.trace.push_back(std::move(row));
  }

  if (rep.labeled_samples > 0)
    rep.accuracy_overall = static_cast<double>(correct) / static_cast<double>(rep.labeled_samples);

  // Attribute detections: the first one at or after a true drift counts as
  // its detection; everything else is a false alarm.
  std::optional<std::size_t> drift_at = cfg.drift_at_override;
  if (!drift_at) drift_at = data.meta.drift_at;
  for (std::size_t det : rep.detections) {
    if (drift_at && det >= *drift_at) {
      bool already = false;
      for (const auto& rec : rep.detection_delays) already |= rec.true_drift == *drift_at;
      if (!already) {
        rep.detection_delays.push_back({*drift_at, det, det - *drift_at});
        continue;
      }
    }
    ++rep.false_alarms;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Per-phase timing report

// Mean wall-clock cost per sample of each pipeline phase, measured in
// isolation on the configured dataset. Reported in milliseconds.
inline std::vector<std::pair<std::string, double>> time_phases(const ExperimentConfig& cfg,
                                                               std::size_t samples_per_phase = 200) {
  const StreamData data = resolve_dataset(cfg);
  Discriminator d = fit_from_config(cfg, data);
  if (data.test.size() < 2) throw DataError("time_phases: test stream too short");

  auto sample_at = [&](std::size_t i) -> const Eigen::RowVectorXd& {
    return data.test[i % data.test.size()].x;
  };
  using clock = std::chrono::steady_clock;
  auto per_sample_ms = [&](auto&& body) {
    const auto start = clock::now();
    for (std::size_t i = 0; i < samples_per_phase; ++i) body(sample_at(i));
    const std::chrono::duration<double, std::milli> elapsed = clock::now() - start;
    return elapsed.count() / static_cast<double>(samples_per_phase);
  };

  std::vector<std::pair<std::string, double>> timings;
  double sink = 0.0;

  timings.emplace_back("label_prediction", per_sample_ms([&](const Eigen::RowVectorXd& x) {
                         sink += d.predict(x).score;
                       }));

  DriftDetector detector(d, cfg.detector);
  timings.emplace_back("distance_computation", per_sample_ms([&](const Eigen::RowVectorXd&) {
                         sink += detector.displacement(d);
                       }));

  ReconstructionConfig rc = cfg.reconstruction;
  ModelReconstruction recon(rc);
  recon.begin(d);
  for (int c = 0; c < d.num_classes(); ++c) recon.init_coord(sample_at(static_cast<std::size_t>(c)));

  std::vector<OselmModel> scratch;
  for (int c = 0; c < d.num_classes(); ++c) {
    OselmParams p = d.instance(c).params();
    p.seed = mix_seed(cfg.seed, 0xbe9cULL + static_cast<std::uint64_t>(c));
    scratch.emplace_back(p);
  }
  const Eigen::MatrixXd& cor = recon.state().cor;

  timings.emplace_back("retrain_without_prediction",
                       per_sample_ms([&](const Eigen::RowVectorXd& x) {
                         const int label = nearest_row_l1(cor, x);
                         scratch[static_cast<std::size_t>(label)].seq_train(x, 1.0);
                       }));

  timings.emplace_back("retrain_with_prediction", per_sample_ms([&](const Eigen::RowVectorXd& x) {
                         int best = 0;
                         double best_score = scratch[0].anomaly_score(x);
                         for (std::size_t c = 1; c < scratch.size(); ++c) {
                           const double sc = scratch[c].anomaly_score(x);
                           if (sc < best_score) {
                             best = static_cast<int>(c);
                             best_score = sc;
                           }
                         }
                         scratch[static_cast<std::size_t>(best)].seq_train(x, 1.0);
                       }));

  timings.emplace_back("coord_init", per_sample_ms([&](const Eigen::RowVectorXd& x) {
                         recon.init_coord(x);
                       }));
  timings.emplace_back("coord_update", per_sample_ms([&](const Eigen::RowVectorXd& x) {
                         recon.update_coord(x);
                       }));

  if (sink == 42.0e300) timings.clear();  // keep the measured work observable
  return timings;
}

// ---------------------------------------------------------------------------
// Report and trace output

inline void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot write trace file: " + path);
  file << "index,true_label,predicted_label,score,dist,mode,drift_detected\n";
  char buf[32];
  for (const auto& row : trace) {
    file << row.index << ',';
    if (row.true_label) file << *row.true_label;
    file << ',' << row.predicted_label << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.score);
    file << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.dist);
    file << buf << ',' << to_string(row.mode) << ',' << (row.drift_detected ? 1 : 0) << '\n';
  }
}

inline nlohmann::json report_to_json(const ExperimentReport& rep) {
  nlohmann::json j;
  if (rep.labeled_samples > 0) j["accuracy_overall"] = rep.accuracy_overall;
  else j["accuracy_overall"] = nullptr;
  j["samples"] = rep.samples;
  j["labeled_samples"] = rep.labeled_samples;
  j["accuracy_timeline"] = rep.accuracy_timeline;
  j["detections"] = rep.detections;
  j["detection_delays"] = nlohmann::json::array();
  for (const auto& rec : rep.detection_delays)
    j["detection_delays"].push_back(
        {{"true_drift", rec.true_drift}, {"detected", rec.detected}, {"delay", rec.delay}});
  j["false_alarms"] = rep.false_alarms;
  j["reconstruction_failures"] = rep.reconstruction_failures;
  j["state_bytes_timeline"] = rep.state_bytes_timeline;
  if (!rep.phase_timings_ms.empty()) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [name, ms] : rep.phase_timings_ms) t[name] = ms;
    j["phase_timings_ms"] = t;
  }
  return j;
}

}  // namespace seqdrift
