#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seqdrift/common.hpp"
#include "seqdrift/error.hpp"

namespace seqdrift {

struct StreamSample {
  Eigen::RowVectorXd x;
  std::optional<int> true_label;
  std::size_t index = 0;
};

struct StreamMeta {
  int dim = 0;
  int num_classes = 0;  // 0 when unknown
  std::optional<std::size_t> drift_at;  // known true drift onset in the test stream
  Eigen::RowVectorXd feat_min;  // normalization bounds fitted on the training rows
  Eigen::RowVectorXd feat_max;
  bool normalized = false;
};

struct StreamData {
  std::vector<StreamSample> train;
  std::vector<StreamSample> test;
  StreamMeta meta;
};

inline Eigen::MatrixXd matrix_of(const std::vector<StreamSample>& samples) {
  if (samples.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), samples[0].x.size());
  for (std::size_t i = 0; i < samples.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = samples[i].x;
  return m;
}

inline std::vector<int> labels_of(const std::vector<StreamSample>& samples) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.true_label) throw DataError("sample " + std::to_string(s.index) + " has no label");
    labels.push_back(*s.true_label);
  }
  return labels;
}

// Per-feature min-max scaling fitted on training rows. Features map to
// [0, 1]; values outside the fitted range clip, constant features map to 0.
class Normalizer {
 public:
  void fit(const Eigen::MatrixXd& train) {
    if (train.rows() == 0) throw DataError("normalizer: no training rows");
    min_ = train.colwise().minCoeff();
    max_ = train.colwise().maxCoeff();
  }

  Eigen::RowVectorXd apply(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::RowVectorXd out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double range = max_(j) - min_(j);
      out(j) = range > 0.0 ? std::clamp((x(j) - min_(j)) / range, 0.0, 1.0) : 0.0;
    }
    return out;
  }

  Eigen::RowVectorXd denormalize(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::RowVectorXd out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) out(j) = x(j) * (max_(j) - min_(j)) + min_(j);
    return out;
  }

  const Eigen::RowVectorXd& feat_min() const { return min_; }
  const Eigen::RowVectorXd& feat_max() const { return max_; }

 private:
  Eigen::RowVectorXd min_;
  Eigen::RowVectorXd max_;
};

namespace detail {

inline void normalize_streams(StreamData& data) {
  Normalizer norm;
  norm.fit(matrix_of(data.train));
  for (auto& s : data.train) s.x = norm.apply(s.x);
  for (auto& s : data.test) s.x = norm.apply(s.x);
  data.meta.feat_min = norm.feat_min();
  data.meta.feat_max = norm.feat_max();
  data.meta.normalized = true;
}

inline std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  char delimiter = ',';
  bool has_header = true;
  std::string label_column;  // empty = unlabeled stream
  std::vector<std::string> label_values;  // optional closed label set
  std::size_t train_rows = 0;  // leading rows used as the training split
  bool normalize = true;
};

inline StreamData load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open CSV file: " + path);

  std::string line;
  std::size_t line_no = 0;
  int label_idx = -1;
  int dim = -1;

  if (schema.has_header) {
    if (!std::getline(file, line)) throw DataError(path + ": empty file");
    ++line_no;
    const auto header = detail::split_fields(line, schema.delimiter);
    if (!schema.label_column.empty()) {
      for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == schema.label_column) label_idx = static_cast<int>(j);
      if (label_idx < 0)
        throw DataError(path + ": label column '" + schema.label_column + "' not found");
    }
    dim = static_cast<int>(header.size()) - (label_idx >= 0 ? 1 : 0);
  } else if (!schema.label_column.empty()) {
    try {
      label_idx = std::stoi(schema.label_column);
    } catch (const std::exception&) {
      throw ConfigError("headerless CSV needs a numeric label column index, got '" +
                        schema.label_column + "'");
    }
  }

  auto label_id = [&](const std::string& text, std::size_t row) -> int {
    if (!schema.label_values.empty()) {
      for (std::size_t k = 0; k < schema.label_values.size(); ++k)
        if (schema.label_values[k] == text) return static_cast<int>(k);
      throw DataError(path + " row " + std::to_string(row) + ": unknown label value '" +
                      text + "'");
    }
    try {
      std::size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw DataError(path + " row " + std::to_string(row) + ": label '" + text +
                      "' is not an integer and no label set was declared");
    }
  };

  std::vector<StreamSample> rows;
  int max_label = -1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line, schema.delimiter);
    const int row_dim = static_cast<int>(fields.size()) - (label_idx >= 0 ? 1 : 0);
    if (dim < 0) dim = row_dim;
    if (row_dim != dim || (label_idx >= 0 && label_idx >= static_cast<int>(fields.size())))
      throw DataError(path + " row " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim + (label_idx >= 0 ? 1 : 0)) + " fields, got " +
                      std::to_string(fields.size()));
    StreamSample s;
    s.x.resize(dim);
    int j_out = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (static_cast<int>(j) == label_idx) {
        if (!fields[j].empty()) s.true_label = label_id(fields[j], line_no);
        continue;
      }
      try {
        std::size_t used = 0;
        s.x(j_out) = std::stod(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument(fields[j]);
      } catch (const std::exception&) {
        throw DataError(path + " row " + std::to_string(line_no) + ": field '" + fields[j] +
                        "' is not numeric");
      }
      ++j_out;
    }
    if (s.true_label) max_label = std::max(max_label, *s.true_label);
    rows.push_back(std::move(s));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  if (schema.train_rows > rows.size())
    throw ConfigError(path + ": train_rows exceeds the " + std::to_string(rows.size()) +
                      " available rows");

  StreamData data;
  data.meta.dim = dim;
  data.meta.num_classes = !schema.label_values.empty()
                              ? static_cast<int>(schema.label_values.size())
                              : max_label + 1;
  data.train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(schema.train_rows));
  data.test.assign(rows.begin() + static_cast<std::ptrdiff_t>(schema.train_rows), rows.end());
  for (std::size_t i = 0; i < data.train.size(); ++i) data.train[i].index = i;
  for (std::size_t i = 0; i < data.test.size(); ++i) data.test[i].index = i;
  if (schema.normalize) {
    if (data.train.empty())
      throw ConfigError(path + ": normalization needs train_rows >= 1");
    detail::normalize_streams(data);
  }
  return data;
}

inline void write_csv(const std::string& path, const std::vector<StreamSample>& samples,
                      bool with_label) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot write CSV file: " + path);
  if (samples.empty()) throw DataError("write_csv: nothing to write");
  const Eigen::Index dim = samples[0].x.size();
  for (Eigen::Index j = 0; j < dim; ++j) file << 'f' << j << ',';
  file << (with_label ? "label\n" : "\n");
  char buf[32];
  for (const auto& s : samples) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", s.x(j));
      file << buf << ',';
    }
    if (with_label && s.true_label) file << *s.true_label;
    file << '\n';
  }
}

// ---------------------------------------------------------------------------
// NSL-KDD preparation

struct NslKddConfig {
  std::uint64_t seed = 0;
  std::size_t train_count = 2522;    // initial-training draw
  std::size_t predrift_count = 8333; // stream prefix drawn from the training pool
};

// Builds the two-label intrusion stream: "normal"/"neptune" rows only, the
// three categorical columns dropped (38 numeric features), a seeded draw
// from the training pool for initial training plus the stream prefix, and
// the full filtered test file as the post-shift suffix.
inline StreamData prepare_nslkdd(const std::string& train_path, const std::string& test_path,
                                 const NslKddConfig& cfg) {
  auto load_pool = [](const std::string& path) {
    std::ifstream file(path);
    if (!file)
      throw IoError("NSL-KDD raw file not found: " + path +
                    " (download KDDTrain+.txt/KDDTest+.txt from the NSL-KDD "
                    "distribution and point the dataset config at them)");
    std::vector<std::pair<Eigen::RowVectorXd, int>> pool;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = detail::split_fields(line, ',');
      if (fields.size() < 42)
        throw DataError(path + " row " + std::to_string(line_no) + ": expected >= 42 fields");
      const std::string& label = fields[41];
      int id;
      if (label == "normal") id = 0;
      else if (label == "neptune") id = 1;
      else continue;
      Eigen::RowVectorXd x(38);
      int j_out = 0;
      for (int j = 0; j < 41; ++j) {
        if (j >= 1 && j <= 3) continue;  // protocol/service/flag are categorical
        try {
          x(j_out++) = std::stod(fields[static_cast<std::size_t>(j)]);
        } catch (const std::exception&) {
          throw DataError(path + " row " + std::to_string(line_no) + ": field " +
                          std::to_string(j) + " is not numeric");
        }
      }
      pool.emplace_back(std::move(x), id);
    }
    return pool;
  };

  auto train_pool = load_pool(train_path);
  auto test_pool = load_pool(test_path);
  if (train_pool.size() < cfg.train_count + cfg.predrift_count)
    throw DataError("NSL-KDD training pool has " + std::to_string(train_pool.size()) +
                    " usable rows, need " + std::to_string(cfg.train_count + cfg.predrift_count));
  if (test_pool.empty()) throw DataError("NSL-KDD test pool is empty after filtering");

  std::mt19937_64 rng_train(mix_seed(cfg.seed, 11));
  std::shuffle(train_pool.begin(), train_pool.end(), rng_train);
  std::mt19937_64 rng_test(mix_seed(cfg.seed, 12));
  std::shuffle(test_pool.begin(), test_pool.end(), rng_test);

  StreamData data;
  data.meta.dim = 38;
  data.meta.num_classes = 2;
  data.meta.drift_at = cfg.predrift_count;
  for (std::size_t i = 0; i < cfg.train_count; ++i)
    data.train.push_back({std::move(train_pool[i].first), train_pool[i].second, i});
  for (std::size_t i = 0; i < cfg.predrift_count; ++i) {
    auto& row = train_pool[cfg.train_count + i];
    data.test.push_back({std::move(row.first), row.second, i});
  }
  for (std::size_t i = 0; i < test_pool.size(); ++i)
    data.test.push_back(
        {std::move(test_pool[i].first), test_pool[i].second, cfg.predrift_count + i});
  detail::normalize_streams(data);
  return data;
}

// ---------------------------------------------------------------------------
// Unsupervised initial labeling

// Lloyd k-means with spread-out seeding; deterministic per seed. An emptied
// cluster is re-seeded from the sample farthest from its assigned centroid.
inline std::vector<int> kmeans_label(const Eigen::MatrixXd& samples, int num_clusters,
                                     std::uint64_t seed, int max_iters = 100) {
  if (num_clusters < 1) throw ConfigError("kmeans: num_clusters must be >= 1");
  if (samples.rows() == 0) throw DataError("kmeans: no samples");
  const Eigen::Index n = samples.rows();
  const int k = num_clusters;
  std::mt19937_64 rng(seed);

  Eigen::MatrixXd centers(k, samples.cols());
  {  // distance-weighted seeding
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = samples.row(first(rng));
    Eigen::VectorXd d2 = (samples.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        double target = unit(rng) * total;
        for (; pick < n - 1; ++pick) {
          target -= d2(pick);
          if (target <= 0.0) break;
        }
      } else {
        pick = first(rng);
      }
      centers.row(c) = samples.row(pick);
      d2 = d2.cwiseMin((samples.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (samples.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (samples.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best = c;
          best_d = d;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, samples.cols());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += samples.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (samples.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = samples.row(far);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Synthetic drift streams

enum class DriftKind : std::uint8_t { sudden, gradual, incremental, reoccurring };

inline const char* to_string(DriftKind k) {
  switch (k) {
    case DriftKind::sudden: return "sudden";
    case DriftKind::gradual: return "gradual";
    case DriftKind::incremental: return "incremental";
    default: return "reoccurring";
  }
}

struct DriftSchedule {
  DriftKind kind = DriftKind::sudden;
  std::size_t drift_at = 0;
  std::optional<std::size_t> drift_end;  // ramp end, or the reoccurring revert point

  void validate() const {
    if (drift_end && !(drift_at < *drift_end))
      throw ConfigError("drift_at must precede drift_end");
    if (!drift_end && kind != DriftKind::sudden)
      throw ConfigError(std::string(to_string(kind)) + " drift needs drift_end");
  }
};

enum class StreamProfile : std::uint8_t { gaussian_mixture, fan_spectrum };

struct GenConfig {
  StreamProfile profile = StreamProfile::gaussian_mixture;
  int num_clusters = 2;
  int dim = 8;
  std::size_t train_count = 1000;
  std::size_t test_count = 10000;
  std::vector<double> cluster_sigma;  // per-cluster spread; default_sigma when empty
  double default_sigma = 0.05;
  double drift_shift = 0.2;        // signed per-dim displacement of the drifted cluster
  double drift_sigma_scale = 1.0;  // post-drift spread multiplier for that cluster
  int drift_cluster = -1;          // -1 = last cluster
  bool normalize = true;           // fan profiles keep their natural scale by default

  // fan_spectrum knobs
  double fan_noise = 0.02;
  double fan_peak_amp = 1.0;
  double fan_peak_shift = 8.0;  // bins the damaged-fan harmonics move

  double sigma_of(int cluster) const {
    if (cluster_sigma.empty()) return default_sigma;
    return cluster_sigma[static_cast<std::size_t>(cluster) % cluster_sigma.size()];
  }
};

namespace detail {

inline double cluster_level(int cluster, int num_clusters) {
  if (num_clusters <= 1) return 0.5;
  return 0.25 + 0.5 * static_cast<double>(cluster) / static_cast<double>(num_clusters - 1);
}

// Mixture concept: each cluster sits on its own level in every dimension;
// the new concept displaces the drifted cluster's level by drift_shift and
// rescales its spread by drift_sigma_scale.
inline Eigen::RowVectorXd mixture_mean(const GenConfig& cfg, int cluster, double drift_t) {
  Eigen::RowVectorXd mean =
      Eigen::RowVectorXd::Constant(cfg.dim, cluster_level(cluster, cfg.num_clusters));
  const int drifted = cfg.drift_cluster < 0 ? cfg.num_clusters - 1 : cfg.drift_cluster;
  if (cluster == drifted && drift_t != 0.0)
    mean.array() += cfg.drift_shift * drift_t;
  return mean;
}

inline Eigen::RowVectorXd mixture_sample(const GenConfig& cfg, int cluster, double drift_t,
                                         std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::RowVectorXd x = mixture_mean(cfg, cluster, drift_t);
  const int drifted = cfg.drift_cluster < 0 ? cfg.num_clusters - 1 : cfg.drift_cluster;
  double sigma = cfg.sigma_of(cluster);
  if (cluster == drifted)
    sigma *= 1.0 + (cfg.drift_sigma_scale - 1.0) * drift_t;
  for (int j = 0; j < cfg.dim; ++j) x(j) += sigma * gauss(rng);
  return x;
}

constexpr int kFanDim = 511;

// Narrow-band spectrum: harmonic peaks over a rectified noise floor. The
// damaged variant moves the harmonic train and adds unbalance sidebands.
inline Eigen::RowVectorXd fan_sample(const GenConfig& cfg, double drift_t,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::RowVectorXd x(kFanDim);
  for (int j = 0; j < kFanDim; ++j) x(j) = cfg.fan_noise * std::abs(gauss(rng));

  const double base[4] = {60.0, 120.0, 180.0, 240.0};
  const double amp_old[4] = {1.0, 0.6, 0.4, 0.25};
  const double amp_new[4] = {1.15, 0.5, 0.5, 0.3};
  const double width = 2.0;
  auto add_peak = [&](double center, double amp) {
    const int lo = std::max(0, static_cast<int>(center - 5.0 * width));
    const int hi = std::min(kFanDim - 1, static_cast<int>(center + 5.0 * width));
    for (int j = lo; j <= hi; ++j) {
      const double z = (static_cast<double>(j) - center) / width;
      x(j) += amp * std::exp(-0.5 * z * z);
    }
  };
  for (int p = 0; p < 4; ++p) {
    const double jitter = 1.0 + 0.05 * gauss(rng);
    const double center = base[p] * (1.0 + drift_t * cfg.fan_peak_shift / base[0]);
    const double amp =
        cfg.fan_peak_amp * (amp_old[p] + drift_t * (amp_new[p] - amp_old[p])) * jitter;
    add_peak(center, amp);
  }
  if (drift_t > 0.0) {  // unbalance sidebands around the shifted fundamental
    const double f0 = base[0] * (1.0 + drift_t * cfg.fan_peak_shift / base[0]);
    add_peak(f0 - 6.0, 0.3 * cfg.fan_peak_amp * drift_t);
    add_peak(f0 + 6.0, 0.3 * cfg.fan_peak_amp * drift_t);
  }
  return x;
}

}  // namespace detail

// Seeded synthetic streams for the four drift shapes. The training split and
// the pre-drift stream always come from the old concept; identical seeds
// give identical pre-drift samples whatever the schedule kind.
inline StreamData gen_drift_stream(const DriftSchedule& schedule, const GenConfig& config,
                                   std::uint64_t seed) {
  schedule.validate();
  GenConfig cfg = config;
  if (cfg.profile == StreamProfile::fan_spectrum) {
    cfg.dim = detail::kFanDim;
    cfg.num_clusters = 1;
  }
  if (cfg.num_clusters < 1) throw ConfigError("num_clusters must be >= 1");
  if (cfg.dim < 1) throw ConfigError("dim must be >= 1");
  const int drifted = cfg.drift_cluster < 0 ? cfg.num_clusters - 1 : cfg.drift_cluster;
  if (drifted >= cfg.num_clusters) throw ConfigError("drift_cluster out of range");

  StreamData data;
  data.meta.dim = cfg.dim;
  data.meta.num_classes = cfg.num_clusters;
  data.meta.drift_at = schedule.drift_at;

  auto emit = [&](std::vector<StreamSample>& out, std::size_t count, bool test_stream,
                  std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick_cluster(0, cfg.num_clusters - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
      const int cluster = pick_cluster(rng);
      double t = 0.0;  // new-concept intensity for this sample
      if (test_stream && i >= schedule.drift_at) {
        switch (schedule.kind) {
          case DriftKind::sudden:
            t = 1.0;
            break;
          case DriftKind::gradual: {
            if (i >= *schedule.drift_end) {
              t = 1.0;
            } else {
              const double p =
                  static_cast<double>(i - schedule.drift_at) /
                  static_cast<double>(*schedule.drift_end - schedule.drift_at);
              t = unit(rng) < p ? 1.0 : 0.0;
            }
            break;
          }
          case DriftKind::incremental: {
            t = std::min(1.0, static_cast<double>(i - schedule.drift_at) /
                                  static_cast<double>(*schedule.drift_end - schedule.drift_at));
            break;
          }
          case DriftKind::reoccurring:
            t = i < *schedule.drift_end ? 1.0 : 0.0;
            break;
        }
      }
      StreamSample s;
      s.index = i;
      s.true_label = cluster;
      s.x = cfg.profile == StreamProfile::fan_spectrum
                ? detail::fan_sample(cfg, t, rng)
                : detail::mixture_sample(cfg, cluster, t, rng);
      out.push_back(std::move(s));
    }
  };

  std::mt19937_64 rng_train(mix_seed(seed, 1));
  emit(data.train, cfg.train_count, false, rng_train);
  std::mt19937_64 rng_test(mix_seed(seed, 2));
  emit(data.test, cfg.test_count, true, rng_test);

  if (cfg.normalize) detail::normalize_streams(data);
  return data;
}

}  // namespace seqdrift
