#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "seqdrift/common.hpp"
#include "seqdrift/discriminator.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/io.hpp"
#include "seqdrift/oselm.hpp"
#include "seqdrift/running_stats.hpp"

namespace seqdrift {

struct ReconstructionConfig {
  int n_search = 50;   // samples spent spreading out the label coordinates
  int n_update = 150;  // samples after which coordinate refinement stops
  int n_total = 600;   // samples consumed by a full rebuild
  std::uint64_t seed = 0;
  double k_err = 1.0;  // std multiplier for the refreshed error threshold

  void validate() const {
    if (n_search < 1) throw ConfigError("n_search must be >= 1");
    if (n_update < n_search) throw ConfigError("n_update must be >= n_search");
    if (n_total / 2 < n_update) throw ConfigError("n_total/2 must be >= n_update");
  }
};

enum class ReconstructionPhase : std::uint8_t {
  coord_init = 0,      // spread-maximizing coordinate seeding
  coord_update = 1,    // sequential refinement of the coordinates
  retrain_coord = 2,   // retrain fresh instances, labels from coordinates
  retrain_model = 3,   // retrain fresh instances, labels from the instances
};

struct ReconstructionState {
  std::int64_t count = 0;
  int seeded = 0;               // coordinate rows filled so far
  bool counts_reset = false;    // per-coordinate counts switched to seed counts
  Eigen::MatrixXd cor;          // C x D coordinate workspace
  std::vector<std::int64_t> num;
  std::vector<OselmModel> fresh_models;
  RunningStats dist_log;        // coordinate distances seen while retraining
  RunningStats err_log;         // reconstruction errors seen while retraining
  Eigen::MatrixXd old_train_cor;  // centroids of the model being replaced
  std::vector<int> old_label_map;
};

// Rebuilds the discriminative model from the stream alone after a drift:
// first C incoming samples seed the label coordinates, further samples move
// them apart and refine them, then two retraining stages feed fresh model
// instances, labeled first by nearest coordinate and finally by the fresh
// instances themselves. Completion swaps the fresh state into the
// discriminator and refreshes both thresholds from the retraining logs.
class ModelReconstruction {
 public:
  explicit ModelReconstruction(const ReconstructionConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
  }

  const ReconstructionConfig& config() const { return cfg_; }
  bool active() const { return active_; }
  const ReconstructionState& state() const { return st_; }

  void begin(const Discriminator& d) {
    st_ = ReconstructionState{};
    st_.cor = d.train_cor();  // placeholder until seeds arrive
    st_.num.assign(static_cast<std::size_t>(d.num_classes()), 0);
    st_.old_train_cor = d.train_cor();
    st_.old_label_map = d.label_map();
    for (int c = 0; c < d.num_classes(); ++c) {
      OselmParams p = d.instance(c).params();
      p.seed = mix_seed(cfg_.seed, 0x5eedULL + static_cast<std::uint64_t>(c));
      st_.fresh_models.emplace_back(p);
    }
    active_ = true;
  }

  void abort() {
    st_ = ReconstructionState{};
    active_ = false;
  }

  // Coordinate seeding/spreading. The first C calls fill the coordinate rows
  // directly; afterwards a sample replaces the one coordinate whose
  // substitution most increases the total pairwise L1 spread, or none if no
  // substitution increases it.
  void init_coord(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const int c_total = static_cast<int>(st_.cor.rows());
    if (st_.seeded < c_total) {
      st_.cor.row(st_.seeded++) = x;
      return;
    }
    double best = pairwise_spread(st_.cor);
    int chosen = -1;
    for (int c = 0; c < c_total; ++c) {
      const Eigen::RowVectorXd saved = st_.cor.row(c);
      st_.cor.row(c) = x;
      const double spread = pairwise_spread(st_.cor);
      st_.cor.row(c) = saved;
      if (spread > best) {
        best = spread;
        chosen = c;
      }
    }
    if (chosen != -1) st_.cor.row(chosen) = x;
  }

  // Sequential k-means style refinement: move the L1-nearest coordinate
  // toward the sample by a running-mean step.
  void update_coord(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const int label = nearest_row_l1(st_.cor, x);
    auto& n = st_.num[static_cast<std::size_t>(label)];
    st_.cor.row(label) = (st_.cor.row(label) * static_cast<double>(n) + x) /
                         static_cast<double>(n + 1);
    ++n;
  }

  struct StepResult {
    bool active = true;        // false once the rebuild has completed
    int cluster = -1;          // workspace cluster the sample was assigned to
    int reported_label = -1;   // cluster mapped onto the original label ids
    double score = std::numeric_limits<double>::quiet_NaN();
    ReconstructionPhase phase = ReconstructionPhase::coord_init;
  };

  // Consume one stream sample. Exactly one phase body runs per sample; the
  // phase is chosen by how many samples the rebuild has already consumed.
  // Returns active = false on the sample that completes the rebuild, after
  // swapping the fresh model into `d`.
  StepResult step(Discriminator& d, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (!active_) throw ReconstructionError("reconstruct_step called while inactive");
    if (!x.allFinite()) throw DataError("reconstruct_step: non-finite sample");
    const std::int64_t pos = st_.count;
    StepResult res;

    if (pos < cfg_.n_search) {
      res.phase = ReconstructionPhase::coord_init;
      init_coord(x);
      res.cluster = nearest_row_l1(st_.cor, x);
    } else if (pos < cfg_.n_update) {
      res.phase = ReconstructionPhase::coord_update;
      reset_counts_once();
      res.cluster = nearest_row_l1(st_.cor, x);
      update_coord(x);
    } else if (pos < cfg_.n_total / 2) {
      res.phase = ReconstructionPhase::retrain_coord;
      reset_counts_once();
      res.cluster = nearest_row_l1(st_.cor, x);
      retrain(res.cluster, x, res);
    } else {
      res.phase = ReconstructionPhase::retrain_model;
      reset_counts_once();
      res.cluster = 0;
      double best = st_.fresh_models[0].anomaly_score(x);
      for (int c = 1; c < static_cast<int>(st_.fresh_models.size()); ++c) {
        const double s = st_.fresh_models[static_cast<std::size_t>(c)].anomaly_score(x);
        if (s < best) {
          best = s;
          res.cluster = c;
        }
      }
      retrain(res.cluster, x, res);
    }

    res.reported_label = map_cluster(res.cluster);
    ++st_.count;
    if (st_.count == cfg_.n_total) {
      finalize(d);
      st_.count = 0;
      active_ = false;
      res.active = false;
      return res;
    }
    res.active = true;
    return res;
  }

  // Original label id a workspace cluster stands for: the label of the
  // nearest centroid of the model being replaced.
  int map_cluster(int cluster) const {
    const int nearest = nearest_row_l1(st_.old_train_cor, st_.cor.row(cluster));
    return st_.old_label_map[static_cast<std::size_t>(nearest)];
  }

  void save(std::ostream& os) const {
    io::write_magic(os, "SQRC");
    io::write_u8(os, 1);
    io::write_u8(os, active_ ? 1 : 0);
    io::write_i64(os, st_.count);
    io::write_i64(os, st_.seeded);
    io::write_u8(os, st_.counts_reset ? 1 : 0);
    io::write_matrix(os, st_.cor);
    io::write_int_vec(os, st_.num);
    io::write_i64(os, static_cast<std::int64_t>(st_.fresh_models.size()));
    for (const auto& m : st_.fresh_models) m.save(os);
    st_.dist_log.save(os);
    st_.err_log.save(os);
    io::write_matrix(os, st_.old_train_cor);
    io::write_int_vec(os, st_.old_label_map);
  }

 private:
  static double pairwise_spread(const Eigen::MatrixXd& cor) {
    double total = 0.0;
    for (int j = 0; j + 1 < cor.rows(); ++j)
      for (int k = j + 1; k < cor.rows(); ++k) total += l1_distance(cor.row(j), cor.row(k));
    return total;
  }

  // Each seed sample counts once toward its coordinate's running mean.
  void reset_counts_once() {
    if (st_.counts_reset) return;
    for (int c = 0; c < static_cast<int>(st_.num.size()); ++c)
      st_.num[static_cast<std::size_t>(c)] = c < st_.seeded ? 1 : 0;
    st_.counts_reset = true;
  }

  void retrain(int cluster, const Eigen::Ref<const Eigen::RowVectorXd>& x, StepResult& res) {
    auto& model = st_.fresh_models[static_cast<std::size_t>(cluster)];
    res.score = model.anomaly_score(x);
    st_.err_log.add(res.score);
    st_.dist_log.add(l1_distance(st_.cor.row(cluster), x));
    model.seq_train(x, 1.0);
  }

  void finalize(Discriminator& d) {
    const int c_total = static_cast<int>(st_.cor.rows());
    std::vector<int> label_map(static_cast<std::size_t>(c_total));
    for (int c = 0; c < c_total; ++c) {
      if (st_.num[static_cast<std::size_t>(c)] == 0)
        throw ReconstructionError("rebuild left cluster " + std::to_string(c) +
                                  " empty; previous model retained");
      label_map[static_cast<std::size_t>(c)] = map_cluster(c);
    }
    const double theta_drift = st_.dist_log.mean() + st_.dist_log.stddev();
    const double theta_error = st_.err_log.mean() + cfg_.k_err * st_.err_log.stddev();
    d.replace(std::move(st_.fresh_models), st_.cor, st_.num, theta_error, theta_drift,
              std::move(label_map));
    st_ = ReconstructionState{};
  }

  ReconstructionConfig cfg_;
  ReconstructionState st_;
  bool active_ = false;
};

}  // namespace seqdrift
