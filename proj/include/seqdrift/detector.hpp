#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "seqdrift/common.hpp"
#include "seqdrift/discriminator.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/io.hpp"
#include "seqdrift/reconstruction.hpp"

namespace seqdrift {

struct DetectorConfig {
  int window_size = 100;           // samples accumulated before a drift decision
  bool reset_window_state = true;  // restart centroids/counts when a window opens
  double recent_weight = 1.0;      // <1 weights newer window samples more

  void validate() const {
    if (window_size < 1) throw ConfigError("window_size must be >= 1");
    if (!(recent_weight > 0.0) || recent_weight > 1.0)
      throw ConfigError("recent_weight must be in (0, 1]");
  }
};

struct DetectorState {
  bool drift = false;
  bool check = false;
  int win = 0;              // samples consumed by the open window
  Eigen::MatrixXd cor;      // C x D recent per-label centroids
  std::vector<double> num;  // per-label (weighted) sample counts
  double dist = 0.0;        // summed L1 displacement from the trained centroids
  int last_label = -1;
};

enum class StepMode : std::uint8_t { normal = 0, checking = 1, reconstructing = 2 };

inline const char* to_string(StepMode m) {
  switch (m) {
    case StepMode::normal: return "normal";
    case StepMode::checking: return "checking";
    default: return "reconstructing";
  }
}

struct StepOutcome {
  std::optional<Prediction> prediction;  // absent while the model is rebuilding
  int reported_label = -1;               // label used for accuracy accounting
  double score = std::numeric_limits<double>::quiet_NaN();
  double dist = 0.0;
  bool drift_detected = false;       // true only on the step where the decision fires
  bool reconstruction_done = false;  // rebuild completed and was swapped in
  bool reconstruction_failed = false;
  StepMode mode = StepMode::normal;
};

// Per-stream drift detector. While no rebuild is running it predicts every
// sample; a high anomaly score opens a fixed-size check window during which
// the predicted label's recent centroid follows the incoming samples. When
// the window fills, drift is declared if the summed L1 displacement of the
// recent centroids from the trained ones reaches the drift threshold, and
// every following sample is handed to the model rebuild until it completes.
class DriftDetector {
 public:
  DriftDetector(const Discriminator& d, const DetectorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    reset(d);
  }

  const DetectorConfig& config() const { return cfg_; }
  const DetectorState& state() const { return st_; }

  void reset(const Discriminator& d) {
    st_ = DetectorState{};
    st_.cor = d.train_cor();
    st_.num.assign(static_cast<std::size_t>(d.num_classes()), 0.0);
  }

  StepOutcome step(Discriminator& d, ModelReconstruction& recon,
                   const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (x.size() != d.dim())
      throw DimensionError("step: sample width does not match the model");
    if (!x.allFinite()) throw DataError("step: sample has non-finite coordinates");
    if (st_.cor.rows() != d.num_classes())
      throw DimensionError("step: detector state does not match the model");

    StepOutcome out;
    if (!st_.drift) {
      const Prediction pred = d.predict(x);
      st_.last_label = pred.label;
      out.prediction = pred;
      out.reported_label = d.report_label(pred.label);
      out.score = pred.score;

      if (!st_.check && pred.score >= d.theta_error()) {
        st_.check = true;
        st_.win = 0;
        if (cfg_.reset_window_state) {
          st_.cor = d.train_cor();
          st_.num.assign(st_.num.size(), 0.0);
        }
      }

      if (st_.check && st_.win < cfg_.window_size) {
        out.mode = StepMode::checking;
        const int c = pred.label;
        auto& n = st_.num[static_cast<std::size_t>(c)];
        // recent_weight < 1 shrinks the effective count so newer samples
        // dominate; at 1 this is the plain running mean.
        const double aged = n * cfg_.recent_weight;
        st_.cor.row(c) = (st_.cor.row(c) * aged + x) / (aged + 1.0);
        n = aged + 1.0;
        st_.dist = displacement(d);
        ++st_.win;
        if (st_.win == cfg_.window_size) {
          st_.check = false;
          if (st_.dist >= d.theta_drift()) {
            st_.drift = true;
            out.drift_detected = true;
          }
        }
      }
      out.dist = st_.dist;
    }

    if (st_.drift) {
      out.mode = StepMode::reconstructing;
      if (!recon.active()) recon.begin(d);
      try {
        const auto res = recon.step(d, x);
        out.reported_label = res.reported_label;
        if (!out.prediction) out.score = res.score;
        if (!res.active) {
          out.reconstruction_done = true;
          reset(d);  // thresholds and centroids were just replaced
        }
      } catch (const ReconstructionError&) {
        recon.abort();
        reset(d);
        out.reconstruction_failed = true;
      } catch (const NumericError&) {
        recon.abort();
        reset(d);
        out.reconstruction_failed = true;
      }
    }
    return out;
  }

  // Fresh recomputation of the summed centroid displacement.
  double displacement(const Discriminator& d) const {
    double total = 0.0;
    for (int c = 0; c < st_.cor.rows(); ++c)
      total += l1_distance(st_.cor.row(c), d.train_cor().row(c));
    return total;
  }

  void save(std::ostream& os) const {
    io::write_magic(os, "SQDT");
    io::write_u8(os, 1);
    io::write_i64(os, cfg_.window_size);
    io::write_u8(os, cfg_.reset_window_state ? 1 : 0);
    io::write_f64(os, cfg_.recent_weight);
    io::write_u8(os, st_.drift ? 1 : 0);
    io::write_u8(os, st_.check ? 1 : 0);
    io::write_i64(os, st_.win);
    io::write_matrix(os, st_.cor);
    io::write_f64_vec(os, st_.num);
    io::write_f64(os, st_.dist);
    io::write_i64(os, st_.last_label);
  }

 private:
  DetectorConfig cfg_;
  DetectorState st_;
};

}  // namespace seqdrift
