#pragma once

#include <Eigen/Dense>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "seqdrift/common.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/io.hpp"
#include "seqdrift/oselm.hpp"
#include "seqdrift/running_stats.hpp"

namespace seqdrift {

struct Prediction {
  int label = 0;       // index of the winning instance
  double score = 0.0;  // that instance's anomaly score (minimum over instances)
};

struct DiscriminatorOptions {
  int epochs = 3;      // passes over the initial samples
  double k_err = 1.0;  // std multiplier for the error-trigger threshold
};

// One autoencoder instance per label. A sample is classified by the instance
// that reconstructs it best; the per-label means of the initial samples are
// kept as trained centroids for the drift detector, and the two run-time
// thresholds are calibrated from the same samples.
class Discriminator {
 public:
  static Discriminator fit_initial(const Eigen::MatrixXd& samples,
                                   const std::vector<int>& labels, int num_classes,
                                   const OselmParams& params,
                                   const DiscriminatorOptions& opt = {}) {
    if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
    if (samples.rows() == 0) throw DataError("fit_initial: no samples");
    if (static_cast<Eigen::Index>(labels.size()) != samples.rows())
      throw DimensionError("fit_initial: label count does not match sample count");
    if (params.input_dim != static_cast<int>(samples.cols()))
      throw DimensionError("fit_initial: sample width does not match input_dim");
    if (opt.epochs < 1) throw ConfigError("epochs must be >= 1");

    Discriminator d;
    d.dim_ = static_cast<int>(samples.cols());
    d.k_err_ = opt.k_err;
    d.train_cor_ = Eigen::MatrixXd::Zero(num_classes, d.dim_);
    d.train_num_.assign(num_classes, 0);
    d.label_map_.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) {
      d.label_map_[c] = c;
      OselmParams p = params;
      p.seed = mix_seed(params.seed, static_cast<std::uint64_t>(c));
      d.instances_.emplace_back(p);
    }

    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      if (c < 0 || c >= num_classes)
        throw DataError("fit_initial: label " + std::to_string(c) + " out of range");
      d.train_cor_.row(c) += samples.row(i);
      ++d.train_num_[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < num_classes; ++c) {
      if (d.train_num_[static_cast<std::size_t>(c)] == 0)
        throw DataError("fit_initial: class " + std::to_string(c) + " has no samples");
      d.train_cor_.row(c) /= static_cast<double>(d.train_num_[static_cast<std::size_t>(c)]);
    }

    // Initial training always runs at full sample weight; any forgetting rate
    // in `params` only applies to later stream-time updates.
    for (int pass = 0; pass < opt.epochs; ++pass)
      for (Eigen::Index i = 0; i < samples.rows(); ++i)
        d.instances_[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]
            .seq_train(samples.row(i), 1.0);

    d.calibrate(samples);
    return d;
  }

  int num_classes() const { return static_cast<int>(instances_.size()); }
  int dim() const { return dim_; }
  double theta_error() const { return theta_error_; }
  double theta_drift() const { return theta_drift_; }
  double k_err() const { return k_err_; }
  const Eigen::MatrixXd& train_cor() const { return train_cor_; }
  const std::vector<std::int64_t>& train_num() const { return train_num_; }
  const OselmModel& instance(int c) const { return instances_.at(static_cast<std::size_t>(c)); }
  OselmModel& instance(int c) { return instances_.at(static_cast<std::size_t>(c)); }

  // Label reported to the caller for an instance index. Identity until a
  // rebuild remaps fresh clusters onto the original label ids.
  int report_label(int instance) const {
    return label_map_.at(static_cast<std::size_t>(instance));
  }
  const std::vector<int>& label_map() const { return label_map_; }

  Prediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    check_dim(x);
    int best = 0;
    double best_score = instances_[0].anomaly_score(x);
    for (int c = 1; c < num_classes(); ++c) {
      const double s = instances_[static_cast<std::size_t>(c)].anomaly_score(x);
      if (s < best_score) {
        best = c;
        best_score = s;
      }
    }
    return Prediction{best, best_score};
  }

  // Recompute both thresholds from a sample set: each threshold is the mean
  // of the per-sample statistic plus (a multiple of) its population standard
  // deviation. Distances are L1 to the centroid of the predicted label.
  std::pair<double, double> calibrate(const Eigen::MatrixXd& samples) {
    if (samples.rows() == 0) throw DataError("calibrate: no samples");
    if (static_cast<int>(samples.cols()) != dim_)
      throw DimensionError("calibrate: sample width mismatch");
    RunningStats dist_stats;
    RunningStats err_stats;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const Prediction pred = predict(samples.row(i));
      dist_stats.add(l1_distance(samples.row(i), train_cor_.row(pred.label)));
      err_stats.add(pred.score);
    }
    theta_drift_ = dist_stats.mean() + dist_stats.stddev();
    theta_error_ = err_stats.mean() + k_err_ * err_stats.stddev();
    return {theta_error_, theta_drift_};
  }

  void set_thresholds(double theta_error, double theta_drift) {
    if (theta_error < 0.0 || theta_drift < 0.0)
      throw ConfigError("thresholds must be nonnegative");
    theta_error_ = theta_error;
    theta_drift_ = theta_drift;
  }

  // Swap in a rebuilt model: fresh instances, new centroids/counts, refreshed
  // thresholds, and the cluster-to-original-label mapping.
  void replace(std::vector<OselmModel>&& instances, Eigen::MatrixXd train_cor,
               std::vector<std::int64_t> train_num, double theta_error,
               double theta_drift, std::vector<int> label_map) {
    if (static_cast<int>(instances.size()) != num_classes() ||
        train_cor.rows() != num_classes() || train_cor.cols() != dim_ ||
        train_num.size() != instances.size() || label_map.size() != instances.size())
      throw DimensionError("replace: inconsistent rebuilt-model shapes");
    instances_ = std::move(instances);
    train_cor_ = std::move(train_cor);
    train_num_ = std::move(train_num);
    theta_error_ = theta_error;
    theta_drift_ = theta_drift;
    label_map_ = std::move(label_map);
  }

  void save(std::ostream& os) const {
    io::write_magic(os, "SQDC");
    io::write_u8(os, 1);
    io::write_i64(os, num_classes());
    io::write_i64(os, dim_);
    for (const auto& m : instances_) m.save(os);
    io::write_matrix(os, train_cor_);
    io::write_int_vec(os, train_num_);
    io::write_int_vec(os, label_map_);
    io::write_f64(os, theta_error_);
    io::write_f64(os, theta_drift_);
    io::write_f64(os, k_err_);
  }

  static Discriminator load(std::istream& is) {
    io::expect_magic(is, "SQDC");
    if (io::read_u8(is) != 1) throw IoError("unsupported discriminator checkpoint version");
    const auto num_classes = io::read_i64(is);
    if (num_classes < 1) throw IoError("discriminator checkpoint has no instances");
    Discriminator d;
    d.dim_ = static_cast<int>(io::read_i64(is));
    for (std::int64_t c = 0; c < num_classes; ++c) d.instances_.push_back(OselmModel::load(is));
    d.train_cor_ = io::read_matrix(is);
    d.train_num_ = io::read_int_vec<std::int64_t>(is);
    d.label_map_ = io::read_int_vec<int>(is);
    d.theta_error_ = io::read_f64(is);
    d.theta_drift_ = io::read_f64(is);
    d.k_err_ = io::read_f64(is);
    if (d.train_cor_.rows() != num_classes || d.train_cor_.cols() != d.dim_ ||
        d.train_num_.size() != d.instances_.size() || d.label_map_.size() != d.instances_.size())
      throw IoError("discriminator checkpoint shapes are inconsistent");
    return d;
  }

 private:
  Discriminator() = default;

  void check_dim(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (static_cast<int>(x.size()) != dim_)
      throw DimensionError("sample has " + std::to_string(x.size()) +
                           " coordinates, discriminator expects " + std::to_string(dim_));
  }

  std::vector<OselmModel> instances_;
  Eigen::MatrixXd train_cor_;            // C x D per-label means of initial samples
  std::vector<std::int64_t> train_num_;  // samples per label in initial training
  std::vector<int> label_map_;           // instance index -> reported label id
  double theta_error_ = 0.0;
  double theta_drift_ = 0.0;
  double k_err_ = 1.0;
  int dim_ = 0;
};

}  // namespace seqdrift
