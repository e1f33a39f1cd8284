#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "seqdrift/common.hpp"
#include "seqdrift/error.hpp"
#include "seqdrift/io.hpp"

namespace seqdrift {

enum class Activation : std::uint8_t { sigmoid = 0, identity = 1 };

inline const char* to_string(Activation a) {
  return a == Activation::sigmoid ? "sigmoid" : "identity";
}

struct OselmParams {
  int input_dim = 0;            // D; output width equals input width (autoencoder)
  int hidden_dim = 0;           // H
  Activation activation = Activation::sigmoid;
  std::uint64_t seed = 0;
  double ridge_lambda = 0.01;   // regularizer seeding the inverse Gram state
  double forgetting_rate = 1.0; // in (0,1]; 1 keeps every past sample at full weight

  void validate() const {
    if (input_dim < 1) throw DimensionError("input_dim must be >= 1");
    if (hidden_dim < 1) throw DimensionError("hidden_dim must be >= 1");
    if (!(ridge_lambda > 0.0)) throw ConfigError("ridge_lambda must be > 0");
    if (!(forgetting_rate > 0.0) || forgetting_rate > 1.0)
      throw ConfigError("forgetting_rate must be in (0, 1]");
  }
};

// Single-hidden-layer autoencoder trained one sample at a time.
//
// The input weights and biases are random, fixed at construction. Only the
// output weights are trained, via a rank-1 regularized-least-squares update,
// so training never needs a batch or a pseudo-inverse. With forgetting rate 1
// the weights after n updates equal the batch ridge solution over those n
// samples; with rate < 1 older samples decay exponentially.
class OselmModel {
 public:
  explicit OselmModel(const OselmParams& params) : params_(params) {
    params_.validate();
    const int d = params_.input_dim;
    const int h = params_.hidden_dim;
    std::mt19937_64 rng(params_.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    alpha_.resize(d, h);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < h; ++j) alpha_(i, j) = unit(rng);
    bias_.resize(h);
    for (int j = 0; j < h; ++j) bias_(j) = unit(rng);
    beta_ = Eigen::MatrixXd::Zero(h, d);
    p_ = Eigen::MatrixXd::Identity(h, h) / params_.ridge_lambda;
  }

  const OselmParams& params() const { return params_; }
  int input_dim() const { return params_.input_dim; }
  int hidden_dim() const { return params_.hidden_dim; }
  std::int64_t trained_count() const { return trained_count_; }

  const Eigen::MatrixXd& alpha() const { return alpha_; }
  const Eigen::RowVectorXd& bias() const { return bias_; }
  const Eigen::MatrixXd& beta() const { return beta_; }
  const Eigen::MatrixXd& P() const { return p_; }

  // Hidden activations for one sample.
  Eigen::RowVectorXd hidden(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    check_dim(x);
    Eigen::RowVectorXd pre = x * alpha_ + bias_;
    if (params_.activation == Activation::sigmoid)
      return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return pre;
  }

  Eigen::RowVectorXd reconstruct(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return hidden(x) * beta_;
  }

  // Mean squared reconstruction error. Pure; no state changes.
  double anomaly_score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::RowVectorXd residual = x - reconstruct(x);
    return residual.squaredNorm() / static_cast<double>(params_.input_dim);
  }

  void seq_train(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    seq_train(x, params_.forgetting_rate);
  }

  // One rank-1 update toward reconstructing x, down-weighting history by
  // `rate` (1 = plain recursive least squares).
  void seq_train(const Eigen::Ref<const Eigen::RowVectorXd>& x, double rate) {
    check_dim(x);
    if (!x.allFinite()) throw DataError("seq_train: sample has non-finite coordinates");
    const double rho2 = rate * rate;
    const Eigen::RowVectorXd h = hidden(x);
    const Eigen::VectorXd ph = p_ * h.transpose();
    const double denom = rho2 + h * ph;
    if (denom <= 1e-12)
      throw NumericError("seq_train: update denominator is degenerate");
    p_ = (p_ - (ph * ph.transpose()) / denom) / rho2;
    p_ = 0.5 * (p_ + p_.transpose());  // keep P symmetric across long streams
    beta_ += (p_ * h.transpose()) * (x - h * beta_);
    ++trained_count_;
  }

  void save(std::ostream& os) const {
    io::write_magic(os, "SQEL");
    io::write_u8(os, 1);  // format version
    io::write_i64(os, params_.input_dim);
    io::write_i64(os, params_.hidden_dim);
    io::write_u8(os, static_cast<std::uint8_t>(params_.activation));
    io::write_u64(os, params_.seed);
    io::write_f64(os, params_.ridge_lambda);
    io::write_f64(os, params_.forgetting_rate);
    io::write_matrix(os, alpha_);
    io::write_row(os, bias_);
    io::write_matrix(os, beta_);
    io::write_matrix(os, p_);
    io::write_i64(os, trained_count_);
  }

  static OselmModel load(std::istream& is) {
    io::expect_magic(is, "SQEL");
    if (io::read_u8(is) != 1) throw IoError("unsupported model checkpoint version");
    OselmParams params;
    params.input_dim = static_cast<int>(io::read_i64(is));
    params.hidden_dim = static_cast<int>(io::read_i64(is));
    params.activation = static_cast<Activation>(io::read_u8(is));
    params.seed = io::read_u64(is);
    params.ridge_lambda = io::read_f64(is);
    params.forgetting_rate = io::read_f64(is);
    params.validate();
    OselmModel m(params);
    m.alpha_ = io::read_matrix(is);
    m.bias_ = io::read_row(is);
    m.beta_ = io::read_matrix(is);
    m.p_ = io::read_matrix(is);
    m.trained_count_ = io::read_i64(is);
    if (m.alpha_.rows() != params.input_dim || m.alpha_.cols() != params.hidden_dim ||
        m.bias_.size() != params.hidden_dim || m.beta_.rows() != params.hidden_dim ||
        m.beta_.cols() != params.input_dim || m.p_.rows() != params.hidden_dim ||
        m.p_.cols() != params.hidden_dim)
      throw IoError("model checkpoint shapes do not match parameters");
    return m;
  }

 private:
  void check_dim(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (x.size() != params_.input_dim)
      throw DimensionError("sample has " + std::to_string(x.size()) +
                           " coordinates, model expects " +
                           std::to_string(params_.input_dim));
  }

  OselmParams params_;
  Eigen::MatrixXd alpha_;      // D x H, frozen
  Eigen::RowVectorXd bias_;    // H, frozen
  Eigen::MatrixXd beta_;       // H x D, trained
  Eigen::MatrixXd p_;          // H x H inverse regularized Gram state
  std::int64_t trained_count_ = 0;
};

}  // namespace seqdrift
