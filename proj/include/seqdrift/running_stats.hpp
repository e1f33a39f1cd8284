#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>

#include "seqdrift/io.hpp"

namespace seqdrift {

// Welford accumulator. variance() is the population variance (divide by N),
// which is what the threshold formulas use.
class RunningStats {
 public:
  void add(double v) {
    ++n_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return n_ > 0 ? mean_ : 0.0; }
  double variance() const { return n_ > 0 ? m2_ / static_cast<double>(n_) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }

  void save(std::ostream& os) const {
    io::write_u64(os, n_);
    io::write_f64(os, mean_);
    io::write_f64(os, m2_);
  }

  static RunningStats load(std::istream& is) {
    RunningStats s;
    s.n_ = io::read_u64(is);
    s.mean_ = io::read_f64(is);
    s.m2_ = io::read_f64(is);
    return s;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace seqdrift
