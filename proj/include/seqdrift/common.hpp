#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace seqdrift {

// Sum of absolute coordinate differences between two rows.
inline double l1_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                          const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  return (a - b).cwiseAbs().sum();
}

// Index of the row of `points` nearest to `x` in L1; ties go to the lowest index.
inline int nearest_row_l1(const Eigen::MatrixXd& points,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int best = 0;
  double best_dist = l1_distance(points.row(0), x);
  for (int c = 1; c < points.rows(); ++c) {
    const double d = l1_distance(points.row(c), x);
    if (d < best_dist) {
      best = c;
      best_dist = d;
    }
  }
  return best;
}

// splitmix64 step; derives independent sub-seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace seqdrift
