#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "seqdrift/error.hpp"

// Little-endian binary primitives for checkpoint files. Doubles are written
// bit-for-bit so a load reproduces the saved state exactly.

namespace seqdrift::io {

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline void write_i64(std::ostream& os, std::int64_t v) {
  write_u64(os, static_cast<std::uint64_t>(v));
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  write_u64(os, bits);
}

inline std::uint8_t read_u8(std::istream& is) {
  int c = is.get();
  if (c == std::char_traits<char>::eof()) throw IoError("unexpected end of checkpoint");
  return static_cast<std::uint8_t>(c);
}

inline std::uint64_t read_u64(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw IoError("unexpected end of checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

inline std::int64_t read_i64(std::istream& is) {
  return static_cast<std::int64_t>(read_u64(is));
}

inline double read_f64(std::istream& is) {
  std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline void write_magic(std::ostream& os, const char tag[4]) {
  os.write(tag, 4);
}

inline void expect_magic(std::istream& is, const char tag[4]) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, tag, 4) != 0)
    throw IoError(std::string("bad checkpoint magic, expected ") + std::string(tag, 4));
}

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  write_i64(os, m.rows());
  write_i64(os, m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(os, m(i, j));
}

inline Eigen::MatrixXd read_matrix(std::istream& is) {
  const auto rows = read_i64(is);
  const auto cols = read_i64(is);
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 32))
    throw IoError("implausible matrix shape in checkpoint");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_f64(is);
  return m;
}

inline void write_row(std::ostream& os, const Eigen::RowVectorXd& v) {
  write_i64(os, v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) write_f64(os, v(j));
}

inline Eigen::RowVectorXd read_row(std::istream& is) {
  const auto n = read_i64(is);
  if (n < 0 || n > (1LL << 32)) throw IoError("implausible vector length in checkpoint");
  Eigen::RowVectorXd v(n);
  for (Eigen::Index j = 0; j < n; ++j) v(j) = read_f64(is);
  return v;
}

template <typename T>
void write_int_vec(std::ostream& os, const std::vector<T>& v) {
  write_i64(os, static_cast<std::int64_t>(v.size()));
  for (const T& x : v) write_i64(os, static_cast<std::int64_t>(x));
}

template <typename T>
std::vector<T> read_int_vec(std::istream& is) {
  const auto n = read_i64(is);
  if (n < 0 || n > (1LL << 32)) throw IoError("implausible vector length in checkpoint");
  std::vector<T> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<T>(read_i64(is));
  return v;
}

inline void write_f64_vec(std::ostream& os, const std::vector<double>& v) {
  write_i64(os, static_cast<std::int64_t>(v.size()));
  for (double x : v) write_f64(os, x);
}

inline std::vector<double> read_f64_vec(std::istream& is) {
  const auto n = read_i64(is);
  if (n < 0 || n > (1LL << 32)) throw IoError("implausible vector length in checkpoint");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = read_f64(is);
  return v;
}

}  // namespace seqdrift::io
