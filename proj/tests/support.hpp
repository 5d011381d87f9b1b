#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nhk/jacobiator.hpp"
#include "nhk/systems.hpp"

namespace nhk::test {

inline std::string data_file(const std::string& name) { return std::string(NHK_TEST_DATA) + "/" + name; }

inline std::vector<PointM> sample_points(const NonholonomicSystem& sys, std::size_t count,
                                         std::uint64_t seed = 7) {
  Lcg rng(seed);
  std::vector<PointM> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_point(sys, rng));
  return out;
}

inline std::vector<double> unit(std::size_t n, std::size_t i) {
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return v;
}

inline std::vector<double> column(const Matrix<double>& m, std::size_t j) {
  std::vector<double> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, j);
  return v;
}

inline std::vector<double> row(const Matrix<double>& m, std::size_t i) {
  std::vector<double> v(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) v[j] = m(i, j);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Index of `name` in `names`; -1 when absent.
inline std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return static_cast<std::size_t>(-1);
}

}  // namespace nhk::test
