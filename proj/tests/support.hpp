#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace testsupport {

// Recursive enumeration of increasing subsequences, written independently of the library.
inline double enumerate_variation(const std::vector<std::complex<double>>& v, double r) {
  double best = 0.0;
  std::function<void(int, double)> go = [&](int last, double acc) {
    best = std::max(best, acc);
    for (int j = last + 1; j < int(v.size()); ++j)
      go(j, acc + std::pow(std::abs(v[std::size_t(j)] - v[std::size_t(last)]), r));
  };
  for (int i = 0; i < int(v.size()); ++i) go(i, 0.0);
  return std::pow(best, 1.0 / r);
}

inline std::vector<std::complex<double>> to_vec(const Eigen::VectorXcd& v) {
  return {v.data(), v.data() + v.size()};
}

inline Eigen::VectorXcd random_values(std::mt19937_64& g, int n, bool complex_vals) {
  std::normal_distribution<double> N;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = {N(g), complex_vals ? N(g) : 0.0};
  return v;
}

inline double rel_err(double a, double b) {
  double s = std::max(std::fabs(a), std::fabs(b));
  return s == 0.0 ? 0.0 : std::fabs(a - b) / s;
}

}  // namespace testsupport
