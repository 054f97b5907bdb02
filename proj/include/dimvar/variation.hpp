#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "dimvar/dyadic.hpp"
#include "dimvar/error.hpp"

namespace dimvar {

// Strictly increasing dyadic times with complex samples.
struct SamplePath {
  int rho = 20;
  std::vector<std::int64_t> ticks;  // time = tick * 2^-rho
  Eigen::VectorXcd values;

  SamplePath() = default;
  SamplePath(std::vector<double> times, Eigen::VectorXcd vals, int rho = 20);
  SamplePath(std::vector<Dyadic> times, Eigen::VectorXcd vals);

  Eigen::Index size() const { return values.size(); }
  double time(Eigen::Index i) const;
  Dyadic dyadic_time(Eigen::Index i) const { return Dyadic{ticks[std::size_t(i)], rho}; }
  std::vector<double> times() const;
  void validate() const;
};

struct VariationReport {
  double r = 1.0;
  double value = 0.0;
  std::vector<Eigen::Index> witness;
  std::vector<int> block_exponents;  // n for each entry of block_values
  std::vector<double> block_values;
  double long_value = 0.0;

  double short_value() const;  // (sum block_values^r)^(1/r)
};

namespace detail {
VariationReport vr_dp(const Eigen::VectorXcd& v, double r);
double vr_brute(const Eigen::VectorXcd& v, double r, int cap);
}  // namespace detail

// Exact r-variation of the finite sequence `values` (sup over increasing subsequences),
// O(n^2) dynamic programming with witness. Accepts any Eigen vector expression.
template <class Derived>
VariationReport vr_exact(const Eigen::DenseBase<Derived>& values, double r) {
  require(values.size() > 0, "vr_exact: empty path");
  require(r >= 1.0 && std::isfinite(r), "vr_exact: need finite r >= 1");
  Eigen::VectorXcd v = values.derived().template cast<std::complex<double>>();
  return detail::vr_dp(v, r);
}

inline VariationReport vr_exact(const SamplePath& path, double r) {
  path.validate();
  return vr_exact(path.values, r);
}

// Convenience: just the value.
template <class Derived>
double variation(const Eigen::DenseBase<Derived>& values, double r) {
  return vr_exact(values, r).value;
}

inline constexpr int kExhaustiveCap = 14;

// Enumerates all subsequences. Oracle only; refuses paths longer than `cap`.
template <class Derived>
double vr_exhaustive(const Eigen::DenseBase<Derived>& values, double r, int cap = kExhaustiveCap) {
  require(values.size() > 0, "vr_exhaustive: empty path");
  require(r >= 1.0 && std::isfinite(r), "vr_exhaustive: need finite r >= 1");
  require(values.size() <= cap, "vr_exhaustive: path longer than oracle cap");
  Eigen::VectorXcd v = values.derived().template cast<std::complex<double>>();
  return detail::vr_brute(v, r, cap);
}

inline double vr_exhaustive(const SamplePath& path, double r, int cap = kExhaustiveCap) {
  path.validate();
  return vr_exhaustive(path.values, r, cap);
}

// Right side of the dyadic block bound: sum over levels l = 0..L of the l^r norm of the
// level-l increments. `path` must be exactly the closed grid 2^n + k 2^(n-L), k = 0..2^L.
double block_variation_bound(const SamplePath& path, int n, double r);

// Long variation over the times 2^n in the grid and per-block short variations over the
// closed blocks [2^n, 2^(n+1)]. Every power of two between the first and last time must be
// a sample time.
VariationReport long_short_split(const SamplePath& path, double r);

struct ContinuityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

// lhs = (sum_i |F(t_i + h) - F(t_i)|^r dt)^(1/r) over in-grid pairs; rhs = V_r(F) h^(1/r).
ContinuityCheck modulus_of_continuity_check(const SamplePath& path, double r, const Dyadic& h);

struct DerivativeBounds {
  double product_bound = 0.0;  // (int |a|^2 dt/t)^(1/4) (int |t a'|^2 dt/t)^(1/4)
  double block_bound = 0.0;  // max over touched dyadic blocks of (int_block |t a'|^2 dt/t)^(1/2)
  double square_bound = 0.0;  // (int |t a'|^2 dt/t)^(1/2) over the whole range
};

// Integral bounds for V_r, r >= 2, by trapezoid quadrature on the sample grid. If
// `derivative` is empty, central differences are used. `need_v15` demands a >= 0.
DerivativeBounds derivative_variation_bounds(const SamplePath& path, double r,
                                             const Eigen::VectorXcd& derivative = {},
                                             bool need_v15 = true);

}  // namespace dimvar
