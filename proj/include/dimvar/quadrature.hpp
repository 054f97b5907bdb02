#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace dimvar {

struct QuadRule {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
};

// n-point Gauss-Legendre rule on [a, b] (Golub-Welsch).
QuadRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Globally adaptive 31-point Gauss-Kronrod on a finite interval; throws DomainError when
// the estimated error stays above max(abs_tol, rel_tol |I|) after max_depth bisections.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-10, unsigned max_depth = 18);

// Integral over [a, inf) of an oscillatory, decaying integrand: panels of width
// `panel` (a fraction of the oscillation period) get a fixed Gauss-Legendre rule and the
// partial sums are accelerated with Wynn's epsilon algorithm.
QuadResult integrate_oscillatory_tail(const std::function<double(double)>& f, double a, double panel,
                                      double tol = 1e-12, int max_panels = 400, int nodes = 16);

// Wynn epsilon extrapolation of a sequence of partial sums; returns (limit, error estimate).
QuadResult wynn_epsilon(const std::vector<double>& partial_sums);

}  // namespace dimvar
