#include "dimvar/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>

#include "dimvar/error.hpp"

namespace dimvar {

QuadRule gauss_legendre(int n, double a, double b) {
  require(n >= 1, "gauss_legendre: need n >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  r.x = mid + half * es.eigenvalues().array();
  r.w = (2.0 * half) * es.eigenvectors().row(0).array().square().transpose();
  return r;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                     double rel_tol, unsigned max_depth) {
  if (a == b) return {};
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Piece {
    double a, b, value, error;
    unsigned depth;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto rule = [&](double lo, double hi, unsigned depth) {
    double err = 0.0;
    double v = GK::integrate(f, lo, hi, 0, 0.0, &err);
    return Piece{lo, hi, v, err, depth};
  };
  // Global bisection of the worst piece until the summed error meets max(abs_tol, rel_tol |I|).
  std::priority_queue<Piece> heap;
  heap.push(rule(a, b, 0));
  double total = heap.top().value, err = heap.top().error;
  const std::size_t max_pieces = std::size_t{1} << std::min(max_depth, 14u);
  while (err > std::max(abs_tol, rel_tol * std::fabs(total)) && heap.size() < max_pieces) {
    Piece w = heap.top();
    if (w.depth >= max_depth) break;
    heap.pop();
    const double mid = 0.5 * (w.a + w.b);
    Piece l = rule(w.a, mid, w.depth + 1), r = rule(mid, w.b, w.depth + 1);
    total += l.value + r.value - w.value;
    err += l.error + r.error - w.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  err = 0.0;
  for (; !heap.empty(); heap.pop()) {
    total += heap.top().value;
    err += heap.top().error;
  }
  if (!(err <= std::max(abs_tol, rel_tol * std::fabs(total)) * 10.0) || !std::isfinite(total))
    throw DomainError("quadrature did not converge: achieved error " + std::to_string(err) + " on [" +
                      std::to_string(a) + ", " + std::to_string(b) + "]");
  return {total, err};
}

QuadResult wynn_epsilon(const std::vector<double>& s) {
  const std::size_t n = s.size();
  if (n == 0) return {};
  if (n < 3) return {s.back(), n == 2 ? std::fabs(s[1] - s[0]) : 0.0};
  // e[k] holds the current column; standard lozenge recursion.
  std::vector<double> prev(n, 0.0), cur(s);
  double best = s.back(), best_err = std::fabs(s[n - 1] - s[n - 2]);
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(n - k);
    bool ok = true;
    for (std::size_t i = 0; i + k < n; ++i) {
      double d = cur[i + 1] - cur[i];
      if (d == 0.0 || !std::isfinite(d)) {
        ok = false;
        break;
      }
      next[i] = (k == 1 ? 0.0 : prev[i + 1]) + 1.0 / d;
    }
    if (!ok) break;
    prev = cur;
    cur = next;
    if (k % 2 == 0 && cur.size() >= 2) {  // even columns approximate the limit
      double est = cur.back(), e = std::fabs(cur.back() - cur[cur.size() - 2]);
      if (e < best_err) {
        best = est;
        best_err = e;
      }
    }
  }
  return {best, best_err};
}

QuadResult integrate_oscillatory_tail(const std::function<double(double)>& f, double a, double panel,
                                      double tol, int max_panels, int nodes) {
  require(panel > 0, "integrate_oscillatory_tail: panel width must be positive");
  require(nodes >= 2, "integrate_oscillatory_tail: need at least two nodes per panel");
  const QuadRule rule = gauss_legendre(nodes, 0.0, 1.0);
  std::vector<double> sums;
  double acc = 0.0;
  QuadResult last{0.0, INFINITY};
  for (int k = 0; k < max_panels; ++k) {
    const double lo = a + k * panel;
    double p = 0.0;
    for (int i = 0; i < nodes; ++i) p += rule.w[i] * f(lo + panel * rule.x[i]);
    acc += panel * p;
    sums.push_back(acc);
    if (sums.size() >= 8 && sums.size() % 2 == 0) {
      std::vector<double> tail(sums.end() - std::min<std::ptrdiff_t>(sums.size(), 24), sums.end());
      QuadResult w = wynn_epsilon(tail);
      if (w.error < tol && std::fabs(w.value - last.value) < tol) return {w.value, w.error};
      last = w;
    }
  }
  throw DomainError("oscillatory tail did not converge: last estimate change " +
                    std::to_string(last.error));
}

}  // namespace dimvar
