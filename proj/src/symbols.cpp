#include "dimvar/symbols.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <optional>
#include <unsupported/Eigen/FFT>

#include "dimvar/error.hpp"
#include "dimvar/quadrature.hpp"
#include "dimvar/special.hpp"
#include "dimvar/variation.hpp"

namespace dimvar {

namespace {

void check_alpha(double alpha) { require(alpha > 0.0 && alpha < 1.0, "fractional order must lie in (0, 1)"); }

void check_xi(const Symbol& m, const Eigen::VectorXd& xi) {
  require(xi.size() == m.d(), "frequency has the wrong dimension");
}

// int_0^inf s^-alpha psi(t + s) ds: singular core by s = sigma^(1/(1-alpha)), then an
// accelerated panel sum for the tail.
FracValue weyl_integral(const std::function<double(double)>& psi, double t, double alpha, double panel,
                        double rel_tol) {
  const double p = 1.0 / (1.0 - alpha);
  auto core_f = [&](double sigma) { return psi(t + std::pow(sigma, p)) * p; };
  QuadResult core = integrate(core_f, 0.0, std::pow(panel, 1.0 - alpha), rel_tol * 1e-3, rel_tol, 20);
  auto tail_f = [&](double s) { return std::pow(s, -alpha) * psi(t + s); };
  const double tol = rel_tol * std::max(std::fabs(core.value), 1e-3);
  QuadResult tail = integrate_oscillatory_tail(tail_f, panel, 0.5 * panel, tol, 4000, 12);
  return {core.value + tail.value, core.error + tail.error};
}

}  // namespace

double ball2_symbol(int d, const Eigen::VectorXd& xi) {
  require(d >= 1 && xi.size() == d, "ball2_symbol: bad dimension");
  return lambda_nu(0.5 * d, 2.0 * M_PI * ball2_normalized_radius(d) * xi.norm());
}

double cube_symbol(int d, const Eigen::VectorXd& xi) {
  require(d >= 1 && xi.size() == d, "cube_symbol: bad dimension");
  double p = 1.0;
  for (int i = 0; i < d; ++i) p *= sinc_pi(xi[i]);
  return p;
}

Symbol Symbol::ball2(int d) {
  Symbol s;
  s.form_ = Form::Ball2;
  s.d_ = d;
  s.rho_ = ball2_normalized_radius(d);
  s.L_ = ballq_isotropic_constant(2.0, d);
  s.body_ = normalized(BodySpec::ball(2.0, d));
  return s;
}

Symbol Symbol::cube(int d) {
  Symbol s;
  s.form_ = Form::Cube;
  s.d_ = d;
  s.rho_ = 0.5;
  s.L_ = 1.0 / std::sqrt(12.0);
  s.body_ = normalized(BodySpec::cube(d));
  return s;
}

Symbol Symbol::monte_carlo(const BodySpec& body, long samples, std::uint64_t seed) {
  require(samples >= 1, "Monte Carlo symbol needs samples");
  Symbol s;
  s.form_ = Form::Table;
  s.prov_ = Provenance::MonteCarlo;
  s.d_ = body.d;
  s.body_ = normalized(body, 200000, seed);
  s.rho_ = s.body_.euclid_radius();
  CounterRng rng(seed, "symbol-table", s.body_.hash());
  s.table_.resize(body.d, samples);
  Eigen::VectorXd x;
  for (long i = 0; i < samples; ++i) {
    sample_uniform(s.body_, rng, x);
    s.table_.col(i) = x;
  }
  if (body.kind == BodySpec::Kind::BallQ) {
    s.L_ = ballq_isotropic_constant(body.q, body.d);
  } else {
    s.L_ = std::sqrt(s.table_.array().square().mean());
  }
  return s;
}

Symbol Symbol::for_body(const BodySpec& body, long samples, std::uint64_t seed) {
  if (body.is_ball2()) return ball2(body.d);
  if (body.is_cube()) return cube(body.d);
  return monte_carlo(body, samples, seed);
}

double Symbol::operator()(const Eigen::VectorXd& xi) const {
  switch (form_) {
    case Form::Ball2:
      return lambda_nu(0.5 * d_, 2.0 * M_PI * rho_ * xi.norm());
    case Form::Cube:
      return cube_symbol(d_, xi);
    case Form::Table:
      return (2.0 * M_PI * (xi.transpose() * table_).array()).cos().mean();
  }
  return 0.0;
}

double Symbol::radial_derivative(const Eigen::VectorXd& xi) const {
  switch (form_) {
    case Form::Ball2: {
      const double nu = 0.5 * d_, z = 2.0 * M_PI * rho_ * xi.norm();
      return -z * z * lambda_nu(nu + 1.0, z) / (2.0 * (nu + 1.0));
    }
    case Form::Cube:
    case Form::Table:
      return xi.dot(gradient(xi));
  }
  return 0.0;
}

Eigen::VectorXd Symbol::gradient(const Eigen::VectorXd& xi) const {
  switch (form_) {
    case Form::Ball2: {
      const double n2 = xi.squaredNorm();
      if (n2 == 0.0) return Eigen::VectorXd::Zero(d_);
      return radial_derivative(xi) / n2 * xi;
    }
    case Form::Cube: {
      Eigen::VectorXd f(d_), g(d_), pre(d_ + 1), suf(d_ + 1);
      for (int i = 0; i < d_; ++i) f[i] = sinc_pi(xi[i]);
      pre[0] = 1.0;
      suf[d_] = 1.0;
      for (int i = 0; i < d_; ++i) pre[i + 1] = pre[i] * f[i];
      for (int i = d_ - 1; i >= 0; --i) suf[i] = suf[i + 1] * f[i];
      for (int i = 0; i < d_; ++i) g[i] = sinc_pi_prime(xi[i]) * pre[i] * suf[i + 1];
      return g;
    }
    case Form::Table: {
      Eigen::ArrayXd ph = 2.0 * M_PI * (xi.transpose() * table_).array().transpose();
      return -2.0 * M_PI * (table_ * ph.sin().matrix()) / double(table_.cols());
    }
  }
  return {};
}

double Symbol::half_period(const Eigen::VectorXd& xi) const {
  if (form_ == Form::Cube) {
    const double m = xi.cwiseAbs().maxCoeff();
    return m > 0 ? 1.0 / m : kInf;
  }
  const double n = xi.norm();
  return n > 0 ? 1.0 / (2.0 * rho_ * n) : kInf;
}

namespace {

// Nonzero |xi_i| for the cube law; tiny weights are dropped (they shift the law by at most
// their own size) since the inclusion-exclusion formula divides by their product.
std::vector<double> cube_weights(const Eigen::VectorXd& xi) {
  const double big = xi.cwiseAbs().maxCoeff();
  std::vector<double> w;
  for (Eigen::Index i = 0; i < xi.size(); ++i)
    if (std::fabs(xi[i]) > 1e-9 * big) w.push_back(std::fabs(xi[i]));
  require(w.size() <= 12, "cube marginal law: more than 12 active coordinates");
  return w;
}

// sum_S (-1)^|S| (y - w_S)_+^p / (p! prod w) over subsets S of the weights.
double box_spline(const std::vector<double>& w, double y, int p) {
  const std::size_t k = w.size();
  long double acc = 0.0L, prod = 1.0L;
  for (double x : w) prod *= x;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    long double shift = 0.0L;
    int sign = 1;
    for (std::size_t i = 0; i < k; ++i)
      if (mask >> i & 1u) {
        shift += w[i];
        sign = -sign;
      }
    const long double z = (long double)y - shift;
    if (z > 0) acc += sign * (p == 0 ? 1.0L : std::pow(z, (long double)p));
  }
  return double(acc / (prod * std::tgamma(p + 1.0L)));
}

}  // namespace

double Symbol::marginal_extent(const Eigen::VectorXd& xi) const {
  require(has_marginal(), "marginal law needs a closed-form symbol");
  check_xi(*this, xi);
  return form_ == Form::Ball2 ? rho_ * xi.norm() : 0.5 * xi.cwiseAbs().sum();
}

double Symbol::marginal_tail(const Eigen::VectorXd& xi, double s) const {
  require(s >= 0.0, "marginal_tail: s must be nonnegative");
  const double R = marginal_extent(xi);
  if (s >= R) return 0.0;
  if (form_ == Form::Ball2) {
    const double a = s / R;
    return 0.5 * boost::math::ibeta(0.5 * (d_ + 1), 0.5, 1.0 - a * a);
  }
  const auto w = cube_weights(xi);
  return box_spline(w, R - s, int(w.size()));
}

double Symbol::marginal_density(const Eigen::VectorXd& xi, double s) const {
  require(s >= 0.0, "marginal_density: s must be nonnegative");
  const double R = marginal_extent(xi);
  if (s >= R) return 0.0;
  if (form_ == Form::Ball2) {
    const double a = s / R;
    const double c = std::exp(std::lgamma(0.5 * d_ + 1.0) - std::lgamma(0.5 * (d_ + 1)) - 0.5 * std::log(M_PI));
    return c / R * std::pow(1.0 - a * a, 0.5 * (d_ - 1));
  }
  const auto w = cube_weights(xi);
  return box_spline(w, R - s, int(w.size()) - 1);
}

std::vector<double> Symbol::marginal_breakpoints(const Eigen::VectorXd& xi) const {
  const double R = marginal_extent(xi);
  std::vector<double> b{0.0, R};
  if (form_ == Form::Cube && R > 0) {
    const auto w = cube_weights(xi);
    for (std::uint32_t mask = 0; mask < (1u << w.size()); ++mask) {
      double shift = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (mask >> i & 1u) shift += w[i];
      const double x = R - shift;
      if (x > 0.0 && x < R) b.push_back(x);
    }
  }
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double x : b)
    if (out.empty() || x - out.back() > 1e-12 * std::max(R, 1e-300)) out.push_back(x);
  return out;
}

namespace {

// Quadrature over [0, R] for integrands c(s) * trig(2 pi u s) with u <= u_max, where
// c(s) = (2 pi s)^alpha * (tail or density). Graded panels resolve the s^alpha endpoint
// and, for the ball, the (R - s)^power endpoint.
class MarginalRule {
 public:
  MarginalRule(const Symbol& m, const Eigen::VectorXd& xi, double alpha, bool tail, double u_max)
      : m_(m), xi_(xi), alpha_(alpha), tail_(tail) {
    build(u_max);
  }

  double u_max() const { return u_max_; }

  void build(double u_max) {
    u_max_ = u_max;
    s_.clear();
    c_.clear();
    const auto br = m_.marginal_breakpoints(xi_);
    const double R = br.back();
    const double width = 1.0 / (2.0 * std::max(u_max, 1e-300));
    const bool ball = m_.body().is_ball2();
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double a = br[i], b = br[i + 1];
      const bool gl = (a == 0.0), gr = ball && b == R;
      const double h0 = std::min((b - a) / 4.0, width);
      double lo = a, hi = b;
      if (gl) {
        graded(a, h0, +1.0);
        lo = a + h0;
      }
      if (gr) {
        graded(b, h0, -1.0);
        hi = b - h0;
      }
      const int n = std::max(1, int(std::ceil((hi - lo) / width)));
      for (int k = 0; k < n; ++k) panel(lo + (hi - lo) * k / n, lo + (hi - lo) * (k + 1) / n, rule12_);
    }
  }

  // sum c_j trig(phase - 2 pi u s_j), trig = sin or cos
  double sum(double u, bool sine) const {
    const double ph = 0.5 * M_PI * alpha_;
    double acc = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) {
      const double x = ph - 2.0 * M_PI * u * s_[j];
      acc += c_[j] * (sine ? std::sin(x) : std::cos(x));
    }
    return acc;
  }

 private:
  void graded(double end, double h0, double dir) {
    const double q = 0.25;
    double outer = h0;
    for (int k = 0; k < 26; ++k, outer *= q) panel(end + dir * outer * q, end + dir * outer, rule8_);
  }

  void panel(double a, double b, const QuadRule& r) {
    if (a > b) std::swap(a, b);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) {
      const double x = a + (b - a) * r.x[i];
      const double f = tail_ ? m_.marginal_tail(xi_, x) : m_.marginal_density(xi_, x);
      s_.push_back(x);
      c_.push_back((b - a) * r.w[i] * std::pow(2.0 * M_PI * x, alpha_) * f);
    }
  }

  const Symbol& m_;
  Eigen::VectorXd xi_;
  double alpha_;
  bool tail_;
  double u_max_ = 0.0;
  QuadRule rule8_ = gauss_legendre(8, 0.0, 1.0), rule12_ = gauss_legendre(12, 0.0, 1.0);
  std::vector<double> s_, c_;
};

}  // namespace

FracValue frac_deriv_symbol_marginal(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi) {
  check_alpha(alpha);
  check_xi(m, xi);
  require(m.has_marginal(), "frac_deriv_symbol_marginal: needs a closed-form symbol");
  require(t > 0.0, "frac_deriv_symbol_marginal: t must be positive");
  if (xi.isZero(0.0)) return {};
  const double R = m.marginal_extent(xi);
  MarginalRule fine(m, xi, alpha, false, std::max(t, 4.0 / R));
  MarginalRule coarse(m, xi, alpha, false, std::max(t, 4.0 / R) / 2.0);
  const double v = 2.0 * fine.sum(t, false);
  return {v, std::fabs(v - 2.0 * coarse.sum(t, false))};
}

FracValue p_alpha_symbol_marginal(const Symbol& m, double alpha, double u, const Eigen::VectorXd& xi) {
  check_alpha(alpha);
  check_xi(m, xi);
  require(m.has_marginal(), "p_alpha_symbol_marginal: needs a closed-form symbol");
  require(u > 0.0, "p_alpha_symbol_marginal: u must be positive");
  const double g = std::tgamma(1.0 + alpha);
  if (xi.isZero(0.0)) return {g, 0.0};
  const double R = m.marginal_extent(xi);
  MarginalRule fine(m, xi, alpha, true, std::max(u, 4.0 / R));
  MarginalRule coarse(m, xi, alpha, true, std::max(u, 4.0 / R) / 2.0);
  const double k = 4.0 * M_PI * std::pow(u, alpha + 1.0);
  const double v = g + k * fine.sum(u, true);
  return {v, std::fabs(k * (fine.sum(u, true) - coarse.sum(u, true)))};
}

ComplexEstimate ballq_symbol_mc(const BodySpec& body, const Eigen::VectorXd& xi, long samples,
                                std::uint64_t seed) {
  require(samples >= 2, "ballq_symbol_mc: need at least two samples");
  require(xi.size() == body.d, "ballq_symbol_mc: frequency has the wrong dimension");
  if (xi.isZero(0.0)) return {1.0, 0.0, 0.0};
  CounterRng rng(seed, "symbol-mc", body.hash());
  double sc = 0, ss = 0, sc2 = 0, ss2 = 0;
  Eigen::VectorXd x;
  for (long i = 0; i < samples; ++i) {
    sample_uniform(body, rng, x);
    const double ph = 2.0 * M_PI * xi.dot(x), c = std::cos(ph), s = -std::sin(ph);
    sc += c;
    ss += s;
    sc2 += c * c;
    ss2 += s * s;
  }
  const double n = double(samples), mc = sc / n, ms = ss / n;
  return {{mc, ms},
          std::sqrt(std::max(0.0, sc2 / n - mc * mc) / (n - 1)),
          std::sqrt(std::max(0.0, ss2 / n - ms * ms) / (n - 1))};
}

SymbolRatios symbol_ratios(const Symbol& m, const Eigen::VectorXd& xi) {
  check_xi(m, xi);
  SymbolRatios r;
  const double n = xi.norm();
  if (n == 0.0) return r;
  const double v = m(xi), lx = m.L() * n;
  r.r1 = std::fabs(v) * lx;
  r.r2 = std::fabs(v - 1.0) / lx;
  r.r3 = std::fabs(m.radial_derivative(xi));
  return r;
}

double poisson_symbol(double t, double xi_norm) {
  require(t > 0.0, "poisson_symbol: t must be positive");
  return std::exp(-2.0 * M_PI * t * xi_norm);
}

double poisson_symbol(double t, const Eigen::VectorXd& xi) { return poisson_symbol(t, xi.norm()); }

double k_symbol(const Symbol& m, const Eigen::VectorXd& xi) {
  check_xi(m, xi);
  return m(xi) - poisson_symbol(m.L(), xi);
}

double dyadic_min_sum(double a) {
  require(a > 0.0 && std::isfinite(a), "dyadic_min_sum: a must be positive");
  const int n0 = -int(std::lround(std::log2(a)));
  // Terms fall geometrically on both sides of n0; 64 steps take them below 1e-18.
  double up = 0.0, down = 0.0;
  for (int k = 64; k >= 1; --k) {
    double x = std::ldexp(a, n0 + k), y = std::ldexp(a, n0 - k);
    up += std::min(x, 1.0 / x);
    down += std::min(y, 1.0 / y);
  }
  double x0 = std::ldexp(a, n0);
  return std::min(x0, 1.0 / x0) + (up + down);
}

double poisson_difference_decay(int n, int j, double L, double xi_norm) {
  require(L > 0 && xi_norm >= 0, "poisson_difference_decay: need L > 0 and |xi| >= 0");
  if (xi_norm == 0.0) return 0.0;
  const double a = std::ldexp(L * xi_norm, n);
  const double b = 2.0 * M_PI * std::ldexp(a, j - 1);
  // e^{-2b} - e^{-b} = e^{-b} expm1(-b)
  return std::min(a, 1.0 / a) * std::fabs(std::exp(-b) * std::expm1(-b));
}

FracValue frac_deriv_symbol(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi) {
  check_alpha(alpha);
  check_xi(m, xi);
  require(t > 0.0, "frac_deriv_symbol: t must be positive");
  if (xi.isZero(0.0)) return {};
  auto psi = [&](double v) { return m.radial_derivative(v * xi) / v; };
  const double panel = std::min(m.half_period(xi), 1e6);
  FracValue w = weyl_integral(psi, t, alpha, panel, 1e-11);
  const double g = std::tgamma(1.0 - alpha);
  return {-w.value / g, w.error / g};
}

namespace {

FracValue p_alpha_impl(const Symbol& m, double alpha, double u, const Eigen::VectorXd& xi, double rel_tol) {
  if (xi.isZero(0.0)) return {std::tgamma(1.0 + alpha), 0.0};
  auto psi = [&](double v) {
    Eigen::VectorXd e = v * xi;
    return (m.radial_derivative(e) - m(e)) / (v * v);
  };
  const double panel = std::min(m.half_period(xi), 1e6);
  FracValue w = weyl_integral(psi, u, alpha, panel, rel_tol);
  const double scale = -std::pow(u, alpha + 1.0) / std::tgamma(1.0 - alpha);
  return {scale * w.value, std::fabs(scale) * w.error};
}

}  // namespace

FracValue p_alpha_symbol(const Symbol& m, double alpha, double u, const Eigen::VectorXd& xi) {
  check_alpha(alpha);
  check_xi(m, xi);
  require(u > 0.0, "p_alpha_symbol: u must be positive");
  return p_alpha_impl(m, alpha, u, xi, 1e-11);
}

IdentityCheck reproducing_identity_check(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi) {
  check_alpha(alpha);
  check_xi(m, xi);
  require(t > 0.0, "reproducing_identity_check: t must be positive");
  IdentityCheck out;
  out.lhs = m(t * xi);
  const double panel = std::min(m.half_period(xi), 1e6);
  const double u1 = t + std::max(t, panel);
  double err = 0.0;
  std::optional<MarginalRule> rule;
  const double g = std::tgamma(1.0 + alpha);
  if (m.has_marginal() && !xi.isZero(0.0)) rule.emplace(m, xi, alpha, true, 4.0 * u1 + 4.0 / m.marginal_extent(xi));
  auto p = [&](double u) {
    if (rule) {
      if (u > rule->u_max()) rule->build(2.0 * u);
      return g + 4.0 * M_PI * std::pow(u, alpha + 1.0) * rule->sum(u, true);
    }
    FracValue v = p_alpha_impl(m, alpha, u, xi, 1e-9);
    err = std::max(err, v.error);
    return v.value;
  };
  // [t, u1]: w = t/u and 1 - w = y^(1/alpha) give (1/alpha) int_0^ymax p(t / (1 - y^(1/alpha))) dy.
  const bool zero = xi.isZero(0.0);  // p is constant: the y form covers all of [t, inf)
  const double ymax = zero ? 1.0 : std::pow(1.0 - t / u1, alpha);
  auto fa = [&](double y) { return p(t / (1.0 - std::pow(y, 1.0 / alpha))) / alpha; };
  QuadResult a = integrate(fa, 0.0, ymax, 1e-10, 1e-8, 16);
  // [u1, inf): the weight (t/u^2)(1 - t/u)^(alpha-1) is smooth here.
  auto fb = [&](double u) { return t / (u * u) * std::pow(1.0 - t / u, alpha - 1.0) * p(u); };
  QuadResult b = zero ? QuadResult{} : integrate_oscillatory_tail(fb, u1, 0.5 * panel, 1e-9, 4000, 12);
  out.rhs = (a.value + b.value) / std::tgamma(alpha);
  out.error = (a.error + b.error) / std::tgamma(alpha) + err;
  return out;
}

FracValue frac_deriv_singular(const std::function<double(double)>& F, double a, double b, double alpha,
                              double t) {
  check_alpha(alpha);
  require(a < b, "frac_deriv_singular: empty support");
  if (t >= b) return {};
  const double c = -alpha / std::tgamma(1.0 - alpha);
  const double Ft = F(t);
  const double U = b - t;
  double total = 0.0, err = 0.0;
  if (t < a) {
    QuadResult q = integrate([&](double u) { return std::pow(u, -alpha - 1.0) * F(t + u); }, a - t, U, 1e-15, 1e-12, 20);
    total = q.value;
    err = q.error;
  } else {
    // Below u0 the difference quotient loses its digits; use F(t+u) - F(t) ~ F' u + F'' u^2 / 2.
    const double p = 1.0 / (1.0 - alpha), u0 = std::min(1e-6 * (b - a), U);
    auto f = [&](double sigma) {
      const double u = std::pow(sigma, p);
      return (F(t + u) - Ft) * std::pow(sigma, -p) * p;
    };
    QuadResult q = integrate(f, std::pow(u0, 1.0 - alpha), std::pow(U, 1.0 - alpha), 1e-14 + 1e-10 * std::fabs(Ft), 1e-10, 20);
    const double hd = 1e-5 * (b - a);
    const double fp = F(t + hd), fm = F(t - hd);
    const double d1 = (fp - fm) / (2.0 * hd), d2 = (fp - 2.0 * Ft + fm) / (hd * hd);
    q.value += d1 * std::pow(u0, 1.0 - alpha) / (1.0 - alpha) + 0.5 * d2 * std::pow(u0, 2.0 - alpha) / (2.0 - alpha);
    total = q.value - Ft * std::pow(U, -alpha) / alpha;
    err = q.error;
  }
  return {c * total, std::fabs(c) * err};
}

FracValue frac_deriv_weyl(const std::function<double(double)>& dF, double a, double b, double alpha, double t) {
  check_alpha(alpha);
  require(a < b, "frac_deriv_weyl: empty support");
  if (t >= b) return {};
  const double p = 1.0 / (1.0 - alpha);
  const double lo = t < a ? std::pow(a - t, 1.0 - alpha) : 0.0;
  auto f = [&](double sigma) { return dF(t + std::pow(sigma, p)); };
  QuadResult q = integrate(f, lo, std::pow(b - t, 1.0 - alpha), 1e-15, 1e-12, 20);
  const double c = -1.0 / std::tgamma(2.0 - alpha);
  return {c * q.value, std::fabs(c) * q.error};
}

Eigen::VectorXcd frac_deriv_grid(const Eigen::VectorXcd& F, double h, double alpha, FracVariant variant) {
  check_alpha(alpha);
  require(h > 0.0, "frac_deriv_grid: spacing must be positive");
  const Eigen::Index N = F.size();
  require(N >= 4, "frac_deriv_grid: need at least four samples");
  Eigen::Index i0 = N, i1 = -1;
  for (Eigen::Index i = 0; i < N; ++i)
    if (F[i] != 0.0) {
      i0 = std::min(i0, i);
      i1 = i;
    }
  if (i1 < 0) return Eigen::VectorXcd::Zero(N);
  const Eigen::Index support = i1 - i0 + 1;
  require(i0 > 0 && i1 < N - 1 && N - support >= support,
          "frac_deriv_grid: support touches the window; zero padding must be at least the support width");

  if (variant == FracVariant::SingularIntegral) {
    // Product integration of u^(-alpha-1) against the piecewise-linear interpolant, plus the
    // quadratic correction -(F''/2)(u - kh)((k+1)h - u) per cell with F'' from second differences.
    Eigen::VectorXd w0(N), w1(N), w2(N);
    const QuadRule gl = gauss_legendre(8, 0.0, 1.0);
    w0[0] = 0.0;
    w1[0] = std::pow(h, -alpha) / (1.0 - alpha);
    w2[0] = std::pow(h, 2.0 - alpha) * (1.0 / (1.0 - alpha) - 1.0 / (2.0 - alpha));
    for (Eigen::Index k = 1; k < N; ++k) {
      double a0 = 0, a1 = 0, a2 = 0;
      for (Eigen::Index j = 0; j < gl.x.size(); ++j) {
        const double x = gl.x[j], wk = gl.w[j] * h * std::pow((k + x) * h, -alpha - 1.0);
        a0 += wk * (1.0 - x);
        a1 += wk * x;
        a2 += wk * x * (1.0 - x) * h * h;
      }
      w0[k] = a0;
      w1[k] = a1;
      w2[k] = a2;
    }
    auto at = [&](Eigen::Index j) { return j >= 0 && j < N ? F[j] : std::complex<double>(0.0); };
    Eigen::VectorXcd d2(N);  // F'' on cell [j, j+1]
    for (Eigen::Index j = 0; j < N; ++j) d2[j] = (at(j + 2) - at(j + 1) - at(j) + at(j - 1)) / (2.0 * h * h);
    const double c = -alpha / std::tgamma(1.0 - alpha);
    Eigen::VectorXcd out(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      std::complex<double> s = 0.0;
      const Eigen::Index K = N - 1 - i;  // last in-window offset
      for (Eigen::Index k = 0; k < K; ++k) {
        const std::complex<double> gk = F[i + k] - F[i], gk1 = F[i + k + 1] - F[i];
        s += w0[k] * gk + w1[k] * gk1 - 0.5 * w2[k] * d2[i + k];
      }
      const double U = K * h;
      if (K > 0) s += -F[i] * std::pow(U, -alpha) / alpha;
      out[i] = c * s;
    }
    return out;
  }

  Eigen::FFT<double> fft;
  Eigen::VectorXcd spec(N), out(N);
  fft.fwd(spec, F);
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::Index kk = k <= N / 2 ? k : k - N;
    const double xi = double(kk) / (double(N) * h);
    std::complex<double> sym;
    if (variant == FracVariant::Modulus) {
      sym = std::pow(2.0 * M_PI * std::fabs(xi), alpha);
    } else if (2 * k == N) {
      sym = std::pow(2.0 * M_PI * std::fabs(xi), alpha) * std::cos(M_PI * alpha / 2.0);
    } else {
      // (2 pi i xi)^alpha applied to the inverse transform is (-2 pi i xi)^alpha on the DFT
      sym = std::pow(std::complex<double>(0.0, -2.0 * M_PI * xi), alpha);
    }
    spec[k] *= sym;
  }
  fft.inv(out, spec);
  return out;
}

FracBoundCheck vr_frac_bound_check(const Eigen::VectorXcd& F, double h, double r, double alpha) {
  check_alpha(alpha);
  require(r > 1.0 && std::isfinite(r), "vr_frac_bound_check: need finite r > 1");
  require(std::fabs(alpha - 1.0 / r) > 1e-12, "vr_frac_bound_check: alpha must differ from 1/r");
  FracBoundCheck out;
  out.part_one = alpha > 1.0 / r;
  auto lr = [&](const Eigen::VectorXcd& v) { return std::pow(h * v.cwiseAbs().array().pow(r).sum(), 1.0 / r); };
  const double vr = vr_exact(F, r).value, fn = lr(F);
  const double dn = F.isZero(0.0) ? 0.0 : lr(frac_deriv_grid(F, h, alpha, FracVariant::Modulus));
  if (out.part_one) {
    out.lhs = vr;
    out.rhs = fn + dn;
  } else {
    out.lhs = dn;
    out.rhs = fn + vr;
  }
  if (out.rhs > 0.0) out.ratio = out.lhs / out.rhs;
  return out;
}

double multiplier_difference_sum(const Symbol& m, int n, int l, const Eigen::VectorXd& xi, double eps) {
  check_xi(m, xi);
  require(l >= 0 && l <= 30, "multiplier_difference_sum: need 0 <= l <= 30");
  require(eps >= 0.0 && eps < 1.0, "multiplier_difference_sum: need 0 <= eps < 1");
  const std::int64_t K = std::int64_t{1} << l;
  const double base = std::ldexp(1.0, n), step = std::ldexp(1.0, n - l);
  double prev = m(base * xi), sum = 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    const double cur = m((base + step * double(k + 1)) * xi);
    sum += std::pow(std::fabs(cur - prev), 2.0 - eps);
    prev = cur;
  }
  return sum;
}

}  // namespace dimvar
