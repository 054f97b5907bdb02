#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dimvar/error.hpp"
#include "dimvar/symbols.hpp"
#include "dimvar/variation.hpp"
#include "support.hpp"

using namespace dimvar;
using testsupport::rel_err;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(v.size());
  int i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

Eigen::VectorXd diag(int d, double norm) { return Eigen::VectorXd::Constant(d, norm / std::sqrt(double(d))); }

double bump(double t) { return std::fabs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }
double bump_prime(double t) {
  return std::fabs(t) < 1.0 ? bump(t) * (-2.0 * t / ((1.0 - t * t) * (1.0 - t * t))) : 0.0;
}

}  // namespace

TEST_CASE("closed forms at the origin and simple points") {
  for (int d : {1, 2, 3, 8, 64}) {
    CHECK(ball2_symbol(d, Eigen::VectorXd::Zero(d)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cube_symbol(d, Eigen::VectorXd::Zero(d)) == 1.0);
  }
  CHECK(std::fabs(cube_symbol(1, vec({1.0}))) < 1e-16);
  CHECK(cube_symbol(2, vec({0.5, 0.0})) == doctest::Approx(2.0 / M_PI).epsilon(1e-15));
  CHECK(ball2_symbol(3, vec({1e-6, 0, 0})) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("one-dimensional ball is the unit interval") {
  for (double x = -20.0; x <= 20.0; x += 0.0137)
    CHECK(std::fabs(ball2_symbol(1, vec({x})) - cube_symbol(1, vec({x}))) < 1e-10);
}

TEST_CASE("ball symbol against elementary Bessel forms") {
  const double rho2 = 1.0 / std::sqrt(M_PI), rho3 = std::cbrt(3.0 / (4.0 * M_PI));
  for (double r = 0.01; r < 30.0; r *= 1.21) {
    const double z2 = 2.0 * M_PI * rho2 * r, z3 = 2.0 * M_PI * rho3 * r;
    CHECK(ball2_symbol(2, vec({r, 0})) == doctest::Approx(2.0 * std::cyl_bessel_j(1.0, z2) / z2).epsilon(1e-12));
    const double e3 = 3.0 * (std::sin(z3) - z3 * std::cos(z3)) / (z3 * z3 * z3);
    CHECK(std::fabs(ball2_symbol(3, vec({0, r, 0})) - e3) < 1e-11);
  }
  // First zero for d = 3 is the first positive root of tan z = z.
  const double z0 = 4.493409457909064, r0 = z0 / (2.0 * M_PI * rho3);
  CHECK(std::fabs(ball2_symbol(3, vec({r0, 0, 0}))) < 1e-13);
  CHECK(ball2_symbol(3, vec({0.999 * r0, 0, 0})) > 0.0);
  CHECK(ball2_symbol(3, vec({1.001 * r0, 0, 0})) < 0.0);
}

TEST_CASE("symbol invariants on frequency grids") {
  std::mt19937_64 g(5);
  std::normal_distribution<double> N;
  for (int d : {1, 2, 5, 16}) {
    for (const Symbol& m : {Symbol::ball2(d), Symbol::cube(d)}) {
      CHECK(m(Eigen::VectorXd::Zero(d)) == doctest::Approx(1.0));
      for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd xi(d);
        for (int i = 0; i < d; ++i) xi[i] = 3.0 * N(g);
        const double v = m(xi);
        CHECK(std::fabs(v) <= 1.0 + 1e-14);
        CHECK(v == m(Eigen::VectorXd(-xi)));
      }
    }
  }
}

TEST_CASE("gradients against central differences") {
  std::mt19937_64 g(9);
  std::normal_distribution<double> N;
  for (int d : {2, 3, 7}) {
    for (const Symbol& m : {Symbol::ball2(d), Symbol::cube(d)}) {
      for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd xi(d);
        for (int i = 0; i < d; ++i) xi[i] = N(g);
        Eigen::VectorXd gr = m.gradient(xi);
        for (int i = 0; i < d; ++i) {
          const double h = 1e-5;
          Eigen::VectorXd a = xi, b = xi;
          a[i] += h;
          b[i] -= h;
          CHECK(std::fabs(gr[i] - (m(a) - m(b)) / (2 * h)) < 1e-8);
        }
        CHECK(m.radial_derivative(xi) == doctest::Approx(xi.dot(gr)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("Monte Carlo symbol agrees with closed forms") {
  const Eigen::VectorXd x2 = vec({0.4, -0.7}), x3 = vec({0.3, 0.5, -0.2});
  ComplexEstimate b2 = ballq_symbol_mc(normalized(BodySpec::ball(2.0, 2)), x2, 200000, 3);
  CHECK(std::fabs(b2.value.real() - ball2_symbol(2, x2)) <= 3 * b2.se_re);
  CHECK(std::fabs(b2.value.imag()) <= 3 * b2.se_im);
  ComplexEstimate c3 = ballq_symbol_mc(normalized(BodySpec::cube(3)), x3, 200000, 4);
  CHECK(std::fabs(c3.value.real() - cube_symbol(3, x3)) <= 3 * c3.se_re);
  CHECK(std::fabs(c3.value.imag()) <= 3 * c3.se_im);
  ComplexEstimate z = ballq_symbol_mc(normalized(BodySpec::ball(1.0, 4)), Eigen::VectorXd::Zero(4), 10, 1);
  CHECK(z.value == std::complex<double>(1.0, 0.0));

  Symbol table = Symbol::monte_carlo(BodySpec::ball(2.0, 3), 100000, 2);
  CHECK(table.provenance() == Provenance::MonteCarlo);
  CHECK(table(x3) == doctest::Approx(ball2_symbol(3, x3)).epsilon(0.01));
  CHECK(table.L() == doctest::Approx(Symbol::ball2(3).L()));
}

TEST_CASE("rejection sampler refuses tiny acceptance") {
  BodySpec thin = BodySpec::oracle("needle", 6, 1.0, [](const Eigen::VectorXd& x) {
    return x.head(5).cwiseAbs().maxCoeff() < 0.05;
  });
  CHECK_THROWS_AS(ballq_symbol_mc(thin, Eigen::VectorXd::Ones(6), 10, 1), DomainError);
}

TEST_CASE("symbol ratio bounds") {
  SymbolRatios z = symbol_ratios(Symbol::cube(3), Eigen::VectorXd::Zero(3));
  CHECK(!z.r1.has_value());
  CHECK(!z.r2.has_value());
  CHECK(z.r3 == 0.0);
  // m even, so |m - 1| = O(|xi|^2) and r2 -> 0 linearly.
  Symbol c = Symbol::cube(4);
  double prev = 1.0;
  for (double t = 1e-1; t > 0.5e-4; t /= 10) {
    double r2 = *symbol_ratios(c, vec({t, 0, 0, 0})).r2;
    CHECK(r2 < prev);
    prev = r2;
  }
  // 1 - sinc(t) ~ pi^2 t^2 / 6 and L = 12^(-1/2)
  CHECK(prev / 1e-4 == doctest::Approx(M_PI * M_PI * std::sqrt(12.0) / 6.0).epsilon(1e-6));
  for (int d : {1, 4, 16, 64}) {
    for (const Symbol& m : {Symbol::ball2(d), Symbol::cube(d)}) {
      for (double s = 1e-3; s < 1e3; s *= 1.07) {
        for (const Eigen::VectorXd& xi : {Eigen::VectorXd(s * Eigen::VectorXd::Unit(d, 0)), diag(d, s)}) {
          SymbolRatios r = symbol_ratios(m, xi);
          CHECK(*r.r1 <= 8.0);
          CHECK(*r.r2 <= 8.0);
          CHECK(r.r3 <= 8.0);
        }
      }
    }
  }
}

TEST_CASE("Poisson symbol and k") {
  for (double t : {0.1, 1.0, 3.5})
    for (double s : {0.2, 2.0})
      for (double x : {0.0, 0.3, 4.0}) {
        const double lhs = poisson_symbol(t, x) * poisson_symbol(s, x), rhs = poisson_symbol(t + s, x);
        // exp(-x) carries relative rounding ~ x eps
        CHECK(std::fabs(lhs - rhs) <= 8 * std::numeric_limits<double>::epsilon() * (1 + 2 * M_PI * (t + s) * x) * rhs);
      }
  CHECK(poisson_symbol(2.0, 0.0) == 1.0);
  Symbol m = Symbol::ball2(5);
  CHECK(k_symbol(m, Eigen::VectorXd::Zero(5)) == 0.0);
  Eigen::VectorXd xi = vec({0.1, 0.2, 0, 0, 1});
  CHECK(k_symbol(m, xi) == doctest::Approx(m(xi) - std::exp(-2 * M_PI * m.L() * xi.norm())));
}

TEST_CASE("dyadic min sum") {
  auto brute = [](double a) {
    double s = 0.0;
    for (int n = -400; n <= 400; ++n) {
      double x = std::ldexp(a, n);
      if (x > 0 && std::isfinite(x)) s += std::min(x, 1.0 / x);
    }
    return s;
  };
  for (int j = -20; j <= 20; ++j) {
    CHECK(std::fabs(dyadic_min_sum(std::ldexp(1.0, j)) - 3.0) < 1e-12);
    CHECK(dyadic_min_sum(std::sqrt(2.0) * std::ldexp(1.0, j)) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  }
  for (double a = 1.0; a <= 2.0; a += 1.0 / 997) {
    CHECK(dyadic_min_sum(a) <= 3.0 + 1e-12);
    CHECK(dyadic_min_sum(a) == doctest::Approx(brute(a)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(dyadic_min_sum(0.0), DomainError);
}

TEST_CASE("poisson difference decay") {
  const double L = 0.3;
  double C = 0.0;
  for (int n = -10; n <= 10; ++n)
    for (int j = -10; j <= 10; ++j)
      for (double x : {0.1, 1.0, 7.0}) {
        const double a = std::ldexp(L * x, n);
        const double naive = std::min(a, 1 / a) *
                             std::fabs(std::exp(-2 * M_PI * std::ldexp(a, j)) - std::exp(-2 * M_PI * std::ldexp(a, j - 1)));
        const double v = poisson_difference_decay(n, j, L, x);
        CHECK(std::fabs(v - naive) <= 1e-13 + 1e-10 * naive);
        C = std::max(C, v * std::ldexp(1.0, std::abs(j)));
      }
  CHECK(C <= M_PI);
  CHECK(poisson_difference_decay(3, 2, L, 0.0) == 0.0);
}

TEST_CASE("fractional derivative of symbols: routes, scaling, zero") {
  CHECK(frac_deriv_symbol(Symbol::cube(2), 0.5, 1.0, Eigen::VectorXd::Zero(2)).value == 0.0);
  for (const Symbol& m : {Symbol::ball2(2), Symbol::ball2(8), Symbol::cube(1), Symbol::cube(3)}) {
    for (double alpha : {0.2, 0.55, 0.9}) {
      for (double t : {0.3, 1.0, 4.0}) {
        Eigen::VectorXd xi = diag(m.d(), 0.8);
        FracValue w = frac_deriv_symbol(m, alpha, t, xi);
        FracValue s = frac_deriv_symbol_marginal(m, alpha, t, xi);
        CHECK(w.error <= 1e-7);
        CHECK(std::fabs(w.value - s.value) < 1e-7);
      }
    }
  }
  // D_s m(s lambda xi) at s = t equals lambda^alpha D_s m(s xi) at s = lambda t.
  Symbol c = Symbol::cube(3);
  for (double alpha : {0.3, 0.75})
    for (double t : {0.5, 2.0}) {
      Eigen::VectorXd xi = vec({0.4, -0.2, 0.9});
      const double lhs = frac_deriv_symbol(c, alpha, t, 2.0 * xi).value;
      const double rhs = std::pow(2.0, alpha) * frac_deriv_symbol(c, alpha, 2.0 * t, xi).value;
      CHECK(std::fabs(lhs - rhs) < 1e-6);
    }
}

TEST_CASE("p_alpha and the reproducing identity") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    for (double u : {0.01, 1.0, 100.0})
      CHECK(std::fabs(p_alpha_symbol(Symbol::ball2(3), alpha, u, Eigen::VectorXd::Zero(3)).value -
                      std::tgamma(1 + alpha)) < 1e-9);
    IdentityCheck z = reproducing_identity_check(Symbol::cube(2), alpha, 1.5, Eigen::VectorXd::Zero(2));
    CHECK(z.lhs == 1.0);
    CHECK(std::fabs(z.rhs - 1.0) < 1e-9);
  }
  for (const Symbol& m : {Symbol::ball2(2), Symbol::cube(2), Symbol::cube(5)})
    for (double alpha : {0.3, 0.8})
      for (double u : {0.2, 1.0, 6.0}) {
        Eigen::VectorXd xi = diag(m.d(), 1.1);
        CHECK(std::fabs(p_alpha_symbol(m, alpha, u, xi).value - p_alpha_symbol_marginal(m, alpha, u, xi).value) < 1e-8);
      }
  IdentityCheck c = reproducing_identity_check(Symbol::cube(4), 0.75, 1.0, vec({0.3, 0, 0, 0}));
  CHECK(std::fabs(c.lhs - c.rhs) < 1e-5);
  for (double t : {8.0, 32.0}) {
    IdentityCheck far = reproducing_identity_check(Symbol::ball2(3), 0.6, t, vec({1.0, 0, 0}));
    CHECK(std::fabs(far.lhs) < 1e-2);
    CHECK(std::fabs(far.lhs - far.rhs) < 1e-5);
  }
}

TEST_CASE("pointwise fractional derivatives of a bump") {
  for (double alpha : {0.55, 0.75, 0.9})
    for (double t : {-1.5, -0.6, 0.0, 0.35, 0.9}) {
      FracValue s = frac_deriv_singular(bump, -1.0, 1.0, alpha, t);
      FracValue w = frac_deriv_weyl(bump_prime, -1.0, 1.0, alpha, t);
      CHECK(std::fabs(s.value - w.value) < 1e-6 * std::fabs(w.value) + 1e-9);
    }
  CHECK(frac_deriv_singular(bump, -1.0, 1.0, 0.5, 1.2).value == 0.0);
}

TEST_CASE("grid fractional derivatives") {
  CHECK(frac_deriv_grid(Eigen::VectorXcd::Zero(64), 0.1, 0.5, FracVariant::Modulus).isZero(0.0));

  // The forward derivative of a compact bump has a |t|^(-1-alpha) left tail, so the periodic
  // window must be wide for the spectral result to match the line.
  const int N = 1 << 19;
  const double h = 1.0 / 512, t0 = -0.5 * N * h;
  Eigen::VectorXcd F(N);
  for (int k = 0; k < N; ++k) F[k] = bump(t0 + k * h);
  for (double alpha : {0.55, 0.9}) {
    Eigen::VectorXcd D = frac_deriv_grid(F, h, alpha, FracVariant::Directional);
    const double scale = D.cwiseAbs().maxCoeff();
    for (int k = N / 2 - 700; k < N / 2 + 700; k += 37) {
      const double w = frac_deriv_weyl(bump_prime, -1.0, 1.0, alpha, t0 + k * h).value;
      CHECK(std::fabs(D[k].real() - w) < 1e-4 * scale);
      CHECK(std::fabs(D[k].imag()) < 1e-9 * scale);
    }
  }

  // Product integration is not periodic; a short window suffices.
  const int n = 4096;
  const double hs = 8.0 / n;
  Eigen::VectorXcd G(n);
  for (int k = 0; k < n; ++k) G[k] = bump(-4.0 + k * hs);
  for (double alpha : {0.55, 0.9}) {
    Eigen::VectorXcd S = frac_deriv_grid(G, hs, alpha, FracVariant::SingularIntegral);
    const double scale = S.cwiseAbs().maxCoeff();
    for (int k = n / 4; k < 3 * n / 4; k += 37) {
      const double w = frac_deriv_singular(bump, -1.0, 1.0, alpha, -4.0 + k * hs).value;
      CHECK(std::fabs(S[k].real() - w) < 1e-3 * scale);
    }
  }

  // alpha -> 1: the forward derivative tends to -F'.
  Eigen::VectorXcd D = frac_deriv_grid(G, hs, 0.999, FracVariant::Directional);
  double num = 0, den = 0;
  for (int k = 0; k < n; ++k) {
    const double d = bump_prime(-4.0 + k * hs);
    num += std::norm(D[k] + d);
    den += d * d;
  }
  CHECK(std::sqrt(num / den) < 0.02);

  // Windowed cosine: D^alpha acts as (2 pi)^alpha in the interior.
  const int M = 1 << 15;
  const double hw = 256.0 / M;
  Eigen::VectorXcd C(M);
  for (int k = 0; k < M; ++k) {
    const double t = -128.0 + k * hw, x = (std::fabs(t) - 40.0) / 24.0;
    const double ramp = x <= 0 ? 1.0 : (x < 1 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0);
    C[k] = std::cos(2 * M_PI * t) * ramp;
  }
  Eigen::VectorXcd DC = frac_deriv_grid(C, hw, 0.6, FracVariant::Modulus);
  for (int k = M / 2 - 400; k < M / 2 + 400; k += 7) {
    const double t = -128.0 + k * hw;
    CHECK(std::fabs(DC[k].real() - std::pow(2 * M_PI, 0.6) * std::cos(2 * M_PI * t)) < 1e-2);
  }

  Eigen::VectorXcd touching = Eigen::VectorXcd::Ones(64);
  CHECK_THROWS_AS(frac_deriv_grid(touching, 0.1, 0.5, FracVariant::Modulus), DomainError);
  Eigen::VectorXcd wide = Eigen::VectorXcd::Zero(64);
  wide.segment(2, 50).setOnes();
  CHECK_THROWS_AS(frac_deriv_grid(wide, 0.1, 0.5, FracVariant::Directional), DomainError);
}

TEST_CASE("V_r bound through fractional derivatives") {
  FracBoundCheck z = vr_frac_bound_check(Eigen::VectorXcd::Zero(128), 0.1, 2.0, 0.75);
  CHECK(!z.ratio.has_value());
  CHECK(z.lhs == 0.0);
  CHECK_THROWS_AS(vr_frac_bound_check(Eigen::VectorXcd::Zero(128), 0.1, 2.0, 0.5), DomainError);

  auto sample = [](int N, const std::function<double(double)>& f) {
    Eigen::VectorXcd F(N);
    for (int k = 0; k < N; ++k) F[k] = f(-4.0 + 8.0 * k / N);
    return F;
  };
  std::vector<double> ratios;
  for (int N : {512, 1024, 2048}) {
    FracBoundCheck c = vr_frac_bound_check(sample(N, [](double t) { return std::exp(-8 * t * t) * bump(t / 1.5); }),
                                           8.0 / N, 2.0, 0.75);
    CHECK(c.part_one);
    ratios.push_back(*c.ratio);
  }
  CHECK(std::fabs(ratios[1] / ratios[0] - 1) < 0.05);
  CHECK(std::fabs(ratios[2] / ratios[1] - 1) < 0.05);

  // Mollified step: |D^0.4 F|_2 stays bounded as the step sharpens.
  std::vector<double> norms;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    auto step = [eps](double t) {
      const double s = 0.5 * (1 + std::tanh(t / eps));
      return s * bump(t / 1.8);
    };
    FracBoundCheck c = vr_frac_bound_check(sample(4096, step), 8.0 / 4096, 2.0, 0.4);
    CHECK(!c.part_one);
    CHECK(c.lhs <= c.rhs);
    norms.push_back(c.lhs);
  }
  // Increments shrink geometrically, so the sequence has a finite limit.
  for (std::size_t i = 2; i < norms.size(); ++i) CHECK(norms[i] - norms[i - 1] < 0.9 * (norms[i - 1] - norms[i - 2]));
  const double q = (norms[3] - norms[2]) / (norms[2] - norms[1]);
  CHECK(norms[3] + (norms[3] - norms[2]) * q / (1 - q) < 2 * norms[0]);
}

TEST_CASE("multiplier difference sums") {
  Symbol m = Symbol::ball2(16);
  Eigen::VectorXd xi = diag(16, 1.0);
  CHECK(multiplier_difference_sum(m, 1, 0, xi, 0.3) ==
        doctest::Approx(std::pow(std::fabs(m(4.0 * xi) - m(2.0 * xi)), 1.7)));
  CHECK(multiplier_difference_sum(m, 1, 5, Eigen::VectorXd::Zero(16), 0.0) == 0.0);
  for (double eps : {0.0, 0.5}) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int l = 2; l <= 10; ++l) {
      const double y = std::log2(multiplier_difference_sum(m, 0, l, xi, eps));
      sx += l;
      sy += y;
      sxx += l * l;
      sxy += l * y;
      ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(std::fabs(slope + (1 - eps)) < 0.2);
  }
}
