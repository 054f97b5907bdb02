#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "dimvar/error.hpp"
#include "dimvar/grid.hpp"
#include "dimvar/quadrature.hpp"
#include "dimvar/special.hpp"
#include "dimvar/variation.hpp"

using namespace dimvar;
using cd = std::complex<double>;

namespace {

Eigen::VectorXi ivec(std::initializer_list<int> v) {
  Eigen::VectorXi k(v.size());
  int i = 0;
  for (int a : v) k[i++] = a;
  return k;
}

double rel_l2(const GridField& a, const GridField& b) { return (a.data - b.data).norm() / b.data.norm(); }

GridField random_field(int d, int n, double period, int K, std::uint64_t seed) {
  CounterRng rng(seed, "test_grid");
  return random_trig_poly(d, period, K, rng).sample(n);
}

double sinc(double x) { return x == 0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x); }

}  // namespace

TEST_CASE("fft matches a naive DFT and inverts") {
  const int d = 2, n = 4;
  std::mt19937_64 g(3);
  std::normal_distribution<double> N;
  Eigen::VectorXcd v(n * n);
  for (auto& x : v) x = {N(g), N(g)};
  Eigen::VectorXcd F = fft_nd(v, d, n, false);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      cd s = 0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) s += v[x * n + y] * std::polar(1.0, -2 * M_PI * (a * x + b * y) / n);
      CHECK(std::abs(F[a * n + b] - s) < 1e-12);
    }
  CHECK((fft_nd(F, d, n, true) - v).norm() < 1e-13);
}

TEST_CASE("grid shape and indexing") {
  GridField f = GridField::zeros(3, 8, 0.5);
  CHECK(f.size() == 512);
  CHECK(f.period() == 4.0);
  CHECK(f.wavenumber(0).isZero());
  CHECK(f.wavenumber(1) == ivec({0, 0, 1}));
  CHECK(f.wavenumber(7) == ivec({0, 0, -1}));
  CHECK(f.wavenumber(4) == ivec({0, 0, 4}));  // Nyquist taken positive
  CHECK(f.point(8 + 3).isApprox(Eigen::Vector3d(0, 0.5, 1.5)));
  CHECK_THROWS_AS(GridField::zeros(2, 12, 1.0), DomainError);
  CHECK_THROWS_AS(GridField::zeros(2, 8, 0.0), DomainError);
}

TEST_CASE("trig poly sampling is exact and band limited") {
  CounterRng rng(5, "tp");
  TrigPoly p = random_trig_poly(2, 3.0, 3, rng);
  GridField f = p.sample(16);
  double err = 0;
  for (Eigen::Index i = 0; i < f.size(); i += 7) err = std::max(err, std::abs(f.data[i] - p(f.point(i))));
  CHECK(err < 1e-12);
  CHECK(f.data.imag().cwiseAbs().maxCoeff() < 1e-13);
  Eigen::VectorXcd F = fft_nd(f.data, 2, 16, false);
  for (Eigen::Index i = 0; i < F.size(); ++i)
    if (f.wavenumber(i).cwiseAbs().maxCoeff() > 3) CHECK(std::abs(F[i]) < 1e-12);
  CHECK_THROWS_AS(p.sample(6), DomainError);
}

TEST_CASE("apply_symbol: identity and eigenfunctions") {
  GridField f = random_field(2, 16, 2.0, 4, 1);
  CHECK(rel_l2(apply_symbol(f, [](const Eigen::VectorXd&) { return cd(1.0); }), f) < 1e-14);
  const Symbol cube = Symbol::cube(2);
  GridField z = apply_symbol(f, [&](const Eigen::VectorXd& xi) { return cd(cube(0.0 * xi)); });
  CHECK(rel_l2(z, f) < 1e-14);

  for (auto k : {ivec({1, 0}), ivec({3, -2}), ivec({-5, 7})}) {
    GridField e = single_mode(2, 2.0, k).sample(16);
    const double t = 0.37;
    GridField out = average_mt(e, cube, t);
    const double expect = sinc(t * k[0] / 2.0) * sinc(t * k[1] / 2.0);
    CHECK((out.data - expect * e.data).cwiseAbs().maxCoeff() < 1e-12);
    GridField ball = average_mt(e, Symbol::ball2(2), t);
    const double mb = Symbol::ball2(2)(t * k.cast<double>() / 2.0);
    CHECK((ball.data - mb * e.data).cwiseAbs().maxCoeff() < 1e-12);
    GridField po = poisson_apply(e, t);
    CHECK((po.data - std::exp(-2 * M_PI * t * k.cast<double>().norm() / 2.0) * e.data).cwiseAbs().maxCoeff() <
          1e-12);
    GridField sp = spherical_mean(e, t);
    const double s = spherical_symbol(2, t, k.cast<double>() / 2.0);
    CHECK((sp.data - s * e.data).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("averages: constants, means, reality, contraction") {
  GridField c = GridField::constant(2, 16, 0.25, 2.5);
  const Symbol b = Symbol::ball2(2);
  for (double t : {0.01, 0.5, 3.0, 100.0}) {
    CHECK((average_mt(c, b, t).data.array() - 2.5).abs().maxCoeff() < 1e-13);
    CHECK((poisson_apply(c, t).data.array() - 2.5).abs().maxCoeff() < 1e-13);
    CHECK((spherical_mean(c, t).data.array() - 2.5).abs().maxCoeff() < 1e-13);
  }
  GridField f = random_field(2, 32, 4.0, 6, 2);
  for (double t : {0.1, 0.7, 2.0}) {
    for (const GridField& g : {average_mt(f, b, t), average_mt(f, Symbol::cube(2), t), poisson_apply(f, t)}) {
      CHECK(std::abs(g.data.mean() - f.data.mean()) < 1e-13);
      CHECK(g.data.imag().cwiseAbs().maxCoeff() < 1e-13);
      CHECK(lp_norm(g, 2) <= lp_norm(f, 2) * (1 + 1e-14));
      REQUIRE(g.band_limit);
      CHECK(*g.band_limit == 6);
    }
  }
}

TEST_CASE("average_mt converges linearly as t -> 0") {
  GridField f = random_field(2, 32, 4.0, 5, 3);
  const Symbol m = Symbol::ball2(2);
  std::vector<double> lx, ly;
  for (int j = 4; j <= 10; ++j) {
    const double t = std::ldexp(1.0, -j);
    GridField g = average_mt(f, m, t);
    lx.push_back(std::log(t));
    ly.push_back(std::log((g.data - f.data).norm()));
  }
  const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
  CHECK(slope >= 0.9);
}

TEST_CASE("Monte Carlo symbol refuses wrapping dilates") {
  const Symbol mc = Symbol::monte_carlo(BodySpec::ball(1.0, 2), 2000, 1);
  GridField f = random_field(2, 16, 2.0, 3, 4);
  CHECK_NOTHROW(average_mt(f, mc, 0.5));
  CHECK_THROWS_AS(average_mt(f, mc, 50.0), DomainError);
}

TEST_CASE("lattice average equals the spatial oracle") {
  const int ns[] = {64, 32, 16};
  for (int d = 1; d <= 3; ++d) {
    const int n = ns[d - 1];
    for (const BodySpec& body : {normalized(BodySpec::ball(2.0, d)), normalized(BodySpec::cube(d)),
                                 normalized(BodySpec::ball(1.0, d))}) {
      GridField f = random_field(d, n, 4.0, n / 4, 10 + d);
      for (double t : {0.4, 1.3}) {
        GridField a = average_mt_lattice(f, body, t);
        GridField o = spatial_convolve_oracle(f, body, t);
        CHECK(rel_l2(a, o) < 1e-12);
      }
    }
  }
}

TEST_CASE("spatial oracle: point mass, positivity, scale cap") {
  GridField delta = GridField::zeros(2, 16, 0.25);
  delta.data[5 * 16 + 7] = 1.0;
  const BodySpec cube = normalized(BodySpec::cube(2));
  GridField o = spatial_convolve_oracle(delta, cube, 1.0);
  // offsets with |j| * 0.25 <= 0.5 per axis: 5 x 5 points
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    Eigen::VectorXi p = ivec({int(i / 16), int(i % 16)});
    const bool inside = std::abs(p[0] - 5) <= 2 && std::abs(p[1] - 7) <= 2;
    CHECK(std::abs(o.data[i] - (inside ? 1.0 / 25 : 0.0)) < 1e-15);
  }
  GridField pos = random_field(2, 32, 4.0, 5, 6);
  pos.data = pos.data.cwiseAbs().cast<cd>();
  GridField op = spatial_convolve_oracle(pos, normalized(BodySpec::ball(2.0, 2)), 0.8);
  CHECK(op.data.real().minCoeff() >= 0.0);
  CHECK(spatial_convolve_oracle(GridField::constant(3, 8, 0.5, 1.5), cube.d == 3 ? cube : normalized(BodySpec::cube(3)),
                                1.0)
            .data.real()
            .maxCoeff() == doctest::Approx(1.5));
  CHECK_THROWS_AS(spatial_convolve_oracle(GridField::zeros(2, 128, 0.1), cube, 1.0), DomainError);
  CHECK_THROWS_AS(spatial_convolve_oracle(GridField::zeros(4, 4, 0.1), normalized(BodySpec::cube(4)), 1.0),
                  DomainError);
}

TEST_CASE("continuous average matches direct cubature") {
  for (int d = 1; d <= 3; ++d) {
    CounterRng rng(20 + d, "cub");
    const double P = 4.0;
    TrigPoly p = random_trig_poly(d, P, d == 3 ? 2 : 3, rng);
    GridField f = p.sample(16);
    const Eigen::Index step = d == 1 ? 1 : d == 2 ? 13 : 211;
    for (const BodySpec& body : {normalized(BodySpec::ball(2.0, d)), normalized(BodySpec::cube(d))}) {
      const Symbol m = Symbol::for_body(body);
      for (double t : {0.3, 1.1}) {
        GridField a = average_mt(f, m, t);
        double err = 0, scale = 0;
        for (Eigen::Index i = 0; i < f.size(); i += step) {
          const cd direct = average_direct(p, body, t, f.point(i), 24);
          err = std::max(err, std::abs(a.data[i] - direct));
          scale = std::max(scale, std::abs(direct));
        }
        CHECK(err < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("Littlewood-Paley pieces telescope") {
  GridField f = random_field(2, 32, 8.0, 6, 7);
  GridField zero_mean = f;
  zero_mean.data.array() -= f.data.mean();
  Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(f.size());
  for (int n = -30; n <= 30; ++n) sum += littlewood_paley_Sn(f, n, 1.0).data;
  // sum_n S_n = P_{2^30} - P_{2^-31} -> -(f - mean)
  CHECK((sum + zero_mean.data).norm() / zero_mean.data.norm() < 1e-8);
}

TEST_CASE("g-function") {
  GridField c = GridField::constant(2, 16, 0.5, 3.0);
  GridField gc = g_function(c, default_log_grid(c));
  CHECK(gc.data.cwiseAbs().maxCoeff() == 0.0);
  // int_0^inf t (2 pi |k|)^2 e^(-4 pi t |k|) dt = 1/4 for every k != 0
  for (auto k : {ivec({1, 0}), ivec({2, -3})}) {
    GridField e = single_mode(2, 8.0, k, cd(0.6, -0.8)).sample(16);
    GridField g = g_function(e, default_log_grid(e));
    CHECK((g.data.real().array() - 0.5).abs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("spherical symbol") {
  for (int d : {2, 3, 5, 8}) {
    const double rho = ball2_normalized_radius(d);
    for (double x : {0.0, 0.05, 0.4, 1.7, 6.0}) {
      Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
      xi[0] = x;
      for (double t : {0.3, 1.0, 2.5}) {
        const double z = 2 * M_PI * rho * t * x;
        CHECK(std::abs(spherical_symbol(d, t, xi) - lambda_nu(0.5 * d - 1, z)) < 1e-12);
      }
    }
  }
  // d = 3 classical form sin(z)/z, and Monte Carlo on the sphere
  const double rho = ball2_normalized_radius(3);
  std::mt19937_64 g(11);
  std::normal_distribution<double> N;
  const int S = 200000;
  Eigen::MatrixXd pts(3, S);
  for (int j = 0; j < S; ++j) {
    Eigen::Vector3d v(N(g), N(g), N(g));
    pts.col(j) = v.normalized();
  }
  for (int q = 0; q < 10; ++q) {
    Eigen::Vector3d xi(0.1 + 0.3 * q, -0.2 * q, 0.15);
    const double t = 0.8;
    const double s = spherical_symbol(3, t, xi);
    const double z = 2 * M_PI * rho * t * xi.norm();
    CHECK(s == doctest::Approx(std::sin(z) / z).epsilon(1e-12));
    Eigen::ArrayXd c = (2 * M_PI * rho * t * (xi.transpose() * pts)).array().cos().transpose();
    const double mean = c.mean();
    const double se = std::sqrt((c - mean).square().sum() / (S - 1) / S);
    CHECK(std::abs(mean - s) <= 3 * se);
  }
}

TEST_CASE("sphere averages integrate to the ball average") {
  for (int d : {2, 3, 5, 8}) {
    const Symbol m = Symbol::ball2(d);
    for (double t : {0.25, 1.0, 3.0}) {
      for (double x : {0.1, 0.9, 2.5}) {
        Eigen::VectorXd xi = Eigen::VectorXd::Constant(d, x / std::sqrt(double(d)));
        auto integrand = [&](double u) { return u == 0 ? 0.0 : d * std::pow(u, d - 1) * spherical_symbol(d, t * u, xi); };
        const QuadResult q = integrate(integrand, 0.0, 1.0, 1e-12, 1e-12, 20);
        CHECK(std::abs(q.value - m(t * xi)) < 1e-6);
      }
    }
  }
}

TEST_CASE("variation fields") {
  const Symbol m = Symbol::ball2(2);
  TimeGrid tg{{-2, -1, 0, 1}, 3};
  GridField c = GridField::constant(2, 16, 0.5, 1.0);
  CHECK(pointwise_variation_field(c, m, tg, 2.0).data.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(short_variation_square_function(c, m, tg).data.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(lacunary_variation(c, m, -2, 2, 2.0).data.cwiseAbs().maxCoeff() < 1e-13);

  // a single complex mode factorizes: V_r(x) = |f(x)| V_r(m(t k))
  const Eigen::VectorXi k = ivec({2, 1});
  GridField e = single_mode(2, 8.0, k, cd(0.3, 0.4)).sample(16);
  const auto ts = tg.times();
  Eigen::VectorXd path(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) path[Eigen::Index(i)] = m(ts[i] * k.cast<double>() / 8.0);
  for (double r : {1.0, 1.5, 2.0, 3.0}) {
    GridField v = pointwise_variation_field(e, m, tg, r);
    CHECK((v.data.real().array() - 0.5 * vr_exact(path, r).value).abs().maxCoeff() < 1e-12);
  }
  SamplePath sp(ts, path.cast<cd>());
  const VariationReport rep = long_short_split(sp, 2.0);
  GridField sq = short_variation_square_function(e, m, tg);
  double s = 0;
  for (double b : rep.block_values) s += b * b;
  CHECK((sq.data.real().array() - 0.5 * std::sqrt(s)).abs().maxCoeff() < 1e-12);

  // lacunary times are a subset of the grid times
  GridField f = random_field(2, 16, 8.0, 5, 8);
  for (double r : {2.0, 3.0}) {
    GridField full = pointwise_variation_field(f, m, tg, r);
    GridField lac = lacunary_variation(f, m, -2, 2, r);
    CHECK((lac.data.real() - full.data.real()).maxCoeff() <= 1e-13);
    CHECK(std::isfinite(lp_norm(full, 2)));
    CHECK(lp_norm(full, 2) / lp_norm(f, 2) < 3.0);
  }
}

TEST_CASE("time grid") {
  TimeGrid tg{{0, 1}, 2};
  const auto t = tg.times();
  const std::vector<double> want{1, 1.25, 1.5, 1.75, 2, 2.5, 3, 3.5, 4};
  CHECK(t == want);
  CHECK_THROWS_AS((TimeGrid{{1, 0}, 2}.times()), DomainError);
  CHECK_THROWS_AS((TimeGrid{{}, 2}.times()), DomainError);
}

TEST_CASE("difference norms") {
  const Symbol m = Symbol::ball2(2);
  GridField e = single_mode(2, 4.0, ivec({1, 2})).sample(8);
  CHECK(average_difference_norm(e, m, 0.7, 0.0, 2.0) == 0.0);
  const Eigen::VectorXd k = Eigen::Vector2d(1, 2) / 4.0;
  for (double p : {1.0, 2.0, 4.0}) {
    const double want = std::abs(m(1.4 * k) - m(0.7 * k)) * lp_norm(e, p);
    CHECK(average_difference_norm(e, m, 0.7, 0.7, p) == doctest::Approx(want).epsilon(1e-12));
  }
  // B_2 in d = 8: log-log slope of the difference norm in h/t
  const Symbol m8 = Symbol::ball2(8);
  Eigen::VectorXi k8 = Eigen::VectorXi::Zero(8);
  k8[0] = 1;
  k8[3] = 1;
  GridField e8 = single_mode(8, 2.0, k8).sample(4);
  std::vector<double> x, y;
  for (int j = 2; j <= 10; ++j) {
    const double h = std::ldexp(1.0, -j);
    x.push_back(std::log(h));
    y.push_back(std::log(average_difference_norm(e8, m8, 1.0, h, 2.0)));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  CHECK(sxy / sxx >= 0.5);
}

TEST_CASE("cutoff eta") {
  CHECK(cutoff_eta(0.5) == 0.0);
  CHECK(cutoff_eta(3.0) == 0.0);
  CHECK(cutoff_eta(0.2) == 0.0);
  CHECK(cutoff_eta(1.0) == 1.0);
  CHECK(cutoff_eta(1.5) == 1.0);
  CHECK(cutoff_eta(2.0) == 1.0);
  CHECK(cutoff_eta(0.75) == doctest::Approx(0.5));
  CHECK(cutoff_eta(2.5) == doctest::Approx(0.5));
  for (double t = 0.5; t < 3.0; t += 0.01) CHECK((cutoff_eta(t) >= 0.0 && cutoff_eta(t) <= 1.0));
}

TEST_CASE("fractional variation ratio") {
  const Symbol m = Symbol::ball2(2);
  TimeGrid tg{{-1, 0, 1}, 4};
  RatioPair z = fractional_variation_ratio(GridField::zeros(2, 8, 0.5), m, 0.8, 2.0, tg);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK_THROWS_AS(fractional_variation_ratio(GridField::zeros(2, 8, 0.5), m, 0.4, 2.0, tg), DomainError);

  // single mode: both sides are scalar functions of the symbol
  const Eigen::VectorXi k = ivec({1, 1});
  GridField e = single_mode(2, 4.0, k).sample(8);
  const Eigen::VectorXd xi = k.cast<double>() / 4.0;
  std::vector<cd> path{0.0};
  double sup = 0;
  for (double t : tg.times()) {
    if (cutoff_eta(t) == 0) continue;
    path.push_back(cutoff_eta(t) * m(t * xi));
    sup = std::max(sup, std::abs(frac_deriv_symbol(m, 0.8, 1.0, t * xi).value));
  }
  path.push_back(0.0);
  Eigen::Map<Eigen::VectorXcd> pv(path.data(), Eigen::Index(path.size()));
  const double norm = lp_norm(e, 2.0);  // = period^(d/2)
  RatioPair r = fractional_variation_ratio(e, m, 0.8, 2.0, tg);
  CHECK(r.lhs == doctest::Approx(norm * vr_exact(pv, 2.0).value).epsilon(1e-10));
  CHECK(r.rhs == doctest::Approx(norm * (1 + sup)).epsilon(1e-6));

  // a smooth bump: the ratio is stable under refinement
  auto bump_field = [](int n) {
    GridField f = GridField::zeros(2, n, 8.0 / n);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double r2 = (f.point(i).array() - 4.0).square().sum();
      f.data[i] = std::exp(-r2 / (2 * 0.6 * 0.6));
    }
    return f;
  };
  RatioPair a = fractional_variation_ratio(bump_field(32), m, 0.8, 2.0, tg);
  RatioPair b = fractional_variation_ratio(bump_field(64), m, 0.8, 2.0, tg);
  const double ra = a.lhs / a.rhs, rb = b.lhs / b.rhs;
  CHECK(std::isfinite(ra));
  CHECK(std::abs(ra - rb) / rb < 0.1);
}

TEST_CASE("time-derivative square functions") {
  const Symbol m = Symbol::ball2(4);
  GridField c = GridField::constant(4, 4, 1.0, 2.0);
  LogTimeGrid lg{1e-5, 1e2, 20000};  // resolves the oscillation up to t_max
  CHECK(time_derivative_square_function(MeanFamily::Ball, m, c, lg).data.cwiseAbs().maxCoeff() == 0.0);
  CHECK(time_derivative_square_function(MeanFamily::Sphere, m, c, lg).data.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(time_derivative_square_function(MeanFamily::Sphere, Symbol::ball2(3),
                                                  GridField::zeros(3, 4, 1.0), lg),
                  DomainError);

  // single mode vs a 1-D adaptive quadrature in t
  const Eigen::VectorXi k = ivec({1, 0, 1, 0});
  GridField e = single_mode(4, 4.0, k, cd(0.0, 2.0)).sample(4);
  const Eigen::VectorXd xi = k.cast<double>() / 4.0;
  auto scalar = [&](const std::function<double(double)>& tdt) {
    auto f = [&](double s) {
      const double v = tdt(std::exp(s));
      return v * v;
    };
    return std::sqrt(integrate(f, std::log(1e-5), std::log(1e2), 1e-14, 1e-9, 20).value);
  };
  // five-point differences in t, independent of the closed forms
  auto tdiff = [](const std::function<double(double)>& g, double t) {
    const double h = 1e-4 * t;
    return t * (8 * (g(t + h) - g(t - h)) - (g(t + 2 * h) - g(t - 2 * h))) / (12 * h);
  };
  const double ball = scalar([&](double t) { return tdiff([&](double s) { return m(s * xi); }, t); });
  const double sphere = scalar([&](double t) { return tdiff([&](double s) { return spherical_symbol(4, s, xi); }, t); });
  GridField gb = time_derivative_square_function(MeanFamily::Ball, m, e, lg);
  GridField gs = time_derivative_square_function(MeanFamily::Sphere, m, e, lg);
  CHECK((gb.data.real().array() - 2 * ball).abs().maxCoeff() < 1e-6 * ball);
  CHECK((gs.data.real().array() - 2 * sphere).abs().maxCoeff() < 1e-6 * sphere);
}

TEST_CASE("square function dominates the short variation") {
  const Symbol m = Symbol::ball2(2);
  GridField f = random_field(2, 16, 8.0, 4, 9);
  TimeGrid tg{{-3, -2, -1, 0, 1, 2}, 4};
  GridField sv = short_variation_square_function(f, m, tg);
  GridField sq = time_derivative_square_function(MeanFamily::Ball, m, f, default_log_grid(f));
  CHECK((sv.data.real() - sq.data.real()).maxCoeff() <= 1e-12);

  // the same per point through the sampled-path integral bound
  const auto ts = tg.times();
  for (Eigen::Index i = 0; i < f.size(); i += 23) {
    Eigen::VectorXcd a(Eigen::Index(ts.size())), da(Eigen::Index(ts.size()));
    for (std::size_t j = 0; j < ts.size(); ++j) {
      a[Eigen::Index(j)] = average_mt(f, m, ts[j]).data[i];
      da[Eigen::Index(j)] = apply_symbol(f, [&](const Eigen::VectorXd& x) {
                              return cd(m.radial_derivative(ts[j] * x) / ts[j], 0.0);
                            }).data[i];
    }
    const DerivativeBounds db = derivative_variation_bounds(SamplePath(ts, a), 2.0, da, false);
    // square_bound is a trapezoid sum on the sample grid: allow its quadrature error
    CHECK(sv.data[i].real() <= db.square_bound * 1.02 + 1e-12);
    CHECK(db.square_bound <= sq.data[i].real() * 1.02 + 1e-12);
  }
}

TEST_CASE("field files round trip") {
  GridField f = random_field(2, 8, 2.0, 2, 12);
  const std::string path = "test_grid_roundtrip.dvf";
  write_field(path, f);
  GridField g = read_field(path);
  CHECK(g.d == 2);
  CHECK(g.n == 8);
  CHECK(g.spacing == f.spacing);
  REQUIRE(g.band_limit);
  CHECK(*g.band_limit == 2);
  CHECK((g.data - f.data).cwiseAbs().maxCoeff() < 1e-6);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_field("no_such_file.dvf"), DomainError);
}
