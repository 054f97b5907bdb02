#include "dimvar/bodies.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <random>
#include <cstring>
#include <sstream>

#include "dimvar/error.hpp"
#include "dimvar/quadrature.hpp"

namespace dimvar {

namespace {

constexpr long kPartition = 4096;

// Runs `body(rng, count)` on consecutive partitions with independent substreams and
// returns the per-partition results; callers reduce them in a fixed order.
template <class F>
auto partitioned(long samples, std::uint64_t key, F&& fn) {
  using R = decltype(fn(std::declval<CounterRng&>(), 0L));
  std::vector<R> parts;
  CounterRng root(key);
  for (long start = 0, p = 0; start < samples; start += kPartition, ++p) {
    CounterRng rng = root.substream(std::uint64_t(p));
    parts.push_back(fn(rng, std::min(kPartition, samples - start)));
  }
  return parts;
}

// Pairwise (tree) reduction for deterministic summation order.
template <class T>
T tree_sum(std::vector<T> v) {
  if (v.empty()) return T{};
  while (v.size() > 1) {
    std::vector<T> next;
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) next.push_back(v[i] + v[i + 1]);
    if (v.size() % 2) next.push_back(v.back());
    v.swap(next);
  }
  return v[0];
}

void check_d(int d) { require(d >= 1, "dimension must be positive"); }

Eigen::VectorXd unit(const Eigen::VectorXd& xi) {
  double n = xi.norm();
  require(n > 0 && std::isfinite(n), "direction must be a nonzero finite vector");
  return xi / n;
}

}  // namespace

BodySpec BodySpec::ball(double q, int d, double scale) {
  check_d(d);
  require(q >= 1.0, "B_q needs q >= 1");
  require(scale > 0 && std::isfinite(scale), "scale must be positive");
  BodySpec b;
  b.kind = Kind::BallQ;
  b.d = d;
  b.q = q;
  b.scale = scale;
  return b;
}

BodySpec BodySpec::oracle(std::string label, int d, double bound,
                          std::function<bool(const Eigen::VectorXd&)> member, double scale) {
  check_d(d);
  require(bound > 0 && scale > 0, "oracle body needs positive bound and scale");
  require(static_cast<bool>(member), "oracle body needs a membership test");
  BodySpec b;
  b.kind = Kind::Oracle;
  b.d = d;
  b.q = 0.0;
  b.scale = scale;
  b.bound = bound;
  b.member = std::move(member);
  b.label = std::move(label);
  return b;
}

double BodySpec::gauge(const Eigen::VectorXd& x) const {
  require(kind == Kind::BallQ, "gauge is only available for B_q bodies");
  if (q == kInf) return x.cwiseAbs().maxCoeff() / scale;
  if (q == 2.0) return x.norm() / scale;
  if (q == 1.0) return x.cwiseAbs().sum() / scale;
  double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return m * std::pow((x.cwiseAbs() / m).array().pow(q).sum(), 1.0 / q) / scale;
}

bool BodySpec::contains(const Eigen::VectorXd& x) const {
  if (kind == Kind::BallQ) return gauge(x) <= 1.0;
  return member(x / scale);
}

double BodySpec::box_halfwidth() const { return kind == Kind::BallQ ? scale : bound * scale; }

double BodySpec::euclid_radius() const {
  if (kind == Kind::Oracle) return bound * scale;
  // max |x|_2 on B_q is d^(1/2 - 1/q) for q >= 2, and 1 for q <= 2
  if (q <= 2.0) return scale;
  return scale * std::pow(double(d), 0.5 - (q == kInf ? 0.0 : 1.0 / q));
}

BodySpec BodySpec::scaled(double c) const {
  require(c > 0 && std::isfinite(c), "dilation factor must be positive");
  BodySpec b = *this;
  b.scale *= c;
  return b;
}

std::string BodySpec::name() const {
  if (kind == Kind::Oracle) return "oracle:" + label;
  if (q == kInf) return "binf";
  std::ostringstream os;
  os << 'b' << q;
  return os.str();
}

std::uint64_t BodySpec::hash() const {
  std::uint64_t h = hash_str(name());
  h = hash_combine(h, std::uint64_t(d));
  std::uint64_t bits;
  std::memcpy(&bits, &scale, sizeof bits);
  return hash_combine(h, bits);
}

double ballq_log_volume(double q, int d) {
  check_d(d);
  if (q == kInf) return d * std::log(2.0);
  return d * std::log(2.0) + d * std::lgamma(1.0 + 1.0 / q) - std::lgamma(1.0 + d / q);
}

double ball2_normalized_radius(int d) { return std::exp(-ballq_log_volume(2.0, d) / d); }

double ballq_isotropic_constant(double q, int d) {
  check_d(d);
  // I = int_{B_q} x_1^2 dx = 2 V_{d-1} int_0^1 x^2 (1 - x^q)^{(d-1)/q} dx
  double log_i;
  if (q == kInf) {
    log_i = d * std::log(2.0) - std::log(3.0);
  } else {
    double log_vm1 = d > 1 ? ballq_log_volume(q, d - 1) : 0.0;
    log_i = std::log(2.0) + log_vm1 - std::log(q) + std::log(boost::math::beta(3.0 / q, (d - 1) / q + 1.0));
  }
  // L^2 = lambda^{d+2} I with lambda = Vol^{-1/d}
  double log_l2 = -(d + 2.0) / d * ballq_log_volume(q, d) + log_i;
  return std::exp(0.5 * log_l2);
}

Estimate volume_mc(const BodySpec& body, long samples, std::uint64_t seed) {
  require(samples >= 1, "volume: need at least one sample");
  const int d = body.d;
  const double h = body.box_halfwidth();
  auto parts = partitioned(samples, hash_combine(hash_combine(seed, hash_str("volume")), body.hash()),
                           [&](CounterRng& rng, long n) {
                             long hits = 0;
                             Eigen::VectorXd x(d);
                             for (long i = 0; i < n; ++i) {
                               for (int k = 0; k < d; ++k) x[k] = rng.uniform(-h, h);
                               hits += body.contains(x);
                             }
                             return hits;
                           });
  const double p = double(tree_sum(parts)) / double(samples);
  const double box = std::pow(2.0 * h, d);
  return {box * p, box * std::sqrt(p * (1.0 - p) / double(samples))};
}

Estimate volume(const BodySpec& body, long samples, std::uint64_t seed) {
  if (body.kind == BodySpec::Kind::BallQ)
    return {std::exp(ballq_log_volume(body.q, body.d) + body.d * std::log(body.scale)), 0.0};
  return volume_mc(body, samples, seed);
}

void sample_uniform(const BodySpec& body, CounterRng& rng, Eigen::VectorXd& out) {
  const int d = body.d;
  out.resize(d);
  if (body.kind == BodySpec::Kind::BallQ) {
    if (body.q == kInf) {
      for (int k = 0; k < d; ++k) out[k] = rng.uniform(-body.scale, body.scale);
      return;
    }
    // Barthe-Guedon-Mendelson-Naor: generalized Gaussian coordinates plus an exponential.
    const double q = body.q;
    std::gamma_distribution<double> gam(1.0 / q, 1.0);
    double s = 0.0;
    for (int k = 0; k < d; ++k) {
      double g = gam(rng);
      s += g;
      out[k] = std::pow(g, 1.0 / q) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    s += -std::log(1.0 - rng.uniform());
    out *= body.scale / std::pow(s, 1.0 / q);
    return;
  }
  const double h = body.box_halfwidth();
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    for (int k = 0; k < d; ++k) out[k] = rng.uniform(-h, h);
    if (body.contains(out)) return;
  }
  throw DomainError("rejection sampler acceptance below 1e-6; use the closed-form B_q path instead");
}

Covariance covariance_mc(const BodySpec& body, long samples, std::uint64_t seed) {
  require(samples >= 2, "covariance: need at least two samples");
  const int d = body.d;
  struct Acc {
    Eigen::MatrixXd s1, s2;
    Acc operator+(const Acc& o) const { return {s1 + o.s1, s2 + o.s2}; }
  };
  auto parts = partitioned(samples, hash_combine(hash_combine(seed, hash_str("covariance")), body.hash()),
                           [&](CounterRng& rng, long n) {
                             Acc a{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
                             Eigen::VectorXd x;
                             for (long i = 0; i < n; ++i) {
                               sample_uniform(body, rng, x);
                               Eigen::MatrixXd xx = x * x.transpose();
                               a.s1 += xx;
                               a.s2 += xx.cwiseProduct(xx);
                             }
                             return a;
                           });
  Acc tot = tree_sum(parts);
  const double n = double(samples);
  Covariance c;
  c.mean = tot.s1 / n;
  c.se = ((tot.s2 / n - c.mean.cwiseProduct(c.mean)).cwiseMax(0.0) / (n - 1.0)).cwiseSqrt();
  return c;
}

IsotropicData isotropic_normalize(const BodySpec& body, long samples, std::uint64_t seed) {
  IsotropicData out;
  const int d = body.d;
  if (body.kind == BodySpec::Kind::BallQ) {
    out.volume = volume(body).value;
    out.iso_scale = std::exp(-ballq_log_volume(body.q, d) / d) / body.scale;
    out.L = ballq_isotropic_constant(body.q, d);
    return out;
  }
  // sampled symmetry check
  CounterRng rng(seed, "symmetry", body.hash());
  const double h = body.box_halfwidth();
  Eigen::VectorXd x(d);
  for (int i = 0; i < 4000; ++i) {
    for (int k = 0; k < d; ++k) x[k] = rng.uniform(-h, h);
    if (body.contains(x) != body.contains(-x)) {
      std::ostringstream os;
      os << "oracle body is not symmetric: membership differs at x = (" << x.transpose() << ")";
      throw DomainError(os.str());
    }
  }
  Estimate v = volume_mc(body, samples, seed);
  require(v.value > 0, "oracle body has zero estimated volume");
  out.volume = v.value;
  out.volume_stderr = v.se;
  out.iso_scale = std::pow(v.value, -1.0 / d);
  Covariance c = covariance_mc(body, samples, seed);
  double tr = c.mean.trace() / d, tr_se = c.se.diagonal().norm() / d;
  double l2 = out.iso_scale * out.iso_scale * tr;
  out.L = std::sqrt(l2);
  // delta method: lambda^2 ~ V^{-2/d}
  double rel = std::hypot(tr_se / tr, 2.0 / d * v.se / v.value);
  out.L_stderr = 0.5 * out.L * rel;
  return out;
}

BodySpec normalized(const BodySpec& body, long samples, std::uint64_t seed) {
  if (body.kind == BodySpec::Kind::BallQ)
    return body.scaled(std::exp(-ballq_log_volume(body.q, body.d) / body.d) / body.scale);
  Estimate v = volume_mc(body, samples, seed);
  require(v.value > 0, "oracle body has zero estimated volume");
  return body.scaled(std::pow(v.value, -1.0 / body.d));
}

Estimate section_volume(const BodySpec& body, const Eigen::VectorXd& xi_in, double u, long samples,
                        std::uint64_t seed) {
  require(samples >= 1, "section_volume: need at least one sample");
  require(xi_in.size() == body.d, "section_volume: direction has the wrong dimension");
  const Eigen::VectorXd xi = unit(xi_in);
  const int d = body.d;
  int j = 0;
  xi.cwiseAbs().maxCoeff(&j);
  const double h = body.box_halfwidth(), R = body.euclid_radius();
  const double cell = std::pow(2.0 * h, d - 1) / std::fabs(xi[j]);

  const int ks[3] = {6, 8, 10};
  Eigen::Vector3d est, se, deltas;
  const std::uint64_t key = hash_combine(hash_combine(seed, hash_str("section")), body.hash());
  for (int m = 0; m < 3; ++m) {
    const double delta = R * std::ldexp(1.0, -ks[m]);
    deltas[m] = delta;
    auto parts = partitioned(samples, hash_combine(key, std::uint64_t(ks[m])), [&](CounterRng& rng, long n) {
      long hits = 0;
      Eigen::VectorXd x(d);
      for (long i = 0; i < n; ++i) {
        double dot = 0.0;
        for (int k = 0; k < d; ++k) {
          if (k == j) continue;
          x[k] = rng.uniform(-h, h);
          dot += xi[k] * x[k];
        }
        double w = rng.uniform(-0.5 * delta, 0.5 * delta);
        x[j] = (u + w - dot) / xi[j];
        if (std::fabs(x[j]) <= h) hits += body.contains(x);
      }
      return hits;
    });
    const double p = double(tree_sum(parts)) / double(samples);
    est[m] = cell * p;
    se[m] = cell * std::sqrt(p * (1.0 - p) / double(samples));
  }
  // Least-squares line in delta, evaluated at delta = 0. Linear rather than quadratic
  // because sections with a kink at u (cube diagonals) have O(delta) slab bias.
  Eigen::Matrix<double, 3, 2> X;
  X.col(0).setOnes();
  X.col(1) = deltas;
  Eigen::Matrix<double, 2, 3> P = (X.transpose() * X).inverse() * X.transpose();
  Eigen::Vector3d c = P.row(0).transpose();
  return {c.dot(est), std::sqrt(c.cwiseProduct(se).squaredNorm())};
}

Estimate shadow_volume(const BodySpec& body, const Eigen::VectorXd& xi_in, long samples, std::uint64_t seed) {
  require(xi_in.size() == body.d, "shadow_volume: direction has the wrong dimension");
  const Eigen::VectorXd xi = unit(xi_in);
  const int d = body.d;
  if (body.is_cube()) {
    const double side = 2.0 * body.scale;
    return {std::pow(side, d - 1) * xi.cwiseAbs().sum(), 0.0};
  }
  if (body.is_ball2()) {
    const double lv = d > 1 ? ballq_log_volume(2.0, d - 1) : 0.0;
    return {std::exp(lv + (d - 1) * std::log(body.scale)), 0.0};
  }
  require(samples >= 1, "shadow_volume: need at least one sample");
  if (d == 1) return {1.0, 0.0};
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xi);
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::MatrixXd B = Q.rightCols(d - 1);
  const double R = body.euclid_radius();
  auto parts = partitioned(samples, hash_combine(hash_combine(seed, hash_str("shadow")), body.hash()),
                           [&](CounterRng& rng, long n) {
                             long hits = 0;
                             Eigen::VectorXd c(d - 1), y(d);
                             for (long i = 0; i < n; ++i) {
                               for (int k = 0; k < d - 1; ++k) c[k] = rng.uniform(-R, R);
                               y = B * c;
                               bool hit = false;
                               if (body.kind == BodySpec::Kind::BallQ) {
                                 auto g = [&](double s) { return body.gauge(y + s * xi); };
                                 auto m = boost::math::tools::brent_find_minima(g, -R, R, 24);
                                 hit = m.second <= 1.0;
                               } else {
                                 for (int k = 0; k <= 256 && !hit; ++k)
                                   hit = body.contains(y + (-R + 2.0 * R * k / 256.0) * xi);
                               }
                               hits += hit;
                             }
                             return hits;
                           });
  const double p = double(tree_sum(parts)) / double(samples);
  const double box = std::pow(2.0 * R, d - 1);
  return {box * p, box * std::sqrt(p * (1.0 - p) / double(samples))};
}

std::vector<Eigen::VectorXd> direction_dictionary(int d, int n_random, std::uint64_t seed) {
  check_d(d);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < d; ++i) out.push_back(Eigen::VectorXd::Unit(d, i));
  CounterRng rng(seed, "directions", std::uint64_t(d));
  if (d > 1) {
    const double s = 1.0 / std::sqrt(double(d));
    if (d <= 8) {
      for (std::uint32_t mask = 0; mask < (1u << (d - 1)); ++mask) {
        Eigen::VectorXd v = Eigen::VectorXd::Constant(d, s);
        for (int k = 1; k < d; ++k)
          if (mask >> (k - 1) & 1u) v[k] = -s;
        out.push_back(v);
      }
    } else {
      out.push_back(Eigen::VectorXd::Constant(d, s));
      for (int i = 1; i < 64; ++i) {
        Eigen::VectorXd v(d);
        v[0] = s;
        for (int k = 1; k < d; ++k) v[k] = rng.uniform() < 0.5 ? -s : s;
        out.push_back(v);
      }
    }
  }
  for (int i = 0; i < n_random; ++i) {
    Eigen::VectorXd v(d);
    for (int k = 0; k < d; ++k) v[k] = rng.normal();
    out.push_back(v / v.norm());
  }
  return out;
}

SigmaQ invariants_sigma_q(const BodySpec& body, const std::vector<Eigen::VectorXd>& directions, long samples,
                          std::uint64_t seed) {
  require(!directions.empty(), "invariants_sigma_q: empty direction set");
  SigmaQ out;
  out.sigma_inv.value = -1.0;
  out.Q.value = -1.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    Estimate s;
    if (body.is_ball2()) {
      s = shadow_volume(body, directions[i], 0, 0);  // central section of a ball equals its shadow
    } else {
      s = section_volume(body, directions[i], 0.0, samples, hash_combine(seed, i));
    }
    Estimate q = shadow_volume(body, directions[i], samples, hash_combine(seed, i + 0x5151));
    if (s.value > out.sigma_inv.value) {
      out.sigma_inv = s;
      out.argmax_sigma = int(i);
    }
    if (q.value > out.Q.value) {
      out.Q = q;
      out.argmax_Q = int(i);
    }
  }
  return out;
}

Cubature body_cubature(const BodySpec& body, int order) {
  require(order >= 2, "body_cubature: order must be at least 2");
  const int d = body.d;
  Cubature c;
  if (body.is_cube()) {
    require(d <= 4, "body_cubature: cube cubature limited to d <= 4");
    QuadRule g = gauss_legendre(order, -body.scale, body.scale);
    long n = 1;
    for (int k = 0; k < d; ++k) n *= order;
    c.nodes.resize(d, n);
    c.weights.resize(n);
    for (long i = 0; i < n; ++i) {
      long rem = i;
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        int idx = int(rem % order);
        rem /= order;
        c.nodes(k, i) = g.x[idx];
        w *= g.w[idx];
      }
      c.weights[i] = w;
    }
    return c;
  }
  require(body.is_ball2() && d <= 3, "body_cubature: only cubes and Euclidean balls with d <= 3");
  const double rad = body.scale;
  if (d == 1) {
    QuadRule g = gauss_legendre(order, -rad, rad);
    c.nodes = g.x.transpose();
    c.weights = g.w;
    return c;
  }
  QuadRule gr = gauss_legendre(order, 0.0, rad);
  const int nphi = 2 * order;
  if (d == 2) {
    c.nodes.resize(2, order * nphi);
    c.weights.resize(order * nphi);
    for (int i = 0; i < order; ++i)
      for (int k = 0; k < nphi; ++k) {
        double phi = 2.0 * M_PI * k / nphi;
        int idx = i * nphi + k;
        c.nodes(0, idx) = gr.x[i] * std::cos(phi);
        c.nodes(1, idx) = gr.x[i] * std::sin(phi);
        c.weights[idx] = gr.w[i] * gr.x[i] * 2.0 * M_PI / nphi;
      }
    return c;
  }
  QuadRule gz = gauss_legendre(order, -1.0, 1.0);
  c.nodes.resize(3, order * order * nphi);
  c.weights.resize(order * order * nphi);
  int idx = 0;
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j)
      for (int k = 0; k < nphi; ++k, ++idx) {
        double phi = 2.0 * M_PI * k / nphi, ct = gz.x[j], st = std::sqrt(1.0 - ct * ct);
        c.nodes(0, idx) = gr.x[i] * st * std::cos(phi);
        c.nodes(1, idx) = gr.x[i] * st * std::sin(phi);
        c.nodes(2, idx) = gr.x[i] * ct;
        c.weights[idx] = gr.w[i] * gr.x[i] * gr.x[i] * gz.w[j] * 2.0 * M_PI / nphi;
      }
  return c;
}

}  // namespace dimvar
