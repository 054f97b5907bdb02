#include "dimvar/variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dimvar {

namespace {

inline double powr(double x, double r) {
  if (r == 1.0) return x;
  if (r == 2.0) return x * x;
  return std::pow(x, r);
}

int floor_log2_ticks(std::int64_t tick, int rho) {
  // floor(log2(tick * 2^-rho)) for tick > 0
  int b = 63 - __builtin_clzll(static_cast<unsigned long long>(tick));
  return b - rho;
}

}  // namespace

SamplePath::SamplePath(std::vector<double> times, Eigen::VectorXcd vals, int rho_)
    : rho(rho_), values(std::move(vals)) {
  ticks.reserve(times.size());
  for (double t : times) ticks.push_back(Dyadic::from_double(t, rho).num);
  validate();
}

SamplePath::SamplePath(std::vector<Dyadic> times, Eigen::VectorXcd vals) : values(std::move(vals)) {
  rho = 0;
  for (const auto& t : times) rho = std::max(rho, t.rho);
  for (const auto& t : times) ticks.push_back(t.at_resolution(rho).num);
  validate();
}

double SamplePath::time(Eigen::Index i) const {
  return std::ldexp(static_cast<double>(ticks[std::size_t(i)]), -rho);
}

std::vector<double> SamplePath::times() const {
  std::vector<double> out(ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) out[i] = std::ldexp(double(ticks[i]), -rho);
  return out;
}

void SamplePath::validate() const {
  require(values.size() >= 1, "sample path is empty");
  require(static_cast<Eigen::Index>(ticks.size()) == values.size(),
          "sample path: times and values differ in length");
  for (std::size_t i = 1; i < ticks.size(); ++i)
    require(ticks[i - 1] < ticks[i], "sample path: times must be strictly increasing");
}

double VariationReport::short_value() const {
  double s = 0.0;
  for (double b : block_values) s += powr(b, r);
  return std::pow(s, 1.0 / r);
}

namespace detail {

VariationReport vr_dp(const Eigen::VectorXcd& v, double r) {
  const Eigen::Index n = v.size();
  std::vector<double> best(std::size_t(n), 0.0);
  std::vector<Eigen::Index> len(std::size_t(n), 1), parent(std::size_t(n), -1);
  for (Eigen::Index i = 1; i < n; ++i) {
    auto& bi = best[std::size_t(i)];
    for (Eigen::Index j = 0; j < i; ++j) {
      double cand = best[std::size_t(j)] + powr(std::abs(v[i] - v[j]), r);
      Eigen::Index cl = len[std::size_t(j)] + 1;
      if (cand > bi || (cand == bi && cl < len[std::size_t(i)])) {
        bi = cand;
        len[std::size_t(i)] = cl;
        parent[std::size_t(i)] = j;
      }
    }
  }
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const auto si = std::size_t(i), sa = std::size_t(arg);
    if (best[si] > best[sa] || (best[si] == best[sa] && len[si] < len[sa])) arg = i;
  }
  VariationReport rep;
  rep.r = r;
  rep.value = std::pow(best[std::size_t(arg)], 1.0 / r);
  for (Eigen::Index i = arg; i >= 0; i = parent[std::size_t(i)]) rep.witness.push_back(i);
  std::reverse(rep.witness.begin(), rep.witness.end());
  return rep;
}

double vr_brute(const Eigen::VectorXcd& v, double r, int) {
  const int n = static_cast<int>(v.size());
  double best = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double s = 0.0;
    int prev = -1;
    for (int i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      if (prev >= 0) s += powr(std::abs(v[i] - v[prev]), r);
      prev = i;
    }
    best = std::max(best, s);
  }
  return std::pow(best, 1.0 / r);
}

}  // namespace detail

double block_variation_bound(const SamplePath& path, int n, double r) {
  path.validate();
  require(r >= 1.0 && std::isfinite(r), "block_variation_bound: need finite r >= 1");
  const std::int64_t pts = path.size() - 1;
  require(pts >= 1 && (pts & (pts - 1)) == 0,
          "block_variation_bound: need 2^L + 1 samples on the closed block grid");
  const int L = 63 - __builtin_clzll(static_cast<unsigned long long>(pts));
  require(n + path.rho - L >= 0, "block_variation_bound: grid finer than the time resolution");
  const std::int64_t base = std::int64_t{1} << (n + path.rho);
  const std::int64_t step = std::int64_t{1} << (n + path.rho - L);
  for (std::int64_t k = 0; k <= pts; ++k)
    require(path.ticks[std::size_t(k)] == base + k * step,
            "block_variation_bound: times are not the dyadic grid of the block");

  double total = 0.0;
  for (int l = 0; l <= L; ++l) {
    const Eigen::Index stride = Eigen::Index{1} << (L - l);
    double s = 0.0;
    for (Eigen::Index k = 0; k + stride <= pts; k += stride)
      s += powr(std::abs(path.values[k + stride] - path.values[k]), r);
    total += std::pow(s, 1.0 / r);
  }
  return total;
}

VariationReport long_short_split(const SamplePath& path, double r) {
  path.validate();
  require(r >= 1.0 && std::isfinite(r), "long_short_split: need finite r >= 1");
  require(path.ticks.front() > 0, "long_short_split: times must be positive");
  const int n0 = floor_log2_ticks(path.ticks.front(), path.rho);
  const int n1 = floor_log2_ticks(path.ticks.back(), path.rho);

  auto index_of = [&](std::int64_t tick) -> Eigen::Index {
    auto it = std::lower_bound(path.ticks.begin(), path.ticks.end(), tick);
    if (it == path.ticks.end() || *it != tick) return -1;
    return it - path.ticks.begin();
  };

  std::vector<Eigen::Index> anchors;
  for (int n = n0; n <= n1 + 1; ++n) {
    const std::int64_t tick = std::int64_t{1} << (n + path.rho);
    if (tick < path.ticks.front() || tick > path.ticks.back()) continue;
    Eigen::Index idx = index_of(tick);
    require(idx >= 0, "long_short_split: missing sample at the dyadic time 2^" + std::to_string(n));
    anchors.push_back(idx);
  }

  VariationReport rep = vr_exact(path.values, r);
  if (anchors.size() >= 2) {
    Eigen::VectorXcd a(Eigen::Index(anchors.size()));
    for (std::size_t i = 0; i < anchors.size(); ++i) a[Eigen::Index(i)] = path.values[anchors[i]];
    rep.long_value = vr_exact(a, r).value;
  }
  for (int n = n0; n <= n1; ++n) {
    const std::int64_t lo = std::int64_t{1} << (n + path.rho), hi = lo << 1;
    auto first = std::lower_bound(path.ticks.begin(), path.ticks.end(), lo);
    auto last = std::upper_bound(path.ticks.begin(), path.ticks.end(), hi);
    const Eigen::Index i0 = first - path.ticks.begin(), cnt = last - first;
    if (cnt == 0) continue;
    rep.block_exponents.push_back(n);
    rep.block_values.push_back(vr_exact(path.values.segment(i0, cnt), r).value);
  }
  return rep;
}

ContinuityCheck modulus_of_continuity_check(const SamplePath& path, double r, const Dyadic& h) {
  path.validate();
  require(r >= 1.0 && std::isfinite(r), "modulus_of_continuity_check: need finite r >= 1");
  const Eigen::Index n = path.size();
  ContinuityCheck out;
  if (n < 2) return out;
  const std::int64_t dt = path.ticks[1] - path.ticks[0];
  for (Eigen::Index i = 1; i < n; ++i)
    require(path.ticks[std::size_t(i)] - path.ticks[std::size_t(i - 1)] == dt,
            "modulus_of_continuity_check: grid is not uniform");
  const int R = std::max(h.rho, path.rho);
  const std::int64_t ht = h.at_resolution(R).num, dtr = dt << (R - path.rho);
  require(ht > 0 && ht % dtr == 0,
          "modulus_of_continuity_check: h must be a positive multiple of the grid step");
  const Eigen::Index s = static_cast<Eigen::Index>(ht / dtr);
  const double step = std::ldexp(double(dt), -path.rho);
  double sum = 0.0;
  for (Eigen::Index i = 0; i + s < n; ++i) sum += powr(std::abs(path.values[i + s] - path.values[i]), r);
  out.lhs = std::pow(sum * step, 1.0 / r);
  out.rhs = vr_exact(path.values, r).value * std::pow(h.to_double(), 1.0 / r);
  return out;
}

DerivativeBounds derivative_variation_bounds(const SamplePath& path, double r,
                                             const Eigen::VectorXcd& derivative, bool need_v15) {
  path.validate();
  require(r >= 2.0 && std::isfinite(r), "derivative_variation_bounds: need finite r >= 2");
  require(path.ticks.front() > 0, "derivative_variation_bounds: times must be positive");
  const Eigen::Index n = path.size();
  const std::vector<double> t = path.times();
  const Eigen::VectorXcd& a = path.values;
  if (need_v15) {
    for (Eigen::Index i = 0; i < n; ++i)
      require(a[i].imag() == 0.0 && a[i].real() >= 0.0,
              "derivative_variation_bounds: the (15) bound needs a nonnegative path");
  }
  DerivativeBounds out;
  if (n < 2) return out;

  Eigen::VectorXcd da = derivative;
  if (da.size() == 0) {
    da.resize(n);
    da[0] = (a[1] - a[0]) / (t[1] - t[0]);
    da[n - 1] = (a[n - 1] - a[n - 2]) / (t[std::size_t(n - 1)] - t[std::size_t(n - 2)]);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double h0 = t[std::size_t(i)] - t[std::size_t(i - 1)];
      const double h1 = t[std::size_t(i + 1)] - t[std::size_t(i)];
      da[i] = (a[i + 1] * h0 * h0 - a[i - 1] * h1 * h1 + a[i] * (h1 * h1 - h0 * h0)) /
              (h0 * h1 * (h0 + h1));
    }
  }
  require(da.size() == n, "derivative_variation_bounds: derivative length mismatch");

  double i_a = 0.0, i_d = 0.0, block = 0.0, block_max = 0.0;
  int cur = floor_log2_ticks(path.ticks[0], path.rho);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double t0 = t[std::size_t(i)], t1 = t[std::size_t(i + 1)], w = 0.5 * (t1 - t0);
    const int blk = floor_log2_ticks(path.ticks[std::size_t(i)], path.rho);
    if (blk != cur) {
      block_max = std::max(block_max, block);
      block = 0.0;
      cur = blk;
    }
    i_a += w * (std::norm(a[i]) / t0 + std::norm(a[i + 1]) / t1);
    const double seg = w * (t0 * std::norm(da[i]) + t1 * std::norm(da[i + 1]));
    i_d += seg;
    block += seg;
  }
  block_max = std::max(block_max, block);
  out.product_bound = need_v15 ? std::pow(i_a, 0.25) * std::pow(i_d, 0.25) : 0.0;
  out.block_bound = std::sqrt(block_max);
  out.square_bound = std::sqrt(i_d);
  return out;
}

}  // namespace dimvar
