#include "dimvar/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "dimvar/error.hpp"
#include "dimvar/special.hpp"
#include "dimvar/variation.hpp"

namespace dimvar {

using cd = std::complex<double>;

namespace {

Eigen::Index ipow(int n, int d) {
  Eigen::Index p = 1;
  for (int i = 0; i < d; ++i) p *= n;
  return p;
}

int wave(int j, int n) { return j <= n / 2 ? j : j - n; }

void check_shape(int d, int n, double spacing) {
  require(d >= 1, "grid: need d >= 1");
  require(n >= 2 && (n & (n - 1)) == 0, "grid: n_per_axis must be a power of two >= 2");
  require(spacing > 0 && std::isfinite(spacing), "grid: spacing must be positive");
  require(double(ipow(n, d)) <= double(1 << 26), "grid: more than 2^26 points");
}

// Canonical key for symbols invariant under coordinate permutations and sign flips.
std::vector<int> symmetric_key(const Eigen::VectorXi& k) {
  std::vector<int> key(k.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) key[std::size_t(i)] = std::abs(k[i]);
  std::sort(key.begin(), key.end());
  return key;
}

bool body_is_symmetric(const Symbol& m) {
  return m.provenance() != Provenance::MonteCarlo && m.body().kind == BodySpec::Kind::BallQ;
}

// Multiplies the spectrum by sym(wavenumber); equal keys share one evaluation.
Eigen::VectorXcd multiply_spectrum(const GridField& f, const Eigen::VectorXcd& F,
                                   const std::function<cd(const Eigen::VectorXi&)>& sym, bool symmetric) {
  Eigen::VectorXcd G = Eigen::VectorXcd::Zero(F.size());
  const double floor = 1e-15 * F.cwiseAbs().maxCoeff();
  std::map<std::vector<int>, cd> cache;
  for (Eigen::Index i = 0; i < F.size(); ++i) {
    if (std::abs(F[i]) <= floor) continue;
    Eigen::VectorXi k = f.wavenumber(i);
    cd s;
    if (symmetric) {
      auto key = symmetric_key(k);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(std::move(key), sym(k)).first;
      s = it->second;
    } else {
      s = sym(k);
    }
    G[i] = s * F[i];
  }
  return G;
}

GridField with_data(const GridField& f, Eigen::VectorXcd data) {
  GridField g = f;
  g.data = std::move(data);
  return g;
}

GridField apply_wavenumber_symbol(const GridField& f, const std::function<cd(const Eigen::VectorXi&)>& sym,
                                  bool symmetric) {
  f.validate();
  Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  return with_data(f, fft_nd(multiply_spectrum(f, F, sym, symmetric), f.d, f.n, true));
}

Eigen::VectorXd freq_of(const Eigen::VectorXi& k, double period) { return k.cast<double>() / period; }

// V_r of one path, value only; vr_exact without the witness bookkeeping.
double path_variation(const cd* v, int T, double r, std::vector<double>& best) {
  best.assign(std::size_t(T), 0.0);
  double top = 0.0;
  const bool cube = r == 3.0, square = r == 2.0;
  for (int i = 1; i < T; ++i) {
    double bi = 0.0;
    for (int j = 0; j < i; ++j) {
      const double dr = v[i].real() - v[j].real(), di = v[i].imag() - v[j].imag();
      const double a2 = dr * dr + di * di;
      double inc;
      if (square)
        inc = a2;
      else if (cube)
        inc = a2 * std::sqrt(a2);
      else
        inc = std::pow(a2, 0.5 * r);
      bi = std::max(bi, best[std::size_t(j)] + inc);
    }
    best[std::size_t(i)] = bi;
    top = std::max(top, bi);
  }
  return std::pow(top, 1.0 / r);
}

constexpr Eigen::Index kPathCap = Eigen::Index(1) << 24;  // (time samples) x (points) held at once

// Calls consume(first_point, values) with values(t, j) = (M_{times[t]} f)(first_point + j),
// chunked over points so that at most kPathCap samples are held.
void for_each_path_chunk(const GridField& f, const std::vector<std::function<cd(const Eigen::VectorXi&)>>& syms,
                         bool symmetric, const std::function<void(Eigen::Index, const Eigen::MatrixXcd&)>& consume) {
  f.validate();
  const Eigen::Index N = f.size(), T = Eigen::Index(syms.size());
  require(T >= 1, "variation field: empty time grid");
  const Eigen::Index chunk = std::max<Eigen::Index>(1, std::min(N, kPathCap / T));
  const Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  std::vector<Eigen::VectorXcd> spectra;
  spectra.reserve(std::size_t(T));
  for (const auto& s : syms) spectra.push_back(multiply_spectrum(f, F, s, symmetric));
  for (Eigen::Index p0 = 0; p0 < N; p0 += chunk) {
    const Eigen::Index len = std::min(chunk, N - p0);
    Eigen::MatrixXcd vals(T, len);
    for (Eigen::Index t = 0; t < T; ++t) {
      Eigen::VectorXcd g = fft_nd(spectra[std::size_t(t)], f.d, f.n, true);
      vals.row(t) = g.segment(p0, len).transpose();
    }
    consume(p0, vals);
  }
}

std::function<cd(const Eigen::VectorXi&)> mt_symbol(const Symbol& m, double t, double period) {
  return [&m, t, period](const Eigen::VectorXi& k) { return cd(m(t * freq_of(k, period)), 0.0); };
}

void check_symbol_dim(const GridField& f, const Symbol& m) {
  require(m.d() == f.d, "grid: symbol dimension differs from field dimension");
}

std::vector<double> trapezoid_weights(int n, double h) {
  std::vector<double> w(std::size_t(n), h);
  if (n >= 2) w.front() = w.back() = 0.5 * h;
  return w;
}

// Lattice offsets (in grid steps) of points of t * body.
std::vector<Eigen::VectorXi> lattice_offsets(const BodySpec& body, double t, double spacing) {
  require(t > 0, "lattice average: need t > 0");
  const int d = body.d;
  const int J = int(std::floor(t * body.box_halfwidth() / spacing + 1e-12));
  std::vector<Eigen::VectorXi> out;
  Eigen::VectorXi j = Eigen::VectorXi::Constant(d, -J);
  Eigen::VectorXd y(d);
  while (true) {
    y = j.cast<double>() * (spacing / t);
    if (body.contains(y)) out.push_back(j);
    int a = d - 1;
    while (a >= 0 && j[a] == J) j[a--] = -J;
    if (a < 0) break;
    ++j[a];
  }
  return out;
}

Eigen::Index wrap_index(const GridField& f, Eigen::Index base, const Eigen::VectorXi& off) {
  // base is a flat index; off is added per axis with periodic wrap
  Eigen::Index idx = 0, rem = base, stride = f.size();
  for (int a = 0; a < f.d; ++a) {
    stride /= f.n;
    const int ja = int(rem / stride);
    rem %= stride;
    int w = (ja + off[a]) % f.n;
    if (w < 0) w += f.n;
    idx += Eigen::Index(w) * stride;
  }
  return idx;
}

}  // namespace

GridField GridField::zeros(int d, int n, double spacing) {
  check_shape(d, n, spacing);
  GridField f;
  f.d = d;
  f.n = n;
  f.spacing = spacing;
  f.data = Eigen::VectorXcd::Zero(ipow(n, d));
  f.band_limit = 0;
  return f;
}

GridField GridField::constant(int d, int n, double spacing, cd c) {
  GridField f = zeros(d, n, spacing);
  f.data.setConstant(c);
  return f;
}

Eigen::VectorXi GridField::wavenumber(Eigen::Index i) const {
  Eigen::VectorXi k(d);
  for (int a = d - 1; a >= 0; --a) {
    k[a] = wave(int(i % n), n);
    i /= n;
  }
  return k;
}

Eigen::VectorXd GridField::frequency(Eigen::Index i) const { return freq_of(wavenumber(i), period()); }

Eigen::VectorXd GridField::point(Eigen::Index i) const {
  Eigen::VectorXd x(d);
  for (int a = d - 1; a >= 0; --a) {
    x[a] = double(i % n) * spacing;
    i /= n;
  }
  return x;
}

void GridField::validate() const {
  check_shape(d, n, spacing);
  require(data.size() == ipow(n, d), "grid: point count differs from n_per_axis^d");
  if (band_limit) require(*band_limit >= 0, "grid: negative band limit");
}

cd TrigPoly::operator()(const Eigen::VectorXd& x) const {
  cd s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i)
    s += c[i] * std::polar(1.0, 2.0 * M_PI * k[i].cast<double>().dot(x) / period);
  return s;
}

int TrigPoly::band() const {
  int b = 0;
  for (const auto& ki : k) b = std::max(b, ki.cwiseAbs().maxCoeff());
  return b;
}

GridField TrigPoly::sample(int n) const {
  require(n > 2 * band(), "trig poly: grid too coarse for the band limit");
  GridField f = GridField::zeros(d, n, period / n);
  Eigen::VectorXcd F = Eigen::VectorXcd::Zero(f.size());
  const double scale = double(f.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    Eigen::Index idx = 0;
    for (int a = 0; a < d; ++a) idx = idx * n + ((k[i][a] % n) + n) % n;
    F[idx] += c[i] * scale;
  }
  f.data = fft_nd(F, d, n, true);
  f.band_limit = band();
  return f;
}

TrigPoly random_trig_poly(int d, double period, int K, CounterRng& rng, bool real_valued, double decay) {
  require(d >= 1 && K >= 0 && period > 0, "random_trig_poly: bad arguments");
  TrigPoly p;
  p.d = d;
  p.period = period;
  std::map<std::vector<int>, cd> coef;
  Eigen::VectorXi k = Eigen::VectorXi::Constant(d, -K);
  while (true) {
    const double amp = std::pow(1.0 + double(k.squaredNorm()), -0.5 * decay);
    std::vector<int> key(k.data(), k.data() + d), neg(key);
    for (int& v : neg) v = -v;
    if (!real_valued) {
      coef[key] = amp * cd(rng.normal(), rng.normal());
    } else if (!coef.count(key)) {
      if (key == neg) {
        coef[key] = amp * rng.normal();
      } else {
        cd c = amp * cd(rng.normal(), rng.normal()) / std::sqrt(2.0);
        coef[key] = c;
        coef[neg] = std::conj(c);
      }
    }
    int a = d - 1;
    while (a >= 0 && k[a] == K) k[a--] = -K;
    if (a < 0) break;
    ++k[a];
  }
  for (const auto& [key, c] : coef) {
    p.k.push_back(Eigen::Map<const Eigen::VectorXi>(key.data(), d));
    p.c.push_back(c);
  }
  return p;
}

TrigPoly single_mode(int d, double period, const Eigen::VectorXi& k, cd c) {
  require(k.size() == d, "single_mode: wavenumber dimension mismatch");
  TrigPoly p;
  p.d = d;
  p.period = period;
  p.k = {k};
  p.c = {c};
  return p;
}

Eigen::VectorXcd fft_nd(const Eigen::VectorXcd& v, int d, int n, bool inverse) {
  require(v.size() == ipow(n, d), "fft_nd: size differs from n^d");
  Eigen::FFT<double> fft;
  Eigen::VectorXcd out = v;
  std::vector<cd> line(static_cast<std::size_t>(n)), res(static_cast<std::size_t>(n));
  Eigen::Index stride = v.size();
  for (int a = 0; a < d; ++a) {
    stride /= n;
    const Eigen::Index outer_step = stride * n;
    for (Eigen::Index o = 0; o < v.size(); o += outer_step) {
      for (Eigen::Index s = 0; s < stride; ++s) {
        const Eigen::Index base = o + s;
        for (int j = 0; j < n; ++j) line[std::size_t(j)] = out[base + j * stride];
        if (inverse)
          fft.inv(res, line);
        else
          fft.fwd(res, line);
        for (int j = 0; j < n; ++j) out[base + j * stride] = res[std::size_t(j)];
      }
    }
  }
  return out;
}

GridField apply_symbol(const GridField& f, const SymbolFn& sym) {
  const double P = f.period();
  return apply_wavenumber_symbol(f, [&](const Eigen::VectorXi& k) { return sym(freq_of(k, P)); }, false);
}

GridField average_mt(const GridField& f, const Symbol& m, double t) {
  check_symbol_dim(f, m);
  require(t > 0, "average_mt: need t > 0");
  if (m.provenance() == Provenance::MonteCarlo)
    require(2.0 * t * m.body().box_halfwidth() <= f.period(),
            "average_mt: G_t wraps the torus; Monte Carlo symbol tables are not valid there");
  return apply_wavenumber_symbol(f, mt_symbol(m, t, f.period()), body_is_symmetric(m));
}

GridField average_mt_lattice(const GridField& f, const BodySpec& body, double t) {
  f.validate();
  require(body.d == f.d, "average_mt_lattice: body dimension differs from field dimension");
  const auto offs = lattice_offsets(body, t, f.spacing);
  require(!offs.empty(), "average_mt_lattice: no grid point inside G_t");
  GridField K = GridField::zeros(f.d, f.n, f.spacing);
  const double w = 1.0 / double(offs.size());
  for (const auto& o : offs) K.data[wrap_index(K, 0, o)] += w;
  const Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  const Eigen::VectorXcd KF = fft_nd(K.data, f.d, f.n, false);
  return with_data(f, fft_nd(F.cwiseProduct(KF), f.d, f.n, true));
}

GridField spatial_convolve_oracle(const GridField& f, const BodySpec& body, double t) {
  f.validate();
  require(f.d <= 3 && f.n <= 64, "spatial_convolve_oracle: oracle scale is d <= 3, n <= 64");
  require(body.d == f.d, "spatial_convolve_oracle: body dimension differs from field dimension");
  const auto offs = lattice_offsets(body, t, f.spacing);
  require(!offs.empty(), "spatial_convolve_oracle: no grid point inside G_t");
  GridField g = with_data(f, Eigen::VectorXcd::Zero(f.size()));
  Eigen::VectorXi neg(f.d);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    cd s = 0.0;
    for (const auto& o : offs) {
      neg = -o;
      s += f.data[wrap_index(f, i, neg)];
    }
    g.data[i] = s / double(offs.size());
  }
  g.band_limit.reset();
  return g;
}

cd average_direct(const std::function<cd(const Eigen::VectorXd&)>& f, const BodySpec& body, double t,
                  const Eigen::VectorXd& x, int order) {
  require(t > 0, "average_direct: need t > 0");
  const Cubature c = body_cubature(body.scaled(t), order);
  cd s = 0.0;
  for (Eigen::Index j = 0; j < c.weights.size(); ++j) s += c.weights[j] * f(x - c.nodes.col(j));
  return s / c.weights.sum();
}

GridField poisson_apply(const GridField& f, double t) {
  require(t > 0, "poisson_apply: need t > 0");
  const double P = f.period();
  return apply_wavenumber_symbol(
      f, [&](const Eigen::VectorXi& k) { return cd(poisson_symbol(t, freq_of(k, P).norm()), 0.0); }, true);
}

GridField littlewood_paley_Sn(const GridField& f, int n, double L) {
  require(L > 0, "littlewood_paley_Sn: need L > 0");
  const double P = f.period(), hi = L * std::ldexp(1.0, n), lo = L * std::ldexp(1.0, n - 1);
  return apply_wavenumber_symbol(
      f,
      [&](const Eigen::VectorXi& k) {
        const double x = freq_of(k, P).norm();
        return cd(poisson_symbol(hi, x) - poisson_symbol(lo, x), 0.0);
      },
      true);
}

std::vector<double> LogTimeGrid::times() const {
  require(t_min > 0 && t_max > t_min && points >= 2, "log time grid: need 0 < t_min < t_max, points >= 2");
  std::vector<double> t(static_cast<std::size_t>(points));
  const double a = std::log(t_min), h = dlog();
  for (int i = 0; i < points; ++i) t[std::size_t(i)] = std::exp(a + i * h);
  return t;
}

double LogTimeGrid::dlog() const { return std::log(t_max / t_min) / (points - 1); }

LogTimeGrid default_log_grid(const GridField& f) {
  f.validate();
  const Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  const double floor = 1e-15 * F.cwiseAbs().maxCoeff();
  double lo = INFINITY, hi = 0.0;
  for (Eigen::Index i = 1; i < F.size(); ++i) {
    if (std::abs(F[i]) <= floor) continue;
    const double x = f.frequency(i).norm();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi == 0.0) lo = hi = 1.0 / f.period();
  LogTimeGrid g;
  // below: (2 pi |xi| t)^2 < 1e-12; above: e^(-4 pi t |xi|) poly < 1e-14
  g.t_min = 1e-6 / (2.0 * M_PI * hi);
  g.t_max = 48.0 / (4.0 * M_PI * lo);
  g.points = int(std::ceil(std::log(g.t_max / g.t_min) / 0.08)) + 1;
  return g;
}

GridField g_function(const GridField& f, const LogTimeGrid& grid) {
  f.validate();
  const auto ts = grid.times();
  const auto w = trapezoid_weights(int(ts.size()), grid.dlog());
  const double P = f.period();
  const Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    auto dP = [&](const Eigen::VectorXi& kk) {
      const double x = freq_of(kk, P).norm();
      return cd(-2.0 * M_PI * x * std::exp(-2.0 * M_PI * t * x), 0.0);
    };
    Eigen::VectorXcd g = fft_nd(multiply_spectrum(f, F, dP, true), f.d, f.n, true);
    acc += (w[k] * t * t) * g.cwiseAbs2();
  }
  GridField out = with_data(f, acc.cwiseSqrt().cast<cd>());
  out.band_limit.reset();
  return out;
}

double spherical_symbol(int d, double t, const Eigen::VectorXd& xi) {
  require(d >= 2 && xi.size() == d, "spherical_symbol: need d >= 2 and a d-vector");
  require(t > 0, "spherical_symbol: need t > 0");
  const Symbol m = Symbol::ball2(d);
  const Eigen::VectorXd z = t * xi;
  return m(z) + m.radial_derivative(z) / d;
}

GridField spherical_mean(const GridField& f, double t) {
  require(f.d >= 2, "spherical_mean: need d >= 2");
  require(t > 0, "spherical_mean: need t > 0");
  const Symbol m = Symbol::ball2(f.d);
  const double P = f.period();
  return apply_wavenumber_symbol(
      f,
      [&](const Eigen::VectorXi& k) {
        const Eigen::VectorXd z = t * freq_of(k, P);
        return cd(m(z) + m.radial_derivative(z) / f.d, 0.0);
      },
      true);
}

std::vector<double> TimeGrid::times() const {
  require(!block_exponents.empty(), "time grid: no blocks");
  require(L >= 0 && L <= 20, "time grid: per-block resolution L must be in [0, 20]");
  for (std::size_t i = 1; i < block_exponents.size(); ++i)
    require(block_exponents[i - 1] < block_exponents[i], "time grid: block exponents must increase");
  std::vector<double> t;
  for (int n : block_exponents) {
    for (int j = 0; j < (1 << L); ++j) t.push_back(std::ldexp(1.0 + std::ldexp(double(j), -L), n));
    t.push_back(std::ldexp(1.0, n + 1));
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double lp_norm(const GridField& f, double p) {
  f.validate();
  require(p >= 1, "lp_norm: need p >= 1");
  if (std::isinf(p)) return f.data.cwiseAbs().maxCoeff();
  const double cell = std::pow(f.spacing, f.d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += std::pow(std::abs(f.data[i]), p);
  return std::pow(cell * s, 1.0 / p);
}

namespace {

GridField variation_over_times(const GridField& f, const Symbol& m, const std::vector<double>& ts, double r) {
  check_symbol_dim(f, m);
  require(r >= 1 && std::isfinite(r), "variation field: need finite r >= 1");
  std::vector<std::function<cd(const Eigen::VectorXi&)>> syms;
  for (double t : ts) syms.push_back(mt_symbol(m, t, f.period()));
  GridField out = with_data(f, Eigen::VectorXcd::Zero(f.size()));
  out.band_limit.reset();
  std::vector<double> scratch;
  for_each_path_chunk(f, syms, body_is_symmetric(m), [&](Eigen::Index p0, const Eigen::MatrixXcd& vals) {
    for (Eigen::Index j = 0; j < vals.cols(); ++j)
      out.data[p0 + j] = path_variation(vals.col(j).data(), int(vals.rows()), r, scratch);
  });
  return out;
}

}  // namespace

GridField pointwise_variation_field(const GridField& f, const Symbol& m, const TimeGrid& grid, double r) {
  return variation_over_times(f, m, grid.times(), r);
}

GridField short_variation_square_function(const GridField& f, const Symbol& m, const TimeGrid& grid) {
  check_symbol_dim(f, m);
  const auto ts = grid.times();
  std::vector<std::function<cd(const Eigen::VectorXi&)>> syms;
  for (double t : ts) syms.push_back(mt_symbol(m, t, f.period()));
  // closed block [2^n, 2^(n+1)] as an index range into ts
  std::vector<std::pair<int, int>> blocks;
  for (int n : grid.block_exponents) {
    const double lo = std::ldexp(1.0, n), hi = std::ldexp(1.0, n + 1);
    int a = int(std::lower_bound(ts.begin(), ts.end(), lo) - ts.begin());
    int b = int(std::upper_bound(ts.begin(), ts.end(), hi) - ts.begin());
    blocks.emplace_back(a, b - a);
  }
  GridField out = with_data(f, Eigen::VectorXcd::Zero(f.size()));
  out.band_limit.reset();
  std::vector<double> scratch;
  for_each_path_chunk(f, syms, body_is_symmetric(m), [&](Eigen::Index p0, const Eigen::MatrixXcd& vals) {
    for (Eigen::Index j = 0; j < vals.cols(); ++j) {
      const cd* col = vals.col(j).data();
      double s = 0.0;
      for (auto [a, len] : blocks) {
        const double v = path_variation(col + a, len, 2.0, scratch);
        s += v * v;
      }
      out.data[p0 + j] = std::sqrt(s);
    }
  });
  return out;
}

GridField lacunary_variation(const GridField& f, const Symbol& m, int n_lo, int n_hi, double r) {
  require(n_lo <= n_hi, "lacunary_variation: empty exponent range");
  std::vector<double> ts;
  for (int n = n_lo; n <= n_hi; ++n) ts.push_back(std::ldexp(1.0, n));
  return variation_over_times(f, m, ts, r);
}

double average_difference_norm(const GridField& f, const Symbol& m, double t, double h, double p) {
  check_symbol_dim(f, m);
  require(t > 0 && h >= 0, "average_difference_norm: need t > 0, h >= 0");
  if (h == 0) return 0.0;
  const double P = f.period();
  GridField g = apply_wavenumber_symbol(
      f,
      [&](const Eigen::VectorXi& k) {
        const Eigen::VectorXd xi = freq_of(k, P);
        return cd(m((t + h) * xi) - m(t * xi), 0.0);
      },
      body_is_symmetric(m));
  return lp_norm(g, p);
}

double cutoff_eta(double t) {
  auto psi = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  auto step = [&](double x) { return psi(x) / (psi(x) + psi(1.0 - x)); };  // 0 at x <= 0, 1 at x >= 1
  return step(2.0 * t - 1.0) * step(3.0 - t);
}

RatioPair fractional_variation_ratio(const GridField& f, const Symbol& m, double alpha, double p,
                                     const TimeGrid& grid) {
  check_symbol_dim(f, m);
  require(p > 1 && std::isfinite(p), "fractional_variation_ratio: need finite p > 1");
  require(alpha > 1.0 / p && alpha < 1.0, "fractional_variation_ratio: need 1/p < alpha < 1");
  const auto all = grid.times();
  std::vector<double> ts;
  for (double t : all)
    if (cutoff_eta(t) > 0) ts.push_back(t);
  require(!ts.empty(), "fractional_variation_ratio: no grid time inside the cutoff support");
  const double P = f.period();
  const bool sym = body_is_symmetric(m);

  std::vector<std::function<cd(const Eigen::VectorXi&)>> syms;
  for (double t : ts) {
    const double e = cutoff_eta(t);
    syms.push_back([&m, t, e, P](const Eigen::VectorXi& k) { return cd(e * m(t * freq_of(k, P)), 0.0); });
  }
  GridField vfield = with_data(f, Eigen::VectorXcd::Zero(f.size()));
  std::vector<double> scratch;
  // the path also includes eta = 0 at both ends of the support
  for_each_path_chunk(f, syms, sym, [&](Eigen::Index p0, const Eigen::MatrixXcd& vals) {
    Eigen::VectorXcd path(vals.rows() + 2);
    for (Eigen::Index j = 0; j < vals.cols(); ++j) {
      path[0] = 0.0;
      path.segment(1, vals.rows()) = vals.col(j);
      path[vals.rows() + 1] = 0.0;
      vfield.data[p0 + j] = path_variation(path.data(), int(path.size()), p, scratch);
    }
  });

  RatioPair out;
  out.lhs = lp_norm(vfield, p);
  double sup = 0.0;
  for (double t : ts) {
    GridField g = apply_wavenumber_symbol(
        f,
        [&](const Eigen::VectorXi& k) {
          if (k.isZero()) return cd(0.0, 0.0);
          const Eigen::VectorXd xi = t * freq_of(k, P);
          const FracValue v =
              m.has_marginal() ? frac_deriv_symbol_marginal(m, alpha, 1.0, xi) : frac_deriv_symbol(m, alpha, 1.0, xi);
          return cd(v.value, 0.0);
        },
        sym);
    sup = std::max(sup, lp_norm(g, p));
  }
  out.rhs = lp_norm(f, p) + sup;
  return out;
}

GridField time_derivative_square_function(MeanFamily family, const Symbol& m, const GridField& f,
                                          const LogTimeGrid& grid) {
  check_symbol_dim(f, m);
  std::function<double(const Eigen::VectorXd&)> tdt;
  if (family == MeanFamily::Ball) {
    tdt = [&m](const Eigen::VectorXd& z) { return m.radial_derivative(z); };
  } else {
    require(f.d >= 4, "sphere square function: the integral diverges for d < 4");
    require(m.body().is_ball2() && m.provenance() == Provenance::ClosedForm,
            "sphere square function: needs the closed-form Euclidean ball symbol");
    const double rho = ball2_normalized_radius(f.d);
    const int d = f.d;
    tdt = [rho, d](const Eigen::VectorXd& z) {
      const double s = 2.0 * M_PI * rho * z.norm();
      return -s * s * lambda_nu(0.5 * d, s) / d;
    };
  }
  const auto ts = grid.times();
  const auto w = trapezoid_weights(int(ts.size()), grid.dlog());
  const double P = f.period();
  const Eigen::VectorXcd F = fft_nd(f.data, f.d, f.n, false);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    auto s = [&](const Eigen::VectorXi& kk) { return cd(tdt(t * freq_of(kk, P)), 0.0); };
    Eigen::VectorXcd g = fft_nd(multiply_spectrum(f, F, s, body_is_symmetric(m)), f.d, f.n, true);
    acc += w[k] * g.cwiseAbs2();
  }
  GridField out = with_data(f, acc.cwiseSqrt().cast<cd>());
  out.band_limit.reset();
  return out;
}

namespace {
constexpr char kMagic[4] = {'D', 'V', 'F', '1'};
}

void write_field(const std::string& path, const GridField& f) {
  f.validate();
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "write_field: cannot open " + path);
  const std::int32_t d = f.d, n = f.n, band = f.band_limit.value_or(-1);
  const std::uint32_t flags = f.band_limit ? 1u : 0u;
  const double h = f.spacing;
  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&d), 4);
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&h), 8);
  os.write(reinterpret_cast<const char*>(&flags), 4);
  os.write(reinterpret_cast<const char*>(&band), 4);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const float re = float(f.data[i].real()), im = float(f.data[i].imag());
    os.write(reinterpret_cast<const char*>(&re), 4);
    os.write(reinterpret_cast<const char*>(&im), 4);
  }
  require(bool(os), "write_field: write failed for " + path);
}

GridField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), "read_field: cannot open " + path);
  char magic[4];
  std::int32_t d = 0, n = 0, band = -1;
  std::uint32_t flags = 0;
  double h = 0;
  is.read(magic, 4);
  require(bool(is) && std::memcmp(magic, kMagic, 4) == 0, "read_field: not a field file: " + path);
  is.read(reinterpret_cast<char*>(&d), 4);
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&h), 8);
  is.read(reinterpret_cast<char*>(&flags), 4);
  is.read(reinterpret_cast<char*>(&band), 4);
  require(bool(is), "read_field: truncated header in " + path);
  GridField f = GridField::zeros(d, n, h);
  f.band_limit.reset();
  if (flags & 1u) f.band_limit = band;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    float re = 0, im = 0;
    is.read(reinterpret_cast<char*>(&re), 4);
    is.read(reinterpret_cast<char*>(&im), 4);
    f.data[i] = cd(re, im);
  }
  require(bool(is), "read_field: truncated data in " + path);
  return f;
}

}  // namespace dimvar
