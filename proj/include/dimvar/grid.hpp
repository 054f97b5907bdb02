#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dimvar/bodies.hpp"
#include "dimvar/rng.hpp"
#include "dimvar/symbols.hpp"

namespace dimvar {

// Samples of a function on the torus [0, P)^d, P = n * spacing, row-major with axis 0
// slowest. DFT bin j on an axis carries the integer wavenumber in (-n/2, n/2].
struct GridField {
  int d = 1;
  int n = 2;
  double spacing = 1.0;
  Eigen::VectorXcd data;
  std::optional<int> band_limit;  // max |k_i| of nonzero coefficients

  static GridField zeros(int d, int n, double spacing);
  static GridField constant(int d, int n, double spacing, std::complex<double> c);

  Eigen::Index size() const { return data.size(); }
  double period() const { return n * spacing; }
  Eigen::VectorXi wavenumber(Eigen::Index i) const;
  Eigen::VectorXd frequency(Eigen::Index i) const;  // wavenumber / period
  Eigen::VectorXd point(Eigen::Index i) const;
  void validate() const;
};

// Finite Fourier series sum_k c_k exp(2 pi i <k, x> / period).
struct TrigPoly {
  int d = 1;
  double period = 1.0;
  std::vector<Eigen::VectorXi> k;
  std::vector<std::complex<double>> c;

  std::complex<double> operator()(const Eigen::VectorXd& x) const;
  int band() const;
  // Exact samples on an n^d grid (requires n > 2 * band()).
  GridField sample(int n) const;
};

// Coefficients on [-K, K]^d with Gaussian amplitudes damped by (1 + |k|^2)^(-decay/2);
// Hermitian-symmetric when real_valued.
TrigPoly random_trig_poly(int d, double period, int K, CounterRng& rng, bool real_valued = true, double decay = 1.0);
TrigPoly single_mode(int d, double period, const Eigen::VectorXi& k, std::complex<double> c = 1.0);

// Unnormalized forward / normalized inverse DFT over all d axes.
Eigen::VectorXcd fft_nd(const Eigen::VectorXcd& v, int d, int n, bool inverse);

using SymbolFn = std::function<std::complex<double>(const Eigen::VectorXd& xi)>;

// Multiply the DFT by sym(frequency); bins with zero coefficient are skipped.
GridField apply_symbol(const GridField& f, const SymbolFn& sym);

// M_t f with symbol m(t xi).
GridField average_mt(const GridField& f, const Symbol& m, double t);
// Convolution with the normalized indicator of the lattice points of G_t, done spectrally;
// agrees with spatial_convolve_oracle to rounding.
GridField average_mt_lattice(const GridField& f, const BodySpec& body, double t);
// Direct sum over grid points of G_t, periodic wrap. d <= 3 and n <= 64 only.
GridField spatial_convolve_oracle(const GridField& f, const BodySpec& body, double t);
// (1/|G_t|) int_{G_t} f(x - y) dy by tensor cubature of the body.
std::complex<double> average_direct(const std::function<std::complex<double>(const Eigen::VectorXd&)>& f,
                                    const BodySpec& body, double t, const Eigen::VectorXd& x, int order);

GridField poisson_apply(const GridField& f, double t);
// S_n = P_{L 2^n} - P_{L 2^(n-1)}
GridField littlewood_paley_Sn(const GridField& f, int n, double L);

// Uniform grid in log t.
struct LogTimeGrid {
  double t_min = 1e-4;
  double t_max = 1e2;
  int points = 200;
  std::vector<double> times() const;
  double dlog() const;
};
// Wide enough that the truncated time integrals are below 1e-12 for every active bin.
LogTimeGrid default_log_grid(const GridField& f);

// (sum_k t_k^2 |d/dt P_t f|^2 dlog t)^(1/2), trapezoid in log t.
GridField g_function(const GridField& f, const LogTimeGrid& grid);

// Normalized surface measure of the sphere of radius t rho_d:
// s_t(xi) = (1/(d t^(d-1))) d/dt [t^d m(t xi)] = m(t xi) + <t xi, grad m(t xi)> / d.
double spherical_symbol(int d, double t, const Eigen::VectorXd& xi);
GridField spherical_mean(const GridField& f, double t);

// Sample times 2^n (1 + j 2^-L), j < 2^L, for each block n, plus the right end of the last block.
struct TimeGrid {
  std::vector<int> block_exponents;
  int L = 4;
  std::vector<double> times() const;
};

double lp_norm(const GridField& f, double p);

// Per-point V_r of t -> M_t f(x) over the grid times.
GridField pointwise_variation_field(const GridField& f, const Symbol& m, const TimeGrid& grid, double r);
// Per-point (sum_n V_2(M_t f(x) : t in block n)^2)^(1/2), closed blocks.
GridField short_variation_square_function(const GridField& f, const Symbol& m, const TimeGrid& grid);
// Per-point V_r of n -> M_{2^n} f(x), n_lo <= n <= n_hi.
GridField lacunary_variation(const GridField& f, const Symbol& m, int n_lo, int n_hi, double r);

// |M_{t+h} f - M_t f|_p
double average_difference_norm(const GridField& f, const Symbol& m, double t, double h, double p);

// Smooth cutoff: 1 on [1, 2], 0 outside (1/2, 3).
double cutoff_eta(double t);

struct RatioPair {
  double lhs = 0.0;
  double rhs = 0.0;
};
// lhs = |V_p(eta(t) M_t f : t in grid)|_p, rhs = |f|_p + sup_t |((t xi).grad)^alpha m(t xi) f|_p
// over grid times in the support of eta.
RatioPair fractional_variation_ratio(const GridField& f, const Symbol& m, double alpha, double p,
                                     const TimeGrid& grid);

enum class MeanFamily { Ball, Sphere };
// (int |t d/dt M_t f|^2 dt/t)^(1/2) on a log grid. The sphere family needs d >= 4. The
// integrand oscillates with phase ~ 2 pi t |xi|, so dlog * t_max * max|xi| should stay well below 1.
GridField time_derivative_square_function(MeanFamily family, const Symbol& m, const GridField& f,
                                          const LogTimeGrid& grid);

// Binary field file: magic, d, n, spacing, flags, then complex64 values row-major.
void write_field(const std::string& path, const GridField& f);
GridField read_field(const std::string& path);

}  // namespace dimvar
