#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dimvar/bodies.hpp"

namespace dimvar {

enum class Provenance { ClosedForm, Derived, MonteCarlo };

// Volume-one symbols in closed form.
double ball2_symbol(int d, const Eigen::VectorXd& xi);
double cube_symbol(int d, const Eigen::VectorXd& xi);

// Fourier multiplier m(xi) of a normalized symmetric convex body. Real valued.
class Symbol {
 public:
  static Symbol ball2(int d);
  static Symbol cube(int d);
  // Closed form for B_2 and B_inf; otherwise a Monte Carlo table (fixed sample set, so
  // the estimate is a smooth function of xi).
  static Symbol for_body(const BodySpec& body, long samples = 20000, std::uint64_t seed = 1);
  static Symbol monte_carlo(const BodySpec& body, long samples, std::uint64_t seed);

  double operator()(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& xi) const;
  // <xi, grad m(xi)>; the derivative of v -> m(v xi) at v = 1.
  double radial_derivative(const Eigen::VectorXd& xi) const;
  // Oscillation half period of v -> m(v xi), used to panel tail integrals.
  double half_period(const Eigen::VectorXd& xi) const;

  // Law of <xi, X> for X uniform in the normalized body (closed forms only): tail
  // P(<xi, X> > s) and density for s >= 0, the support bound, and the points in [0, extent]
  // where the law is not smooth.
  bool has_marginal() const { return form_ != Form::Table; }
  double marginal_tail(const Eigen::VectorXd& xi, double s) const;
  double marginal_density(const Eigen::VectorXd& xi, double s) const;
  double marginal_extent(const Eigen::VectorXd& xi) const;
  std::vector<double> marginal_breakpoints(const Eigen::VectorXd& xi) const;

  int d() const { return d_; }
  double L() const { return L_; }
  Provenance provenance() const { return prov_; }
  const BodySpec& body() const { return body_; }
  std::string name() const { return body_.name(); }

 private:
  enum class Form { Ball2, Cube, Table };
  Form form_ = Form::Cube;
  int d_ = 1;
  double L_ = 0.0;
  double rho_ = 0.5;  // half-width (cube) or radius (ball) of the normalized body
  Provenance prov_ = Provenance::ClosedForm;
  BodySpec body_;
  Eigen::MatrixXd table_;  // Monte Carlo sample points, one per column
};

struct ComplexEstimate {
  std::complex<double> value;
  double se_re = 0.0;
  double se_im = 0.0;
};

// Average of exp(-2 pi i <xi, x>) over uniform points of the (normalized) body.
ComplexEstimate ballq_symbol_mc(const BodySpec& body, const Eigen::VectorXd& xi, long samples,
                                std::uint64_t seed);

struct SymbolRatios {
  std::optional<double> r1;  // |m| L |xi|
  std::optional<double> r2;  // |m - 1| / (L |xi|)
  double r3 = 0.0;           // |<xi, grad m>|
};
SymbolRatios symbol_ratios(const Symbol& m, const Eigen::VectorXd& xi);

double poisson_symbol(double t, const Eigen::VectorXd& xi);
double poisson_symbol(double t, double xi_norm);
// m - p_L
double k_symbol(const Symbol& m, const Eigen::VectorXd& xi);
// sum over n in Z of min(2^n a, 1 / (2^n a))
double dyadic_min_sum(double a);
// min(2^n L|xi|, 1/(2^n L|xi|)) |exp(-2 pi 2^(n+j) L|xi|) - exp(-2 pi 2^(n+j-1) L|xi|)|
double poisson_difference_decay(int n, int j, double L, double xi_norm);

struct FracValue {
  double value = 0.0;
  double error = 0.0;  // estimated absolute quadrature error
};

// Weyl derivative along the dilation ray: D_t^alpha m(t xi).
FracValue frac_deriv_symbol(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi);

// p_u^alpha(xi) = u^(alpha+1) D_v^alpha (m(v xi)/v) at v = u.
FracValue p_alpha_symbol(const Symbol& m, double alpha, double u, const Eigen::VectorXd& xi);

// The same two quantities from the law of <xi, X>: with m(v xi) = E exp(-2 pi i v <xi, X>),
//   D^alpha m(t xi) = 2 int_0^R g(s) (2 pi s)^alpha cos(pi alpha/2 - 2 pi t s) ds,
//   p_u = Gamma(1+alpha) + 4 pi u^(alpha+1) int_0^R T(s) (2 pi s)^alpha sin(pi alpha/2 - 2 pi u s) ds,
// where g is the density and T the tail. Needs has_marginal().
FracValue frac_deriv_symbol_marginal(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi);
FracValue p_alpha_symbol_marginal(const Symbol& m, double alpha, double u, const Eigen::VectorXd& xi);

struct IdentityCheck {
  double lhs = 0.0;  // m(t xi)
  double rhs = 0.0;  // Gamma(alpha)^-1 int_t^inf (t/u)(1 - t/u)^(alpha-1) p_u du/u
  double error = 0.0;
};
IdentityCheck reproducing_identity_check(const Symbol& m, double alpha, double t, const Eigen::VectorXd& xi);

// Pointwise fractional derivatives of a function on R given analytically.
// Singular-integral form: -alpha/Gamma(1-alpha) int_0^inf u^(-alpha-1) (F(t+u) - F(t)) du,
// with F supported in [a, b].
FracValue frac_deriv_singular(const std::function<double(double)>& F, double a, double b, double alpha,
                              double t);
// Weyl form from the derivative: -1/Gamma(1-alpha) int_0^inf u^(-alpha) F'(t+u) du.
FracValue frac_deriv_weyl(const std::function<double(double)>& dF, double a, double b, double alpha, double t);

enum class FracVariant { Modulus, Directional, SingularIntegral };

// Fractional derivative of uniform samples F_k = F(t0 + k h) of a compactly supported
// function; spectral variants use the DFT with (2 pi |xi|)^alpha or (2 pi i xi)^alpha applied
// to the inverse transform (the forward-looking Weyl derivative), the singular-integral variant uses
// product integration against the piecewise-linear interpolant.
Eigen::VectorXcd frac_deriv_grid(const Eigen::VectorXcd& F, double h, double alpha, FracVariant variant);

struct FracBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<double> ratio;  // empty for 0/0
  bool part_one = true;         // alpha > 1/r: V_r vs |F|_r + |D^a F|_r; else |D^a F|_r vs |F|_r + V_r
};
FracBoundCheck vr_frac_bound_check(const Eigen::VectorXcd& F, double h, double r, double alpha);

// sum_{k < 2^l} |m((2^n + 2^(n-l)(k+1)) xi) - m((2^n + 2^(n-l) k) xi)|^(2 - eps)
double multiplier_difference_sum(const Symbol& m, int n, int l, const Eigen::VectorXd& xi, double eps);

}  // namespace dimvar
