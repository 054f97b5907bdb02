#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dimvar/rng.hpp"

namespace dimvar {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Symmetric convex body: a dilate of B_q = {|x|_q <= 1} or of a membership oracle.
struct BodySpec {
  enum class Kind { BallQ, Oracle };

  Kind kind = Kind::BallQ;
  int d = 1;
  double q = 2.0;      // BallQ only; kInf for the cube
  double scale = 1.0;  // dilation applied to the canonical body
  // Oracle only: membership of the canonical body and its Euclidean bounding radius.
  std::function<bool(const Eigen::VectorXd&)> member;
  double bound = 1.0;
  std::string label;

  static BodySpec ball(double q, int d, double scale = 1.0);
  static BodySpec cube(int d, double scale = 1.0) { return ball(kInf, d, scale); }
  static BodySpec oracle(std::string label, int d, double bound,
                         std::function<bool(const Eigen::VectorXd&)> member, double scale = 1.0);

  bool contains(const Eigen::VectorXd& x) const;
  double gauge(const Eigen::VectorXd& x) const;  // BallQ only: |x/scale|_q
  double box_halfwidth() const;                  // body lies in [-h, h]^d
  double euclid_radius() const;                  // body lies in the Euclidean ball of this radius
  BodySpec scaled(double c) const;
  bool is_cube() const { return kind == Kind::BallQ && q == kInf; }
  bool is_ball2() const { return kind == Kind::BallQ && q == 2.0; }
  std::string name() const;
  std::uint64_t hash() const;
};

// log Vol(B_q) in dimension d (canonical, scale 1).
double ballq_log_volume(double q, int d);

// Closed form for BallQ (stderr 0); hit-or-miss Monte Carlo for oracles.
Estimate volume(const BodySpec& body, long samples = 0, std::uint64_t seed = 0);
Estimate volume_mc(const BodySpec& body, long samples, std::uint64_t seed);

// One uniform point of the body: exact generalized-Gaussian sampler for BallQ, rejection
// from the bounding box for oracles (throws after too many rejections).
void sample_uniform(const BodySpec& body, CounterRng& rng, Eigen::VectorXd& out);

struct Covariance {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};
Covariance covariance_mc(const BodySpec& body, long samples, std::uint64_t seed);

struct IsotropicData {
  double volume = 0.0;
  double iso_scale = 1.0;  // lambda with Vol(lambda G) = 1
  double L = 0.0;
  double sigma_inv = 0.0;
  double Q = 0.0;
  double volume_stderr = 0.0;
  double L_stderr = 0.0;
  double sigma_inv_stderr = 0.0;
  double Q_stderr = 0.0;
  bool sigma_q_lower_bounds = true;
};

// Volume and iso_scale, and L^2 = int_{lambda G} x_1^2 dx. BallQ uses the 1-D moment
// reduction; oracles use Monte Carlo and a sampled symmetry check.
IsotropicData isotropic_normalize(const BodySpec& body, long samples = 200000, std::uint64_t seed = 1);

// Volume-one dilate (exact for BallQ, MC-estimated scale for oracles).
BodySpec normalized(const BodySpec& body, long samples = 200000, std::uint64_t seed = 1);

// Isotropic constant of the normalized B_q.
double ballq_isotropic_constant(double q, int d);

// Radius of the volume-one Euclidean ball.
double ball2_normalized_radius(int d);

// (d-1)-volume of {x in body : <xi, x> = u}, slab Monte Carlo with Richardson extrapolation.
Estimate section_volume(const BodySpec& body, const Eigen::VectorXd& xi, double u, long samples,
                        std::uint64_t seed);

// (d-1)-volume of the orthogonal projection onto xi-perp. Closed form for cubes and
// Euclidean balls, Monte Carlo otherwise.
Estimate shadow_volume(const BodySpec& body, const Eigen::VectorXd& xi, long samples, std::uint64_t seed);

// Axes, signed diagonals (all of them for d <= 8, else 64 random sign patterns) and
// n_random Gaussian directions; all unit vectors.
std::vector<Eigen::VectorXd> direction_dictionary(int d, int n_random = 256, std::uint64_t seed = 1);

struct SigmaQ {
  Estimate sigma_inv;
  Estimate Q;
  int argmax_sigma = -1;
  int argmax_Q = -1;
  bool lower_bound = true;  // maxima over a finite direction set
};
SigmaQ invariants_sigma_q(const BodySpec& body, const std::vector<Eigen::VectorXd>& directions,
                          long samples, std::uint64_t seed);

// Tensor cubature for Euclidean balls (d <= 3) and cubes (any small d). Columns of
// `nodes` are points; weights sum to the volume.
struct Cubature {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
};
Cubature body_cubature(const BodySpec& body, int order);

}  // namespace dimvar
