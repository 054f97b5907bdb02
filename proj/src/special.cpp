#include "dimvar/special.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

namespace dimvar {

double lambda_nu(double nu, double z) {
  z = std::fabs(z);
  if (z <= 4.0) {
    // sum_k (-z^2/4)^k / (k! (nu+1)_k); terms fall monotonically once k > z/2.
    const double w = -0.25 * z * z;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= w / (k * (nu + k));
      sum += term;
      if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
    }
    return sum;
  }
  const double j = boost::math::cyl_bessel_j(nu, z);
  return j * std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / z));
}

double sinc_pi(double x) {
  const double y = M_PI * x;
  if (std::fabs(y) < 1e-4) {
    const double y2 = y * y;
    return 1.0 - y2 / 6.0 + y2 * y2 / 120.0;
  }
  return std::sin(y) / y;
}

double sinc_pi_prime(double x) {
  const double y = M_PI * x;
  if (std::fabs(y) < 1e-3) {
    const double y2 = y * y;
    // d/dx of 1 - y^2/6 + y^4/120 - y^6/5040
    return M_PI * y * (-1.0 / 3.0 + y2 / 30.0 - y2 * y2 / 840.0);
  }
  return (std::cos(y) - std::sin(y) / y) / x;
}

}  // namespace dimvar
