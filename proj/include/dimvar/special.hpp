#pragma once

namespace dimvar {

// Gamma(nu+1) (2/z)^nu J_nu(z); equals 1 at z = 0 and has
// d/dz Lambda_nu(z) = -z Lambda_{nu+1}(z) / (2 (nu + 1)).
double lambda_nu(double nu, double z);

// sin(pi x) / (pi x) and its derivative.
double sinc_pi(double x);
double sinc_pi_prime(double x);

}  // namespace dimvar
