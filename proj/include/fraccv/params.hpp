#pragma once

namespace fraccv {

/// Order, integrability exponent and the normalisation constants of the
/// fractional gradient, Riesz potential and fractional Laplacian in dimension n.
struct FractionalParams {
  int dim = 1;
  double alpha = 0.5;  // order in (0,1)
  double p = 2.0;      // exponent in (1, inf)
  double mu = 0.0;     // fractional gradient constant
  double gamma = 0.0;  // Riesz potential constant for order alpha
  double nu = 0.0;     // fractional Laplacian constant for (-Delta)^(alpha/2); negative
};

/// mu_{n,a} = 2^a pi^{-n/2} Gamma((n+a+1)/2) / Gamma((1-a)/2), a in (0,1).
double gradient_constant(int n, double alpha);
/// gamma_{n,a} = pi^{n/2} 2^a Gamma(a/2) / Gamma((n-a)/2), a in (0,n).
double riesz_potential_constant(int n, double order);
/// nu_{n,a} = 2^a pi^{-n/2} Gamma((n+a)/2) / Gamma(-a/2) for (-Delta)^{a/2}, a in (0,2).
double laplacian_constant(int n, double order);

/// Throws Error for alpha outside (0,1), p outside (1,inf) or n outside 1..3.
FractionalParams compute_constants(int n, double alpha, double p = 2.0);

}  // namespace fraccv
