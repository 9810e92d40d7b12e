#pragma once

#include <optional>
#include <vector>

#include "fraccv/calculus_id.hpp"
#include "fraccv/fracops.hpp"
#include "fraccv/grid.hpp"
#include "fraccv/params.hpp"

namespace fraccv {

/// Discrete complementary-value space: fields equal to g outside Omega.
/// omega_prime is an enlargement of Omega used by tail diagnostics.
struct ComplementarySpec {
  Mask omega;
  SampledField g;
  Mask omega_prime;

  /// Validates: shared grid, g finite, omega inside omega_prime with at least
  /// a two-cell margin. Throws Error naming the violated condition.
  static ComplementarySpec make(Mask omega, SampledField g, Mask omega_prime);
  /// omega_prime = all nodes within `margin` (sup-norm distance) of Omega.
  static ComplementarySpec with_margin(Mask omega, SampledField g, double margin);
};

/// u on Omega, g on the complement.
SampledField project_complementary(const SampledField& u, const ComplementarySpec& spec);

struct ConstructionOptions {
  double support_radius = 0.0;  // <= 0: half the distance from x0 to the complement of Omega
  double tolerance = 1e-5;      // relative, on value and fractional gradient at x0
};

struct ConstructionResult {
  SampledField phi;
  double beta = 0.0;        // fractional gradient of the odd template at x0 (along its odd axis)
  double support_radius = 0.0;
  std::vector<double> achieved_value;     // m
  std::vector<double> achieved_gradient;  // m x n, [c * n + d]
  IdentityReport report;                  // residual: worst relative mismatch
};

/// Smooth phi supported in Omega with phi(x0) = z and grad_a phi(x0) = A
/// (A laid out [c * n + d]). Built from the odd template
/// psi(x_d) prod_{e != d} theta(x_e) per gradient direction and a radial bump
/// for the value; the template constant beta is computed by adaptive
/// quadrature in polar coordinates, and the result is checked at x0 with the
/// grid quadrature of the fractional gradient.
/// Throws if x0 is too close to the complement of Omega.
ConstructionResult construct_prescribed(std::size_t x0, const std::vector<double>& z,
                                        const std::vector<double>& A,
                                        const ComplementarySpec& spec,
                                        const FractionalParams& params,
                                        const ConstructionOptions& options = {});

/// u = g + phi with phi prescribed so that u(x0) = z and grad_a u(x0) = A.
SampledField prescribed_with_datum(std::size_t x0, const std::vector<double>& z,
                                   const std::vector<double>& A, const ComplementarySpec& spec,
                                   const FractionalParams& params,
                                   const ConstructionOptions& options = {});

/// The one-dimensional templates on their reference support (-1/4, 1/4).
double odd_template(double t);
double even_template(double t);
/// beta for support radius rho: mu int y_1 psi_rho(y_1) prod theta_rho(y_e) |y|^{-n-a-1} dy,
/// with psi_rho(y) = odd_template(y / (4 rho)), theta_rho likewise.
double template_constant(int n, double alpha, double rho);

/// Tail diagnostic for sequences vanishing outside Omega:
///   tail_j = || grad_a (u_j - limit) ||_{L^p(box \ Omega')},  size_j = weight_j
/// (default ||u_j - limit||_p). The constant C = max tail_j / size_j over the
/// first `calibration` members is fitted and every later member must satisfy
/// tail_j <= C size_j.
struct OutsideDiagnostic {
  std::vector<double> sizes;
  std::vector<double> tails;
  double fitted_constant = 0.0;
  IdentityReport report;
};
OutsideDiagnostic strong_outside_diagnostic(const std::vector<SampledField>& sequence,
                                            const ComplementarySpec& spec,
                                            const FractionalParams& params,
                                            const OperatorBackend& backend,
                                            std::size_t calibration,
                                            const std::optional<SampledField>& limit = std::nullopt,
                                            const std::vector<double>& weights = {});

}  // namespace fraccv
