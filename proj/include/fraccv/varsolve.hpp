#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fraccv/calculus_id.hpp"
#include "fraccv/envelope.hpp"
#include "fraccv/fracops.hpp"
#include "fraccv/spaces.hpp"

namespace fraccv {

/// f(x, z, A) with z in R^m and A an m x n matrix laid out [c * n + d].
struct Integrand {
  using Eval = std::function<double(std::span<const double> x, std::span<const double> z,
                                    std::span<const double> A)>;
  using Deriv = std::function<void(std::span<const double> x, std::span<const double> z,
                                   std::span<const double> A, std::span<double> out)>;

  std::string name;
  Eval eval;
  Deriv deriv_A;  // empty when unavailable
  Deriv deriv_z;  // empty: f does not depend on z
  // Growth a(x) + C (|z|^p + |A|^p) from above and c |A|^p from below.
  std::function<double(std::span<const double>)> a;  // empty: a = 0
  double C = 1.0;
  double c = 0.0;
  double p = 2.0;
  bool x_dependent = false;
  bool z_dependent = false;
  bool convex = false;  // in A, known by construction
};

/// quadratic: |A|^2. pinched-nonconvex-1d: min(2|A|^2, |A|^2 + (|A| - 1)^2).
/// double-well-unpinched: (|A|^2 - 1)^2 (envelope demos only; f(0) != 0).
Integrand make_integrand(const std::string& name);
std::vector<std::string> integrand_names();

/// 1_Omega f^qc + 1_{Omega^c} f for a scalar problem (m = n = 1).
Integrand relaxed_integrand(const Integrand& f, const EnvelopeTable& table, const ComplementarySpec& spec);

/// Envelope table of a scalar integrand over [a_min, a_max] (z and x frozen at 0).
EnvelopeTable integrand_envelope(const Integrand& f, double a_min, double a_max, int samples);

struct EnergyEvaluation {
  double energy = 0.0;
  double truncation_estimate = 0.0;  // from the fractional gradient
  bool growth_warning = false;       // f left its growth bounds at some node
  double min_gradient = 0.0;         // range of grad_a u over all nodes and entries
  double max_gradient = 0.0;
};

/// h^n sum_x f(x, u(x), grad_a u(x)) over the grid, u first projected onto
/// the complementary-value space.
EnergyEvaluation evaluate_functional(const SampledField& u, const Integrand& f, const ComplementarySpec& spec,
                                     const FractionalParams& params, const OperatorBackend& backend);

/// Grid gradient of the energy: d_z f - div_a (d_A f), set to 0 off Omega.
/// Throws Error when f has no A-derivative.
SampledField functional_gradient(const SampledField& u, const Integrand& f, const ComplementarySpec& spec,
                                 const FractionalParams& params, const OperatorBackend& backend);

struct MinimizeOptions {
  double tolerance = 1e-6;  // on the L^2 norm of the gradient over Omega
  int max_iterations = 5000;
  double armijo = 1e-4;
  double initial_step = 1.0;
  std::optional<SampledField> initial;  // default: g
};

struct MinimizeReport {
  SampledField minimizer;
  double energy = 0.0;
  double optimality_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_trace;
};

/// Projected gradient descent over the complementary-value space with
/// Barzilai-Borwein steps and Armijo backtracking (monotone energy).
MinimizeReport minimize(const Integrand& f, const ComplementarySpec& spec, const FractionalParams& params,
                        const OperatorBackend& backend, const MinimizeOptions& options = {});

/// h sum_{Omega} f^qc(grad_a u) + h sum_{Omega^c} f(x, u, grad_a u), for scalar problems.
/// An integrand flagged convex is its own envelope and skips the table.
/// Throws Error when grad_a u leaves the range of the table.
double relaxed_energy(const SampledField& u, const Integrand& f, const EnvelopeTable& table,
                      const ComplementarySpec& spec, const FractionalParams& params,
                      const OperatorBackend& backend);

struct SequenceOptions {
  double inner_fraction = 0.8;  // the cut-off is 1 on this central part of Omega
};

struct SequenceMember {
  int oscillations = 0;
  SampledField field;
  double energy = 0.0;
};

struct MinimizingSequence {
  std::vector<SequenceMember> members;
  double base_energy = 0.0;     // F(u)
  double relaxed = 0.0;         // relaxed_energy(u)
  bool degenerate = false;      // no envelope gap on the laminate region: u_K = u
  SampledField cutoff;
};

/// u_K = u + chi w_K for each K, where chi is a smooth cut-off in Omega and
/// grad_a w_K = grad (v_K - v) with v = I_{1-a} u (so grad v = grad_a u). On
/// the nodes, grad v_K is a two-phase step function with K cells on
/// {chi = 1}, each phase on a contact point of f^qc with f for the cell-mean
/// slope. w_K is the least-squares spectral inverse of grad_a applied to that
/// step. One-dimensional scalar problems only.
MinimizingSequence minimizing_sequence(const SampledField& u, const Integrand& f, const EnvelopeTable& table,
                                       const ComplementarySpec& spec, const FractionalParams& params,
                                       const OperatorBackend& backend, const std::vector<int>& oscillations,
                                       const SequenceOptions& options = {});

/// Smooth cut-off equal to 1 on the central `inner_fraction` of the interval
/// Omega and exactly 0 off Omega (1D, Omega an interval).
SampledField interval_cutoff(const Mask& omega, double inner_fraction);

struct LscSequence {
  std::string name;
  std::vector<SampledField> members;  // should converge weakly to `limit`
  SampledField limit;
};

/// Compares the liminf of the energies along each sequence (minimum over the
/// second half) with the energy of the limit. The report passes when
/// liminf >= F(limit) - tolerance; a failing report is a constructed
/// violation of lower semicontinuity. Details carry an equi-integrability
/// indicator: the largest share of |grad_a u_j|^p above 4 max |grad_a limit|.
std::vector<IdentityReport> lsc_probe(const Integrand& f, const ComplementarySpec& spec,
                                      const FractionalParams& params, const OperatorBackend& backend,
                                      const std::vector<LscSequence>& sequences, double tolerance = 1e-6);

}  // namespace fraccv
