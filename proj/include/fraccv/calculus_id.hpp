#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraccv/fracops.hpp"
#include "fraccv/grid.hpp"
#include "fraccv/params.hpp"

namespace fraccv {

/// Outcome of one identity or inequality check. `residual` is relative
/// (scaled by the sizes of the terms involved) unless the check says otherwise.
struct IdentityReport {
  std::string identity_name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string inputs_digest;
  nlohmann::json details = nlohmann::json::object();
};

/// Builds a report with passed = residual <= tolerance (NaN never passes).
IdentityReport make_report(std::string name, double residual, double tolerance, std::string digest,
                           nlohmann::json details = nlohmann::json::object());

/// 1e-10 for spectral, 1e-3 for quadrature.
double default_tolerance(const OperatorBackend& backend);

/// FNV-1a 64-bit hash (hex) over field values, grids and scalar parameters.
class Digest {
 public:
  Digest& add(const SampledField& f);
  Digest& add(double v);
  Digest& add(const std::string& s);
  Digest& add(const OperatorBackend& b);
  Digest& add(const FractionalParams& p);
  [[nodiscard]] std::string hex() const;

 private:
  void bytes(const void* data, std::size_t n);
  unsigned long long h_ = 1469598103934665603ull;
};

/// int grad_a(phi) psi = - int phi grad_a(psi), phi and psi scalar.
IdentityReport check_duality_gradient(const SampledField& phi, const SampledField& psi,
                                      const FractionalParams& params, const OperatorBackend& backend,
                                      double tolerance = -1.0);

/// int (-Delta)^s phi psi = int phi (-Delta)^s psi.
IdentityReport check_duality_laplacian(const SampledField& phi, const SampledField& psi, double s,
                                       const OperatorBackend& backend, double tolerance = -1.0);

/// (-Delta)^{(1-a)/2} grad_a phi = grad_a (-Delta)^{(1-a)/2} phi = grad phi, with
/// grad the classical derivative of the same backend. On a truncated box phi
/// is first embedded in a larger box so the intermediate field is not cut.
/// Default tolerance 1e-6 (spectral) / 1e-3 (quadrature).
IdentityReport check_composition(const SampledField& phi, double alpha, const OperatorBackend& backend,
                                 double tolerance = -1.0);

/// Relative L2 distance between grad_a phi and grad phi for each alpha; it
/// should decrease as alpha -> 1.
std::vector<double> alpha_continuation(const SampledField& phi, const std::vector<double>& alphas,
                                       const OperatorBackend& backend);

/// grad_a(psi u) = psi grad_a u + u grad_a psi + NL(u, psi). A constant psi has
/// zero fractional gradient and remainder.
IdentityReport check_leibniz(const SampledField& u, const SampledField& psi,
                             const FractionalParams& params, const OperatorBackend& backend,
                             double tolerance = -1.0);

/// Cut-off commutator estimate
///   || grad_a(psi_k u) - psi_k grad_a u ||_p <= C k^{-a} ||u||_p,
/// psi_k = psi(./k) with ||psi||_inf = 1 and Lip(psi) = 1. For each k the
/// commutator ratio is maximised over the dilations u(./lambda), which is what
/// makes the rate k^{-a} visible (for one fixed u the ratio decays like 1/k).
struct CutoffEstimateSetup {
  GridSpec grid;
  SampledField::ScalarFn profile;  // u before dilation
  SampledField::ScalarFn cutoff;   // psi, sup 1, Lipschitz constant 1
  std::vector<double> ks{2, 4, 8, 16};
  std::vector<double> dilations;   // empty: 2^{j/2}, j = -4..12
};
struct CutoffEstimateResult {
  std::vector<double> ks;
  std::vector<double> constants;     // max ratio per k
  std::vector<double> best_dilation;  // maximiser per k
  double fitted_exponent = 0.0;      // slope of log C(k) vs log k
  double fitted_constant = 0.0;      // exp(intercept)
  IdentityReport report;             // residual |slope + alpha|, tolerance 0.1
};
CutoffEstimateResult check_cutoff_estimate(const CutoffEstimateSetup& setup,
                                           const FractionalParams& params,
                                           const OperatorBackend& backend, double tolerance = 0.1);

/// v = I_{1-a} u has grad v = grad_a u. Compared on the inner half of the box
/// (per axis), quadrature backend. u must be compactly supported.
IdentityReport check_potential_lift(const SampledField& u, const FractionalParams& params,
                                    double tolerance = 1e-3);

/// u = (-Delta)^{(1-a)/2} v has grad_a u = grad v (same embedding as
/// check_composition).
IdentityReport check_laplacian_push(const SampledField& v, const FractionalParams& params,
                                    const OperatorBackend& backend, double tolerance = -1.0);

/// Fitted interpolation constant for ||(-Delta)^{(1-a)/2} v||_p <= C ||v||_p^{t} ||grad v||_p^{1-t}
/// over a family of fields. The calibration fields fix C (their max ratio);
/// the report passes if every held-out ratio stays within `spread` of C,
/// i.e. ratio in [C/(1+spread), C(1+spread)].
struct InterpolationFit {
  double exponent_v = 0.0;  // t
  std::vector<double> ratios_calibration;
  std::vector<double> ratios_heldout;
  double fitted_constant = 0.0;
  IdentityReport report;
};
InterpolationFit fit_interpolation_bound(const std::vector<SampledField>& calibration,
                                         const std::vector<SampledField>& heldout,
                                         const FractionalParams& params,
                                         const OperatorBackend& backend, double exponent_v,
                                         double spread = 0.1);

/// |cell mean of grad_a u| / (cell mean of |grad_a u|) for Q-periodic u.
IdentityReport check_periodic_mean_zero(const SampledField& u_periodic, const FractionalParams& params,
                                        const OperatorBackend& backend = OperatorBackend::spectral(),
                                        double tolerance = 1e-10);

/// Integral of grad_a u over an axis-aligned cell [lo, lo+1)^n of a truncated box.
std::vector<double> cell_mean_of_gradient(const SampledField& u, const FractionalParams& params,
                                          const OperatorBackend& backend, double lo = 0.0);

/// Empirical Poincare constant max ||u||_{L^p(Omega)} / ||grad_a u||_p over the
/// samples. Residual: relative change between the first half of the samples
/// and all samples; tolerance 0.2. The constant is in details["constant"].
IdentityReport check_poincare(const std::vector<SampledField>& samples, const FractionalParams& params,
                              const Mask& omega, const OperatorBackend& backend,
                              double tolerance = 0.2);
double poincare_ratio(const SampledField& u, const FractionalParams& params, const Mask& omega,
                      const OperatorBackend& backend);

nlohmann::json to_json(const IdentityReport& r);
/// One JSON object per line.
void write_reports_jsonl(std::ostream& os, const std::vector<IdentityReport>& reports);
/// Fixed-width table: name, residual, tolerance, PASS/FAIL.
std::string summary_table(const std::vector<IdentityReport>& reports);

/// Copy of a truncated-box field into a box `factor` times wider (same
/// spacing, centred), zero outside the original box.
SampledField embed_in_wider_box(const SampledField& u, int factor);
/// Inverse of embed_in_wider_box: restriction to the original box.
SampledField restrict_to_box(const SampledField& wide, const GridSpec& original);

}  // namespace fraccv
