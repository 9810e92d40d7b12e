#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fraccv/grid.hpp"
#include "fraccv/params.hpp"

namespace fraccv {

/// Integrand on m x n matrices, entries laid out [c * n + d].
using MatrixFunction = std::function<double(std::span<const double>)>;
using ScalarFunction = std::function<double(double)>;

enum class EnvelopeMethod { Biconjugate1d, Lamination };

/// Growth bounds c |A|^p <= f(A) <= C |A|^p, when known.
struct Pinching {
  double c = 0.0;
  double C = 0.0;
  double p = 2.0;
};

/// Samples of f and of its (quasi)convex envelope or an upper bound for it.
struct EnvelopeTable {
  int m = 1;
  int n = 1;
  std::vector<std::vector<double>> samples;  // each of size m * n
  std::vector<double> f;
  std::vector<double> fqc;
  EnvelopeMethod method = EnvelopeMethod::Biconjugate1d;
  int depth = 0;  // lamination depth
  std::optional<Pinching> pinching;

  [[nodiscard]] std::size_t size() const { return f.size(); }
  /// Piecewise-linear interpolation of fqc for 1x1 tables. Throws Error outside the sampled range.
  [[nodiscard]] double interpolate(double A) const;
  [[nodiscard]] double min_sample() const;
  [[nodiscard]] double max_sample() const;
};

std::string to_string(EnvelopeMethod method);

/// Discrete biconjugate f** of f sampled at `samples` equispaced points on
/// [a_min, a_max] (the lower convex hull of the samples). Throws on non-finite samples.
EnvelopeTable convex_envelope_1d(const ScalarFunction& f, double a_min, double a_max, int samples,
                                 std::optional<Pinching> pinching = std::nullopt);
/// Same, from values already sampled on an equispaced grid.
EnvelopeTable convex_envelope_1d(const std::vector<double>& values, double a_min, double a_max,
                                 std::optional<Pinching> pinching = std::nullopt);

/// A = w B + (1 - w) C with B <= A <= C the nearest samples on either side
/// where the envelope touches f (within `tolerance`), so that
/// fqc(A) = w f(B) + (1 - w) f(C). `affine` when A itself is a contact point.
struct EnvelopeSplit {
  double lower = 0.0;
  double upper = 0.0;
  double weight_lower = 1.0;
  bool affine = true;
};
EnvelopeSplit envelope_split(const EnvelopeTable& table, double A, double tolerance = 1e-12);

/// Worst violation of discrete convexity (most negative second difference,
/// scaled by h^2), 0 if convex.
double convexity_defect(const EnvelopeTable& table);

struct LaminationOptions {
  int lambda_steps = 8;        // volume fractions k / lambda_steps, 0 < k < lambda_steps
  int amplitude_steps = 40;    // |B - C| on a uniform grid of (0, amplitude_max]
  double amplitude_max = 4.0;
  int direction_steps = 4;     // unit directions per factor of the rank-one matrix (m, n >= 2)
};

/// Upper bound for f^qc(A) by rank-one lamination trees of the given depth
/// (0..3): A = l B + (1 - l) C with B - C rank one, recursively. Never above
/// f(A); nonincreasing in depth for fixed options.
double laminate_upper_bound(const MatrixFunction& f, std::span<const double> A, int m, int n, int depth,
                            const LaminationOptions& options = {});

/// Lamination upper bounds at the given samples.
EnvelopeTable laminate_envelope_table(const MatrixFunction& f, const std::vector<std::vector<double>>& samples,
                                      int m, int n, int depth, const LaminationOptions& options = {});

/// u = (-Delta)^{(1-a)/2} v + mean(v) for a periodic v (spectral), so that
/// grad_a u = grad v. `identity_residual` is the relative L^2 mismatch of
/// grad_a u against the spectral gradient of v.
struct PushforwardResult {
  SampledField u;
  double identity_residual = 0.0;
};
PushforwardResult periodic_pushforward(const SampledField& v, const FractionalParams& params);

/// Failure of alpha-quasiconvexity at A: h(A) - mean_Q h(A + grad_a phi) = gap > 0.
struct ViolationWitness {
  std::vector<double> A;
  SampledField test_field;  // phi, periodic
  double gap = 0.0;
  int oscillations = 0;      // laminate periods per cell
  double volume_fraction = 0.0;
  double amplitude = 0.0;
  std::vector<double> direction_a;  // m
  std::vector<int> direction_b;     // n, integer lattice direction
};

struct ViolationBudget {
  int points_per_axis = 0;  // periodic grid resolution; 0: 4096 in 1D, 64 in 2D, 16 in 3D
  std::vector<int> oscillations{2, 4, 8};
  int lambda_steps = 16;
  int amplitude_steps = 32;
  double amplitude_max = 4.0;
  double tolerance = 1e-6;  // a witness needs gap > tolerance
};

struct ViolationSearchResult {
  std::optional<ViolationWitness> witness;
  double best_gap = -std::numeric_limits<double>::infinity();
  int candidates = 0;
  /// "violation" or "consistent with alpha-quasiconvexity" (never a certificate).
  std::string verdict;
};

/// Searches periodic laminate test fields phi = pushforward(v), v a
/// piecewise-affine periodic profile along an integer direction, for
/// h(A) > mean_Q h(A + grad_a phi).
ViolationSearchResult alpha_qc_violation_search(const MatrixFunction& h, std::span<const double> A, int m,
                                                const FractionalParams& params,
                                                const ViolationBudget& budget = {});

/// CSV with columns A (or A_cd), f, fqc.
void write_envelope_csv(std::ostream& os, const EnvelopeTable& table);

}  // namespace fraccv
