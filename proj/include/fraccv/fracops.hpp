#pragma once

#include <cstddef>
#include <vector>

#include "fraccv/grid.hpp"
#include "fraccv/params.hpp"

namespace fraccv {

enum class BackendKind { Spectral, Quadrature };

/// Discretisation used to evaluate the fractional operators.
///
/// Spectral: FFT with the Fourier symbols of the operators. On a periodic cell
/// the field is used as is; on a truncated box it is zero-padded by
/// `padding_factor` along every axis and treated as one period. The outputs
/// decay only algebraically, so the periodic images of that padded period
/// are the leading error on a box; the default padding keeps them near 1e-6
/// in 1D.
///
/// Quadrature: midpoint rule for the singular integrals on the grid nodes,
/// with the fields extended by zero outside a truncated box and periodically
/// on a periodic cell. Within the cube of half-width `singularity_radius`
/// the Taylor polynomial of the field is subtracted from the integrand and
/// integrated exactly. The kernel is cut at the cube of half-width
/// `far_cutoff`.
struct OperatorBackend {
  BackendKind kind = BackendKind::Spectral;
  /// Taylor window half-width; rounded down to (k + 1/2) h, never below h/2.
  /// A non-positive value selects the whole kernel window.
  double singularity_radius = 0.0;
  /// Kernel cut-off half-width. Non-positive: the whole box (truncated) or
  /// `periodic_images` cell lengths (periodic).
  double far_cutoff = 0.0;
  int periodic_images = 0;  // 0 selects a dimension-dependent default
  int padding_factor = 0;  // 0 selects a dimension- and size-dependent default

  static OperatorBackend spectral(int padding = 0) {
    OperatorBackend b;
    b.kind = BackendKind::Spectral;
    b.padding_factor = padding;
    return b;
  }
  static OperatorBackend quadrature(double singularity_radius = 0.0, double far_cutoff = 0.0) {
    OperatorBackend b;
    b.kind = BackendKind::Quadrature;
    b.singularity_radius = singularity_radius;
    b.far_cutoff = far_cutoff;
    return b;
  }
};

struct OperatorResult {
  SampledField field;
  /// Upper bound for the far-field contribution that was not computed.
  /// Zero for the spectral backend on a periodic cell.
  double truncation_estimate = 0.0;
};

/// I_a u = gamma_{n,a}^{-1} (|.|^{a-n} * u), order a in (0, n). The spectral
/// backend maps the zero frequency to zero, so on a periodic cell the result
/// is the potential of u minus its mean.
OperatorResult riesz_potential(const SampledField& u, double order, const OperatorBackend& backend);

/// Componentwise fractional gradient; an m-component field maps to an
/// (m x n)-component field laid out as [c * n + d].
OperatorResult fractional_gradient(const SampledField& u, const FractionalParams& params,
                                   const OperatorBackend& backend);

/// (-Delta)^s u for s in (0,1), kernel exponent n + 2s, symbol (2 pi |xi|)^{2s}.
OperatorResult fractional_laplacian(const SampledField& u, double s, const OperatorBackend& backend);

/// mu int (y-x)(u(y)-u(x))(psi(y)-psi(x)) / |y-x|^{n+alpha+1} dy for scalar psi.
/// Always evaluated with the quadrature kernel; the backend only selects the
/// far-field handling.
OperatorResult nonlocal_leibniz_remainder(const SampledField& u, const SampledField& psi,
                                          const FractionalParams& params,
                                          const OperatorBackend& backend);

/// Fractional divergence of an (m x n)-component field, defined as the
/// negative grid adjoint of fractional_gradient:
///   <grad_a u, V> = -<u, div_a V>  for every u, V on the grid.
SampledField fractional_divergence(const SampledField& V, const FractionalParams& params,
                                   const OperatorBackend& backend);

/// Least-squares spectral inverse of the fractional gradient: the scalar
/// (per row) field u with grad_a u closest to V on the transform grid.
/// Zero frequency and Nyquist modes are dropped. Spectral only.
SampledField fractional_gradient_inverse(const SampledField& V, const FractionalParams& params,
                                         int padding_factor = 0);

/// Classical gradient matching the backend: spectral derivative, or
/// fourth-order central differences (zero/periodic extension) for quadrature.
SampledField discrete_gradient(const SampledField& u, const OperatorBackend& backend);

/// Quadrature-backend fractional gradient of a scalar field at a single node,
/// by direct summation over the grid. Returns n components.
std::vector<double> fractional_gradient_at(const SampledField& u, std::size_t node,
                                           const FractionalParams& params,
                                           const OperatorBackend& backend = OperatorBackend::quadrature());

/// int_{[-1,1]^n} |r|^beta dr, for n + beta > 0.
double cube_power_integral(int n, double beta);
/// int_{R^n \ [-1,1]^n} |r|^beta dr, for n + beta < 0.
double cube_exterior_power_integral(int n, double beta);

}  // namespace fraccv
