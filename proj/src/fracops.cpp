#include "fraccv/fracops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fft.hpp"

namespace fraccv {

namespace {

using cplx = std::complex<double>;
using Index = std::array<int, 3>;
constexpr double kPi = std::numbers::pi;

double sphere_area(int n) { return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n); }

// int_{[-1,1]^{n-1}} (1 + |w|^2)^{beta/2} dw
double face_integral(int n, double beta) {
  using boost::math::quadrature::gauss_kronrod;
  if (n == 1) return 1.0;
  if (n == 2) {
    auto f = [beta](double w) { return std::pow(1.0 + w * w, 0.5 * beta); };
    return gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 0, 0.0);
  }
  auto outer = [beta](double w1) {
    auto inner = [beta, w1](double w2) { return std::pow(1.0 + w1 * w1 + w2 * w2, 0.5 * beta); };
    return gauss_kronrod<double, 61>::integrate(inner, -1.0, 1.0, 0, 0.0);
  };
  return gauss_kronrod<double, 61>::integrate(outer, -1.0, 1.0, 0, 0.0);
}

void require_decay(const SampledField& u, const char* op) {
  if (u.grid().kind == GridKind::TruncatedBox && u.decay() == DecayClass::Unknown)
    throw Error(std::string(op) +
                ": field has unknown decay; operators on a truncated box need a "
                "compact-support or schwartz-like field");
}

// ---------------------------------------------------------------------------
// Spectral machinery

int default_padding(const GridSpec& g) {
  const int N = g.points_per_axis;
  switch (g.dim) {
    case 1: return 128;
    case 2: return std::clamp(2048 / N, 2, 8);
    default: return std::clamp(256 / N, 2, 4);
  }
}

class SpectralGrid {
 public:
  SpectralGrid(const GridSpec& g, int padding) : g_(g) {
    if (padding == 0) padding = default_padding(g);
    if (padding < 1) throw Error("padding_factor must be >= 1");
    P_ = g.kind == GridKind::PeriodicCell ? g.points_per_axis : g.points_per_axis * padding;
    period_ = P_ * g.spacing;
    plan_ = std::make_unique<detail::FftPlan>(std::vector<int>(g.dim, P_));
  }

  [[nodiscard]] std::vector<cplx> forward(const SampledField& u, int comp) const {
    std::vector<cplx> buf(plan_->size(), 0.0);
    const std::size_t P = P_;
    for (std::size_t i = 0; i < u.num_points(); ++i) {
      auto idx = g_.multi_index(i);
      std::size_t flat = 0;
      for (int d = 0; d < g_.dim; ++d) flat = flat * P + static_cast<std::size_t>(idx[d]);
      buf[flat] = u(i, comp);
    }
    plan_->forward(buf);
    return buf;
  }

  // Multiplies by symbol(xi, nyquist) and transforms back, keeping the real
  // part on the original nodes.
  template <class Symbol>
  [[nodiscard]] std::vector<double> apply(std::vector<cplx> spec, Symbol&& symbol) const {
    const int n = g_.dim;
    const std::size_t P = P_;
    for (std::size_t f = 0; f < spec.size(); ++f) {
      std::array<double, 3> xi{0.0, 0.0, 0.0};
      std::array<bool, 3> nyq{false, false, false};
      std::size_t rest = f;
      for (int d = n - 1; d >= 0; --d) {
        const long k = static_cast<long>(rest % P);
        rest /= P;
        const long kk = k < static_cast<long>(P / 2) ? k : k - static_cast<long>(P);
        nyq[d] = kk == -static_cast<long>(P / 2);
        xi[d] = static_cast<double>(kk) / period_;
      }
      spec[f] *= symbol(xi, nyq);
    }
    plan_->backward(spec);
    const double scale = 1.0 / static_cast<double>(plan_->size());
    std::vector<double> out(g_.num_points());
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto idx = g_.multi_index(i);
      std::size_t flat = 0;
      for (int d = 0; d < n; ++d) flat = flat * P + static_cast<std::size_t>(idx[d]);
      out[i] = spec[flat].real() * scale;
    }
    return out;
  }

 private:
  GridSpec g_;
  int P_ = 0;
  double period_ = 1.0;
  std::unique_ptr<detail::FftPlan> plan_;
};

double xi_norm(const std::array<double, 3>& xi, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += xi[d] * xi[d];
  return std::sqrt(s);
}

// Symbol of the fractional gradient along axis d: i 2 pi xi_d (2 pi |xi|)^{alpha-1}.
auto gradient_symbol(int n, int d, double alpha) {
  return [n, d, alpha](const std::array<double, 3>& xi, const std::array<bool, 3>& nyq) -> cplx {
    const double r = xi_norm(xi, n);
    if (r == 0.0 || nyq[d]) return 0.0;
    return {0.0, 2.0 * kPi * xi[d] * std::pow(2.0 * kPi * r, alpha - 1.0)};
  };
}

// ---------------------------------------------------------------------------
// Quadrature machinery

struct QuadGeometry {
  int dim = 1;
  int N = 0;
  double h = 0.0;
  bool periodic = false;
  int M = 0;  // kernel cube half-width in cells
  int k = 0;  // Taylor window half-width in cells (window = (k + 1/2) h)
  // Periodic cells: the kernel is multiplied by a smooth radial taper that
  // falls from 1 at taper_inner to 0 at taper_outer. Zero: hard cube cut.
  double taper_inner = 0.0;
  double taper_outer = 0.0;

  [[nodiscard]] double delta() const { return (k + 0.5) * h; }
  [[nodiscard]] double far_radius() const {
    return taper_outer > 0.0 ? taper_inner : (M + 0.5) * h;
  }
  [[nodiscard]] double taper(double r) const {
    if (taper_outer <= 0.0 || r <= taper_inner) return 1.0;
    if (r >= taper_outer) return 0.0;
    const double t = (r - taper_inner) / (taper_outer - taper_inner);
    const double a = std::exp(-1.0 / (1.0 - t));
    const double b = std::exp(-1.0 / t);
    return a / (a + b);
  }
};

int default_periodic_images(int dim) {
  switch (dim) {
    case 1: return 16;
    case 2: return 4;
    default: return 2;
  }
}

QuadGeometry quad_geometry(const GridSpec& g, const OperatorBackend& b) {
  QuadGeometry q;
  q.dim = g.dim;
  q.N = g.points_per_axis;
  q.h = g.spacing;
  q.periodic = g.kind == GridKind::PeriodicCell;
  if (q.periodic) {
    const int images = b.periodic_images > 0 ? b.periodic_images : default_periodic_images(g.dim);
    const double R = b.far_cutoff > 0.0 ? b.far_cutoff : static_cast<double>(images);
    q.M = std::max(2, static_cast<int>(std::ceil(R / q.h)));
    q.taper_outer = q.M * q.h;
    q.taper_inner = 0.5 * q.taper_outer;
  } else {
    q.M = q.N - 1;
    if (b.far_cutoff > 0.0)
      q.M = std::clamp(static_cast<int>(std::floor(b.far_cutoff / q.h)), 1, q.N - 1);
  }
  // The Taylor window must stay where the taper is still 1.
  int kmax = q.M;
  if (q.taper_outer > 0.0)
    kmax = std::max(0, static_cast<int>(std::floor(q.taper_inner / (std::sqrt(q.dim) * q.h) - 0.5)));
  if (b.singularity_radius > 0.0)
    q.k = std::clamp(static_cast<int>(std::floor(b.singularity_radius / q.h - 0.5)), 0, kmax);
  else
    q.k = kmax;
  return q;
}

// Calls f(offset) for every offset in the cube |o|_inf <= m (including 0).
template <class F>
void for_each_offset(int dim, int m, F&& f) {
  Index o{0, 0, 0};
  const int w = 2 * m + 1;
  long total = 1;
  for (int d = 0; d < dim; ++d) total *= w;
  for (long t = 0; t < total; ++t) {
    long rest = t;
    for (int d = dim - 1; d >= 0; --d) {
      o[d] = static_cast<int>(rest % w) - m;
      rest /= w;
    }
    f(o);
  }
}

double offset_norm(const Index& o, int dim, double h) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += static_cast<double>(o[d]) * o[d];
  return std::sqrt(s) * h;
}

// h^n sum_{0 < |o|_inf <= k} (r_1^2 if weighted) |r|^beta
double window_sum(const QuadGeometry& q, double beta, bool r1_squared) {
  double acc = 0.0;
  for_each_offset(q.dim, q.k, [&](const Index& o) {
    const double r = offset_norm(o, q.dim, q.h);
    if (r == 0.0) return;
    double v = std::pow(r, beta);
    if (r1_squared) v *= std::pow(o[0] * q.h, 2);
    acc += v;
  });
  return acc * std::pow(q.h, q.dim);
}

// out_i = sum_{0 < |o|_inf <= M} w(o) u~_{i+o}, with u~ the zero (truncated) or
// periodic extension of u, evaluated by FFT.
class Convolver {
 public:
  template <class W>
  Convolver(const QuadGeometry& q, W&& w) : q_(q) {
    P_ = q.periodic ? q.N : 2 * q.N;
    plan_ = std::make_unique<detail::FftPlan>(std::vector<int>(q.dim, P_));
    kernel_.assign(plan_->size(), 0.0);
    for_each_offset(q.dim, q.M, [&](const Index& o) {
      bool zero = true;
      for (int d = 0; d < q.dim; ++d) zero = zero && o[d] == 0;
      if (zero) return;
      std::size_t flat = 0;
      for (int d = 0; d < q.dim; ++d) {
        int t = (-o[d]) % P_;
        if (t < 0) t += P_;
        flat = flat * P_ + static_cast<std::size_t>(t);
      }
      kernel_[flat] += w(o);
    });
    plan_->forward(kernel_);
  }

  [[nodiscard]] std::vector<double> apply(const std::vector<double>& u) const {
    const std::size_t P = P_;
    const auto N = static_cast<std::size_t>(q_.N);
    std::vector<cplx> buf(plan_->size(), 0.0);
    std::vector<std::size_t> map(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      std::size_t rest = i;
      std::size_t flat = 0;
      std::size_t stride = 1;
      for (int d = q_.dim - 1; d >= 0; --d) {
        flat += (rest % N) * stride;
        rest /= N;
        stride *= P;
      }
      map[i] = flat;
      buf[flat] = u[i];
    }
    plan_->forward(buf);
    for (std::size_t f = 0; f < buf.size(); ++f) buf[f] *= kernel_[f];
    plan_->backward(buf);
    const double scale = 1.0 / static_cast<double>(plan_->size());
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = buf[map[i]].real() * scale;
    return out;
  }

 private:
  QuadGeometry q_;
  int P_ = 0;
  std::unique_ptr<detail::FftPlan> plan_;
  std::vector<cplx> kernel_;
};

std::vector<double> scalar_values(const SampledField& u, int comp) {
  std::vector<double> v(u.num_points());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = u(i, comp);
  return v;
}

// Extended value u~ at idx shifted by s along axis d.
double shifted(const GridSpec& g, const std::vector<double>& u, Index idx, int d, int s) {
  idx[d] += s;
  const int N = g.points_per_axis;
  if (idx[d] < 0 || idx[d] >= N) {
    if (g.kind == GridKind::TruncatedBox) return 0.0;
    idx[d] = ((idx[d] % N) + N) % N;
  }
  return u[g.flat_index(idx)];
}

// Fourth-order central first derivative along d.
std::vector<double> central_first(const GridSpec& g, const std::vector<double>& u, int d) {
  std::vector<double> out(u.size());
  const double c = 1.0 / (12.0 * g.spacing);
  for (std::size_t i = 0; i < u.size(); ++i) {
    auto idx = g.multi_index(i);
    out[i] = c * (-shifted(g, u, idx, d, 2) + 8.0 * shifted(g, u, idx, d, 1) -
                  8.0 * shifted(g, u, idx, d, -1) + shifted(g, u, idx, d, -2));
  }
  return out;
}

// Fourth-order discrete Laplacian.
std::vector<double> central_laplacian(const GridSpec& g, const std::vector<double>& u) {
  std::vector<double> out(u.size(), 0.0);
  const double c = 1.0 / (12.0 * g.spacing * g.spacing);
  for (std::size_t i = 0; i < u.size(); ++i) {
    auto idx = g.multi_index(i);
    for (int d = 0; d < g.dim; ++d)
      out[i] += c * (-shifted(g, u, idx, d, 2) + 16.0 * shifted(g, u, idx, d, 1) - 30.0 * u[i] +
                     16.0 * shifted(g, u, idx, d, -1) - shifted(g, u, idx, d, -2));
  }
  return out;
}

// Fractional gradient kernel along d: mu h^n r_d / |r|^{n+alpha+1}.
auto gradient_kernel(const QuadGeometry& q, int d, double mu, double alpha) {
  const double hn = std::pow(q.h, q.dim);
  return [=](const Index& o) {
    const double r = offset_norm(o, q.dim, q.h);
    return mu * hn * (o[d] * q.h) * std::pow(r, -q.dim - alpha - 1.0) * q.taper(r);
  };
}

// Coefficient of the classical derivative restoring the Taylor window.
double gradient_window_coefficient(const QuadGeometry& q, double mu, double alpha) {
  const int n = q.dim;
  const double exact =
      cube_power_integral(n, 1.0 - n - alpha) / n * std::pow(q.delta(), 1.0 - alpha);
  return mu * (exact - window_sum(q, -n - alpha - 1.0, true));
}

double band_max(const SampledField& u) {
  const auto& g = u.grid();
  const int N = g.points_per_axis;
  double m = 0.0;
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    auto idx = g.multi_index(i);
    bool edge = false;
    for (int d = 0; d < g.dim; ++d) edge = edge || idx[d] < 2 || idx[d] >= N - 2;
    if (!edge) continue;
    for (int c = 0; c < u.components(); ++c) m = std::max(m, std::abs(u(i, c)));
  }
  return m;
}

// Far-field bound for kernels ~ scale |r|^{-n-order} acting on u.
double far_field_estimate(const SampledField& u, const QuadGeometry* q, double scale, double order,
                          bool spectral) {
  const auto& g = u.grid();
  const int n = g.dim;
  double est = 0.0;
  if (g.kind == GridKind::PeriodicCell) {
    if (spectral || !q) return 0.0;
    return 2.0 * std::abs(scale) * lp_norm(u, INFINITY) *
           cube_exterior_power_integral(n, -n - order) * std::pow(q->far_radius(), -order);
  }
  if (q && q->M < q->N - 1)
    est += std::abs(scale) * lp_norm(u, 1.0) * std::pow(q->far_radius(), -n - order);
  if (u.decay() == DecayClass::SchwartzLike)
    est += std::abs(scale) * band_max(u) * sphere_area(n) * std::pow(0.5 * g.spacing, -order) /
           order;
  return est;
}

void check_backend(const OperatorBackend& b) {
  if (b.kind == BackendKind::Spectral && b.padding_factor < 0)
    throw Error("padding_factor must be >= 1 (or 0 for the default)");
}

}  // namespace

double cube_power_integral(int n, double beta) {
  if (!(n + beta > 0.0)) throw Error("cube_power_integral requires n + beta > 0");
  return 2.0 * n / (n + beta) * face_integral(n, beta);
}

double cube_exterior_power_integral(int n, double beta) {
  if (!(n + beta < 0.0)) throw Error("cube_exterior_power_integral requires n + beta < 0");
  return 2.0 * n / (-n - beta) * face_integral(n, beta);
}

OperatorResult riesz_potential(const SampledField& u, double order, const OperatorBackend& backend) {
  check_backend(backend);
  const auto& g = u.grid();
  const int n = g.dim;
  if (!(order > 0.0 && order < n)) throw Error("Riesz potential order must lie in (0, n)");
  u.validate_finite();
  require_decay(u, "riesz_potential");
  const double gamma = riesz_potential_constant(n, order);
  SampledField out(g, u.components(), DecayClass::Unknown);

  if (backend.kind == BackendKind::Spectral) {
    SpectralGrid sg(g, backend.padding_factor);
    for (int c = 0; c < u.components(); ++c) {
      auto v = sg.apply(sg.forward(u, c), [n, order](const auto& xi, const auto&) -> cplx {
        const double r = xi_norm(xi, n);
        return r == 0.0 ? 0.0 : std::pow(2.0 * kPi * r, -order);
      });
      for (std::size_t i = 0; i < v.size(); ++i) out(i, c) = v[i];
    }
    double est = 0.0;
    if (g.kind == GridKind::TruncatedBox && u.decay() == DecayClass::SchwartzLike) {
      // Heuristic: tail mass comparable to the band value over a box-sized region.
      est = band_max(u) * sphere_area(n) * std::pow(2.0 * g.half_extent, order) / (order * gamma) *
            std::pow(2.0 * g.half_extent, n);
    }
    return {std::move(out), est};
  }

  if (g.kind == GridKind::PeriodicCell)
    throw Error("riesz_potential: the quadrature backend is not available on a periodic cell "
                "(the lattice sum of |r|^{a-n} diverges); use the spectral backend");
  const auto q = quad_geometry(g, backend);
  const double hn = std::pow(q.h, n);
  Convolver conv(q, [&](const Index& o) {
    return hn * std::pow(offset_norm(o, n, q.h), order - n);
  });
  const double k0 =
      cube_power_integral(n, order - n) * std::pow(q.delta(), order) - window_sum(q, order - n, false);
  const double k2 = 0.5 * (cube_power_integral(n, 2.0 + order - n) / n *
                               std::pow(q.delta(), 2.0 + order) -
                           window_sum(q, order - n, true));
  for (int c = 0; c < u.components(); ++c) {
    auto uc = scalar_values(u, c);
    auto w = conv.apply(uc);
    auto lap = central_laplacian(g, uc);
    for (std::size_t i = 0; i < uc.size(); ++i)
      out(i, c) = (w[i] + k0 * uc[i] + k2 * lap[i]) / gamma;
  }
  double est = 0.0;
  if (u.decay() == DecayClass::SchwartzLike)
    est = band_max(u) * sphere_area(n) * std::pow(2.0 * g.half_extent, order) / (order * gamma) *
          std::pow(2.0 * g.half_extent, n);
  return {std::move(out), est};
}

OperatorResult fractional_gradient(const SampledField& u, const FractionalParams& params,
                                   const OperatorBackend& backend) {
  check_backend(backend);
  const auto& g = u.grid();
  const int n = g.dim;
  if (params.dim != n) throw Error("fractional_gradient: parameter dimension differs from grid");
  if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  u.validate_finite();
  require_decay(u, "fractional_gradient");
  const int m = u.components();
  SampledField out(g, m * n, DecayClass::Unknown);

  if (backend.kind == BackendKind::Spectral) {
    SpectralGrid sg(g, backend.padding_factor);
    for (int c = 0; c < m; ++c) {
      auto spec = sg.forward(u, c);
      for (int d = 0; d < n; ++d) {
        auto v = sg.apply(spec, gradient_symbol(n, d, params.alpha));
        for (std::size_t i = 0; i < v.size(); ++i) out(i, c * n + d) = v[i];
      }
    }
    return {std::move(out), far_field_estimate(u, nullptr, params.mu, params.alpha, true)};
  }

  const auto q = quad_geometry(g, backend);
  const double kappa = gradient_window_coefficient(q, params.mu, params.alpha);
  std::vector<std::unique_ptr<Convolver>> conv;
  for (int d = 0; d < n; ++d)
    conv.push_back(std::make_unique<Convolver>(q, gradient_kernel(q, d, params.mu, params.alpha)));
  for (int c = 0; c < m; ++c) {
    auto uc = scalar_values(u, c);
    for (int d = 0; d < n; ++d) {
      auto w = conv[d]->apply(uc);
      auto du = central_first(g, uc, d);
      for (std::size_t i = 0; i < uc.size(); ++i) out(i, c * n + d) = w[i] + kappa * du[i];
    }
  }
  return {std::move(out), far_field_estimate(u, &q, params.mu, params.alpha, false)};
}

OperatorResult fractional_laplacian(const SampledField& u, double s, const OperatorBackend& backend) {
  check_backend(backend);
  const auto& g = u.grid();
  const int n = g.dim;
  if (!(s > 0.0 && s < 1.0)) throw Error("fractional_laplacian requires s in (0, 1)");
  u.validate_finite();
  require_decay(u, "fractional_laplacian");
  const double nu = laplacian_constant(n, 2.0 * s);
  SampledField out(g, u.components(), DecayClass::Unknown);

  if (backend.kind == BackendKind::Spectral) {
    SpectralGrid sg(g, backend.padding_factor);
    for (int c = 0; c < u.components(); ++c) {
      auto v = sg.apply(sg.forward(u, c), [n, s](const auto& xi, const auto&) -> cplx {
        return std::pow(2.0 * kPi * xi_norm(xi, n), 2.0 * s);
      });
      for (std::size_t i = 0; i < v.size(); ++i) out(i, c) = v[i];
    }
    return {std::move(out), far_field_estimate(u, nullptr, nu, 2.0 * s, true)};
  }

  const auto q = quad_geometry(g, backend);
  const double hn = std::pow(q.h, n);
  auto kernel = [&](const Index& o) {
    const double r = offset_norm(o, n, q.h);
    return hn * std::pow(r, -n - 2.0 * s) * q.taper(r);
  };
  Convolver conv(q, kernel);
  // Total kernel mass (for the -u_i part of u~_{i+o} - u_i).
  double mass = 0.0;
  for_each_offset(n, q.M, [&](const Index& o) {
    if (offset_norm(o, n, q.h) > 0.0) mass += kernel(o);
  });
  const double kappa = 0.5 * nu *
                       (cube_power_integral(n, 2.0 - n - 2.0 * s) / n *
                            std::pow(q.delta(), 2.0 - 2.0 * s) -
                        window_sum(q, -n - 2.0 * s, true));
  // Kernel mass left out by the cut, paired with mean(u) - u_i.
  double exterior = 0.0;
  if (q.taper_outer > 0.0) {
    auto f = [&](double r) { return (1.0 - q.taper(r)) * std::pow(r, -1.0 - 2.0 * s); };
    exterior = sphere_area(n) *
               (boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    f, q.taper_inner, q.taper_outer, 10, 1e-14) +
                std::pow(q.taper_outer, -2.0 * s) / (2.0 * s));
  } else {
    exterior = cube_exterior_power_integral(n, -n - 2.0 * s) * std::pow(q.far_radius(), -2.0 * s);
  }
  exterior *= nu;
  for (int c = 0; c < u.components(); ++c) {
    auto uc = scalar_values(u, c);
    double mean = 0.0;
    if (q.periodic) {
      for (double v : uc) mean += v;
      mean /= static_cast<double>(uc.size());
    }
    auto w = conv.apply(uc);
    auto lap = central_laplacian(g, uc);
    for (std::size_t i = 0; i < uc.size(); ++i)
      out(i, c) = nu * (w[i] - mass * uc[i]) + kappa * lap[i] + exterior * (mean - uc[i]);
  }
  return {std::move(out), far_field_estimate(u, &q, nu, 2.0 * s, false)};
}

OperatorResult nonlocal_leibniz_remainder(const SampledField& u, const SampledField& psi,
                                          const FractionalParams& params,
                                          const OperatorBackend& backend) {
  const auto& g = u.grid();
  const int n = g.dim;
  if (psi.components() != 1 || !(psi.grid() == g))
    throw Error("nonlocal_leibniz_remainder expects a scalar psi on the grid of u");
  if (params.dim != n) throw Error("nonlocal_leibniz_remainder: parameter dimension differs from grid");
  u.validate_finite();
  psi.validate_finite();
  require_decay(u, "nonlocal_leibniz_remainder");
  OperatorBackend qb = backend;
  qb.kind = BackendKind::Quadrature;
  const auto q = quad_geometry(g, qb);
  const int m = u.components();
  SampledField out(g, m * n, DecayClass::Unknown);
  auto p = scalar_values(psi, 0);
  for (int d = 0; d < n; ++d) {
    Convolver conv(q, gradient_kernel(q, d, params.mu, params.alpha));
    auto wp = conv.apply(p);
    for (int c = 0; c < m; ++c) {
      auto uc = scalar_values(u, c);
      std::vector<double> up(uc.size());
      for (std::size_t i = 0; i < uc.size(); ++i) up[i] = uc[i] * p[i];
      auto wup = conv.apply(up);
      auto wu = conv.apply(uc);
      for (std::size_t i = 0; i < uc.size(); ++i)
        out(i, c * n + d) = wup[i] - p[i] * wu[i] - uc[i] * wp[i];
    }
  }
  const double est =
      2.0 * lp_norm(psi, INFINITY) * far_field_estimate(u, &q, params.mu, params.alpha, false);
  return {std::move(out), est};
}

SampledField fractional_divergence(const SampledField& V, const FractionalParams& params,
                                   const OperatorBackend& backend) {
  check_backend(backend);
  const auto& g = V.grid();
  const int n = g.dim;
  if (params.dim != n) throw Error("fractional_divergence: parameter dimension differs from grid");
  if (V.components() % n != 0)
    throw Error("fractional_divergence expects a field with a multiple of n components");
  V.validate_finite();
  const int m = V.components() / n;
  SampledField out(g, m, DecayClass::Unknown);

  if (backend.kind == BackendKind::Spectral) {
    SpectralGrid sg(g, backend.padding_factor);
    for (int c = 0; c < m; ++c)
      for (int d = 0; d < n; ++d) {
        auto v = sg.apply(sg.forward(V, c * n + d), gradient_symbol(n, d, params.alpha));
        for (std::size_t i = 0; i < v.size(); ++i) out(i, c) += v[i];
      }
    return out;
  }

  const auto q = quad_geometry(g, backend);
  const double kappa = gradient_window_coefficient(q, params.mu, params.alpha);
  for (int d = 0; d < n; ++d) {
    Convolver conv(q, gradient_kernel(q, d, params.mu, params.alpha));
    for (int c = 0; c < m; ++c) {
      auto vc = scalar_values(V, c * n + d);
      auto w = conv.apply(vc);
      auto dv = central_first(g, vc, d);
      for (std::size_t i = 0; i < vc.size(); ++i) out(i, c) += w[i] + kappa * dv[i];
    }
  }
  return out;
}

SampledField fractional_gradient_inverse(const SampledField& V, const FractionalParams& params,
                                         int padding_factor) {
  const auto& g = V.grid();
  const int n = g.dim;
  if (params.dim != n) throw Error("fractional_gradient_inverse: parameter dimension differs from grid");
  if (V.components() % n != 0)
    throw Error("fractional_gradient_inverse expects a field with a multiple of n components");
  V.validate_finite();
  const int m = V.components() / n;
  SampledField out(g, m, DecayClass::Unknown);
  SpectralGrid sg(g, padding_factor);
  for (int c = 0; c < m; ++c)
    for (int d = 0; d < n; ++d) {
      auto sym = gradient_symbol(n, d, params.alpha);
      auto v = sg.apply(sg.forward(V, c * n + d), [&](const auto& xi, const auto& nyq) -> cplx {
        double den = 0.0;
        for (int e = 0; e < n; ++e) den += std::norm(gradient_symbol(n, e, params.alpha)(xi, nyq));
        if (den == 0.0) return 0.0;
        return std::conj(sym(xi, nyq)) / den;
      });
      for (std::size_t i = 0; i < v.size(); ++i) out(i, c) += v[i];
    }
  return out;
}

SampledField discrete_gradient(const SampledField& u, const OperatorBackend& backend) {
  check_backend(backend);
  const auto& g = u.grid();
  const int n = g.dim;
  const int m = u.components();
  SampledField out(g, m * n, DecayClass::Unknown);
  if (backend.kind == BackendKind::Spectral) {
    SpectralGrid sg(g, backend.padding_factor);
    for (int c = 0; c < m; ++c) {
      auto spec = sg.forward(u, c);
      for (int d = 0; d < n; ++d) {
        auto v = sg.apply(spec, [d](const auto& xi, const auto& nyq) -> cplx {
          if (nyq[d]) return 0.0;
          return {0.0, 2.0 * kPi * xi[d]};
        });
        for (std::size_t i = 0; i < v.size(); ++i) out(i, c * n + d) = v[i];
      }
    }
    return out;
  }
  for (int c = 0; c < m; ++c) {
    auto uc = scalar_values(u, c);
    for (int d = 0; d < n; ++d) {
      auto v = central_first(g, uc, d);
      for (std::size_t i = 0; i < v.size(); ++i) out(i, c * n + d) = v[i];
    }
  }
  return out;
}

std::vector<double> fractional_gradient_at(const SampledField& u, std::size_t node,
                                           const FractionalParams& params,
                                           const OperatorBackend& backend) {
  const auto& g = u.grid();
  const int n = g.dim;
  if (u.components() != 1) throw Error("fractional_gradient_at expects a scalar field");
  if (node >= u.num_points()) throw Error("fractional_gradient_at: node index out of range");
  if (params.dim != n) throw Error("fractional_gradient_at: parameter dimension differs from grid");
  OperatorBackend qb = backend;
  qb.kind = BackendKind::Quadrature;
  const auto q = quad_geometry(g, qb);
  const double kappa = gradient_window_coefficient(q, params.mu, params.alpha);
  const double hn = std::pow(q.h, n);
  auto uc = scalar_values(u, 0);
  const Index base = g.multi_index(node);
  std::vector<double> out(n, 0.0);
  for_each_offset(n, q.M, [&](const Index& o) {
    const double r = offset_norm(o, n, q.h);
    if (r == 0.0) return;
    Index j = base;
    for (int d = 0; d < n; ++d) {
      j[d] += o[d];
      if (j[d] < 0 || j[d] >= q.N) {
        if (!q.periodic) return;
        j[d] = ((j[d] % q.N) + q.N) % q.N;
      }
    }
    const double v = uc[g.flat_index(j)];
    if (v == 0.0) return;
    const double w = params.mu * hn * std::pow(r, -n - params.alpha - 1.0) * q.taper(r) * v;
    for (int d = 0; d < n; ++d) out[d] += w * o[d] * q.h;
  });
  for (int d = 0; d < n; ++d) {
    const double du = (-shifted(g, uc, base, d, 2) + 8.0 * shifted(g, uc, base, d, 1) -
                       8.0 * shifted(g, uc, base, d, -1) + shifted(g, uc, base, d, -2)) /
                      (12.0 * q.h);
    out[d] += kappa * du;
  }
  return out;
}

}  // namespace fraccv
