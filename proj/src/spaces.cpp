#include "fraccv/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fraccv {

namespace {

constexpr double kPi = std::numbers::pi;
using boost::math::quadrature::gauss_kronrod;

double gk(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-10);
}

double euclid(const GridSpec& g, std::size_t a, std::size_t b) {
  auto xa = g.point(a);
  auto xb = g.point(b);
  double s = 0.0;
  for (int d = 0; d < g.dim; ++d) s += (xa[d] - xb[d]) * (xa[d] - xb[d]);
  return std::sqrt(s);
}

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

ComplementarySpec ComplementarySpec::make(Mask omega, SampledField g, Mask omega_prime) {
  if (!(omega.grid == g.grid()) || !(omega_prime.grid == g.grid()))
    throw Error("complementary spec: omega, omega_prime and g must share one grid");
  if (omega.inside.size() != g.num_points() || omega_prime.inside.size() != g.num_points())
    throw Error("complementary spec: mask size does not match the grid");
  g.validate_finite();
  if (omega.count() == 0) throw Error("complementary spec: omega is empty");
  const auto& grid = g.grid();
  const int N = grid.points_per_axis;
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    if (!omega.contains(i)) continue;
    auto idx = grid.multi_index(i);
    // Every node within two cells of omega must lie in omega_prime.
    std::array<int, 3> o{0, 0, 0};
    const int w = 5;
    int total = 1;
    for (int d = 0; d < grid.dim; ++d) total *= w;
    for (int t = 0; t < total; ++t) {
      int rest = t;
      bool inside_grid = true;
      std::array<int, 3> j = idx;
      for (int d = grid.dim - 1; d >= 0; --d) {
        o[d] = rest % w - 2;
        rest /= w;
        j[d] += o[d];
        if (j[d] < 0 || j[d] >= N) inside_grid = false;
      }
      if (!inside_grid) continue;
      if (!omega_prime.contains(grid.flat_index(j)))
        throw Error("complementary spec: omega_prime must contain omega with a two-cell margin");
    }
  }
  return ComplementarySpec{std::move(omega), std::move(g), std::move(omega_prime)};
}

ComplementarySpec ComplementarySpec::with_margin(Mask omega, SampledField g, double margin) {
  const auto& grid = g.grid();
  const int cells = std::max(2, static_cast<int>(std::ceil(margin / grid.spacing - 1e-12)));
  Mask prime{grid, std::vector<std::uint8_t>(grid.num_points(), 0)};
  const int N = grid.points_per_axis;
  const int w = 2 * cells + 1;
  int total = 1;
  for (int d = 0; d < grid.dim; ++d) total *= w;
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    if (!omega.contains(i)) continue;
    const auto idx = grid.multi_index(i);
    for (int t = 0; t < total; ++t) {
      int rest = t;
      bool inside_grid = true;
      std::array<int, 3> j = idx;
      for (int d = grid.dim - 1; d >= 0; --d) {
        j[d] += rest % w - cells;
        rest /= w;
        if (j[d] < 0 || j[d] >= N) inside_grid = false;
      }
      if (inside_grid) prime.inside[grid.flat_index(j)] = 1;
    }
  }
  return make(std::move(omega), std::move(g), std::move(prime));
}

SampledField project_complementary(const SampledField& u, const ComplementarySpec& spec) {
  require_compatible(u, spec.g, "project_complementary");
  SampledField out = u;
  for (std::size_t i = 0; i < u.num_points(); ++i)
    if (!spec.omega.contains(i))
      for (int c = 0; c < u.components(); ++c) out(i, c) = spec.g(i, c);
  if (u.decay() != spec.g.decay()) out.set_decay(spec.g.decay());
  return out;
}

double even_template(double t) {
  const double s = 4.0 * t;
  return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
}

double odd_template(double t) { return t * even_template(t); }

double template_constant(int n, double alpha, double rho) {
  if (n < 1 || n > 3) throw Error("template_constant: dimension must be 1, 2 or 3");
  const double mu = gradient_constant(n, alpha);
  auto psi = [rho](double y) { return odd_template(y / (4.0 * rho)); };
  auto theta = [rho](double y) { return even_template(y / (4.0 * rho)); };
  // Angular integral of omega_1 psi(r omega_1) prod theta(r omega_e).
  auto angular = [&](double r) -> double {
    if (n == 1) return 2.0 * psi(r);
    if (n == 2)
      return 4.0 * gk([&](double p) { return std::cos(p) * psi(r * std::cos(p)) * theta(r * std::sin(p)); },
                      0.0, 0.5 * kPi);
    return 8.0 * gk(
                     [&](double t) {
                       const double ct = std::cos(t), st = std::sin(t);
                       return ct * psi(r * ct) * st *
                              gk([&](double p) {
                                   return theta(r * st * std::cos(p)) * theta(r * st * std::sin(p));
                                 },
                                 0.0, 0.5 * kPi);
                     },
                     0.0, 0.5 * kPi);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  const double R = std::sqrt(static_cast<double>(n)) * rho;
  const double integral =
      ts.integrate(
          [&](double r) { return r > 0.0 ? angular(r) / r * std::pow(r, -alpha) : 0.0; }, 0.0, R);
  return mu * integral;
}

ConstructionResult construct_prescribed(std::size_t x0, const std::vector<double>& z,
                                        const std::vector<double>& A,
                                        const ComplementarySpec& spec,
                                        const FractionalParams& params,
                                        const ConstructionOptions& options) {
  const auto& grid = spec.g.grid();
  const int n = grid.dim;
  if (params.dim != n) throw Error("construct_prescribed: parameter dimension differs from grid");
  const int m = static_cast<int>(z.size());
  if (m < 1) throw Error("construct_prescribed: z must have at least one component");
  if (static_cast<int>(A.size()) != m * n)
    throw Error("construct_prescribed: A must have m x n entries");
  if (x0 >= grid.num_points() || !spec.omega.contains(x0))
    throw Error("construct_prescribed: x0 must be a node inside Omega");

  // Distance from x0 to the nearest node outside Omega (or to the box edge).
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.num_points(); ++i)
    if (!spec.omega.contains(i)) dist = std::min(dist, euclid(grid, i, x0));
  if (grid.kind == GridKind::TruncatedBox) {
    auto x = grid.point(x0);
    for (int d = 0; d < n; ++d)
      dist = std::min({dist, x[d] + grid.half_extent, grid.half_extent - x[d]});
  }
  double rho = options.support_radius > 0.0 ? options.support_radius : 0.5 * dist;
  // The product templates fill the cube of half-width rho.
  if (std::sqrt(static_cast<double>(n)) * rho >= dist)
    throw Error("construct_prescribed: x0 is too close to the boundary of Omega for support radius " +
                std::to_string(rho));
  if (rho < 4.0 * grid.spacing)
    throw Error("construct_prescribed: support radius is below four grid cells; refine the grid");

  const double beta = template_constant(n, params.alpha, rho);
  if (!(beta > 0.0)) throw Error("construct_prescribed: template constant is not positive");

  const auto xc = grid.point(x0);
  SampledField phi(grid, m, DecayClass::CompactSupport);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    auto x = grid.point(i);
    std::array<double, 3> y{0, 0, 0};
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      y[d] = x[d] - xc[d];
      r2 += y[d] * y[d];
    }
    const double radial = even_template(std::sqrt(r2) / (4.0 * rho)) / even_template(0.0);
    for (int c = 0; c < m; ++c) {
      double v = z[c] * radial;
      for (int d = 0; d < n; ++d) {
        if (A[c * n + d] == 0.0) continue;
        double t = odd_template(y[d] / (4.0 * rho));
        for (int e = 0; e < n; ++e)
          if (e != d) t *= even_template(y[e] / (4.0 * rho));
        v += A[c * n + d] / beta * t;
      }
      phi(i, c) = v;
    }
  }

  ConstructionResult res;
  res.beta = beta;
  res.support_radius = rho;
  res.achieved_value.resize(m);
  res.achieved_gradient.resize(m * n);
  for (int c = 0; c < m; ++c) {
    res.achieved_value[c] = phi(x0, c);
    auto g = fractional_gradient_at(phi.component(c), x0, params);
    for (int d = 0; d < n; ++d) res.achieved_gradient[c * n + d] = g[d];
  }
  std::vector<double> dz(m), dA(m * n);
  for (int c = 0; c < m; ++c) dz[c] = res.achieved_value[c] - z[c];
  for (int k = 0; k < m * n; ++k) dA[k] = res.achieved_gradient[k] - A[k];
  const double rz = vec_norm(dz) / std::max(1.0, vec_norm(z));
  const double rA = vec_norm(dA) / std::max(1.0, vec_norm(A));
  Digest digest;
  digest.add(spec.g).add(params).add(static_cast<double>(x0)).add(rho);
  for (double v : z) digest.add(v);
  for (double v : A) digest.add(v);
  res.report = make_report("prescribed-value", std::max(rz, rA), options.tolerance, digest.hex(),
                           {{"beta", beta},
                            {"support_radius", rho},
                            {"value_residual", rz},
                            {"gradient_residual", rA}});
  res.phi = std::move(phi);
  return res;
}

SampledField prescribed_with_datum(std::size_t x0, const std::vector<double>& z,
                                   const std::vector<double>& A, const ComplementarySpec& spec,
                                   const FractionalParams& params,
                                   const ConstructionOptions& options) {
  const auto& g = spec.g;
  const int n = g.grid().dim;
  const int m = g.components();
  if (static_cast<int>(z.size()) != m) throw Error("prescribed_with_datum: z must have m components");
  std::vector<double> dz(m), dA(A);
  for (int c = 0; c < m; ++c) {
    dz[c] = z[c] - g(x0, c);
    auto gg = fractional_gradient_at(g.component(c), x0, params);
    for (int d = 0; d < n; ++d) dA[c * n + d] -= gg[d];
  }
  const bool trivial = std::all_of(dz.begin(), dz.end(), [](double v) { return v == 0.0; }) &&
                       std::all_of(dA.begin(), dA.end(), [](double v) { return v == 0.0; });
  if (trivial) return g;
  auto built = construct_prescribed(x0, dz, dA, spec, params, options);
  auto u = g + built.phi;
  u.set_decay(g.decay());
  return u;
}

OutsideDiagnostic strong_outside_diagnostic(const std::vector<SampledField>& sequence,
                                            const ComplementarySpec& spec,
                                            const FractionalParams& params,
                                            const OperatorBackend& backend,
                                            std::size_t calibration,
                                            const std::optional<SampledField>& limit,
                                            const std::vector<double>& weights) {
  if (sequence.empty()) throw Error("strong_outside_diagnostic: empty sequence");
  if (calibration == 0 || calibration > sequence.size())
    throw Error("strong_outside_diagnostic: calibration count must be in 1..sequence size");
  if (!weights.empty() && weights.size() != sequence.size())
    throw Error("strong_outside_diagnostic: one weight per sequence member expected");
  const Mask outside = spec.omega_prime.complement();
  OutsideDiagnostic out;
  Digest digest;
  digest.add(params).add(backend);
  for (std::size_t j = 0; j < sequence.size(); ++j) {
    const auto& u = sequence[j];
    for (std::size_t i = 0; i < u.num_points(); ++i)
      for (int c = 0; c < u.components(); ++c)
        if (!spec.omega.contains(i) && u(i, c) != 0.0)
          throw Error("strong_outside_diagnostic: sequence member does not vanish outside Omega");
    SampledField w = limit ? u - *limit : u;
    w.set_decay(DecayClass::CompactSupport);
    digest.add(u);
    out.sizes.push_back(weights.empty() ? lp_norm(w, params.p) : weights[j]);
    out.tails.push_back(w.is_zero() ? 0.0
                                    : lp_norm(fractional_gradient(w, params, backend).field,
                                              params.p, &outside));
  }
  auto ratio = [&](std::size_t j) {
    return out.sizes[j] > 0.0 ? out.tails[j] / out.sizes[j] : (out.tails[j] > 0.0 ? INFINITY : 0.0);
  };
  for (std::size_t j = 0; j < calibration; ++j) out.fitted_constant = std::max(out.fitted_constant, ratio(j));
  double worst = 0.0;
  for (std::size_t j = calibration; j < sequence.size(); ++j) {
    const double bound = out.fitted_constant * out.sizes[j];
    const double excess = out.tails[j] - bound;
    if (excess > 0.0) worst = std::max(worst, bound > 0.0 ? excess / bound : INFINITY);
  }
  out.report = make_report("outside-gradient-tail", worst, 1e-12, digest.hex(),
                           {{"fitted_constant", out.fitted_constant},
                            {"sizes", out.sizes},
                            {"tails", out.tails},
                            {"calibration", calibration}});
  return out;
}

}  // namespace fraccv
