#include "fraccv/calculus_id.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace fraccv {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : num; }

void require_scalar(const SampledField& f, const char* what) {
  if (f.components() != 1) throw Error(std::string(what) + " expects a scalar field");
}

// Backend-consistent classical gradient, fractional gradient and fractional
// Laplacian of a field, evaluated on a box wide enough that the algebraic
// tails of the intermediate fields are not cut off.
struct WideSetup {
  GridSpec original;
  int factor = 1;
};

WideSetup wide_setup(const GridSpec& g) {
  return {g, g.kind == GridKind::PeriodicCell ? 1 : (g.dim == 1 ? 4 : 2)};
}

SampledField widen(const SampledField& u, const WideSetup& w) {
  return w.factor == 1 ? u : embed_in_wider_box(u, w.factor);
}

SampledField narrow(const SampledField& u, const WideSetup& w) {
  return w.factor == 1 ? u : restrict_to_box(u, w.original);
}

SampledField with_decay(SampledField f, DecayClass d) {
  f.set_decay(d);
  return f;
}

double lp(const SampledField& u, double p) { return lp_norm(u, p); }

}  // namespace

IdentityReport make_report(std::string name, double residual, double tolerance, std::string digest,
                           nlohmann::json details) {
  IdentityReport r;
  r.identity_name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.passed = residual <= tolerance;  // false for NaN
  r.inputs_digest = std::move(digest);
  r.details = std::move(details);
  return r;
}

double default_tolerance(const OperatorBackend& backend) {
  return backend.kind == BackendKind::Spectral ? 1e-10 : 1e-3;
}

void Digest::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 1099511628211ull;
  }
}

Digest& Digest::add(double v) {
  bytes(&v, sizeof v);
  return *this;
}

Digest& Digest::add(const std::string& s) {
  bytes(s.data(), s.size());
  return *this;
}

Digest& Digest::add(const SampledField& f) {
  const auto& g = f.grid();
  add(static_cast<double>(g.dim)).add(static_cast<double>(g.points_per_axis));
  add(g.half_extent).add(static_cast<double>(static_cast<int>(g.kind)));
  add(static_cast<double>(f.components())).add(static_cast<double>(static_cast<int>(f.decay())));
  bytes(f.values().data(), f.values().size() * sizeof(double));
  return *this;
}

Digest& Digest::add(const OperatorBackend& b) {
  add(static_cast<double>(static_cast<int>(b.kind))).add(b.singularity_radius).add(b.far_cutoff);
  return add(static_cast<double>(b.periodic_images)).add(static_cast<double>(b.padding_factor));
}

Digest& Digest::add(const FractionalParams& p) {
  return add(static_cast<double>(p.dim)).add(p.alpha).add(p.p);
}

std::string Digest::hex() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h_;
  return os.str();
}

SampledField embed_in_wider_box(const SampledField& u, int factor) {
  const auto& g = u.grid();
  if (g.kind != GridKind::TruncatedBox) throw Error("embed_in_wider_box needs a truncated box");
  if (factor < 1) throw Error("embedding factor must be >= 1");
  auto wg = box_grid(g.dim, g.half_extent * factor, g.points_per_axis * factor);
  SampledField out(wg, u.components(), u.decay());
  const int shift = (factor - 1) * g.points_per_axis / 2;
  for (std::size_t i = 0; i < u.num_points(); ++i) {
    auto idx = g.multi_index(i);
    for (int d = 0; d < g.dim; ++d) idx[d] += shift;
    const std::size_t j = wg.flat_index(idx);
    for (int c = 0; c < u.components(); ++c) out(j, c) = u(i, c);
  }
  return out;
}

SampledField restrict_to_box(const SampledField& wide, const GridSpec& original) {
  const auto& wg = wide.grid();
  const int factor = wg.points_per_axis / original.points_per_axis;
  const int shift = (factor - 1) * original.points_per_axis / 2;
  SampledField out(original, wide.components(), wide.decay());
  for (std::size_t i = 0; i < out.num_points(); ++i) {
    auto idx = original.multi_index(i);
    for (int d = 0; d < original.dim; ++d) idx[d] += shift;
    const std::size_t j = wg.flat_index(idx);
    for (int c = 0; c < out.components(); ++c) out(i, c) = wide(j, c);
  }
  return out;
}

IdentityReport check_duality_gradient(const SampledField& phi, const SampledField& psi,
                                      const FractionalParams& params, const OperatorBackend& backend,
                                      double tolerance) {
  require_scalar(phi, "check_duality_gradient");
  require_scalar(psi, "check_duality_gradient");
  require_compatible(phi, psi, "check_duality_gradient");
  const int n = phi.grid().dim;
  auto gphi = fractional_gradient(phi, params, backend).field;
  auto gpsi = fractional_gradient(psi, params, backend).field;
  const double hn = phi.grid().cell_volume();
  double worst = 0.0;
  nlohmann::json lhs = nlohmann::json::array(), rhs = nlohmann::json::array();
  for (int d = 0; d < n; ++d) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < phi.num_points(); ++i) {
      a += gphi(i, d) * psi(i);
      b += phi(i) * gpsi(i, d);
    }
    a *= hn;
    b *= hn;
    lhs.push_back(a);
    rhs.push_back(-b);
    worst = std::max(worst, std::abs(a + b));
  }
  const double scale = lp(gphi, 2) * lp(psi, 2) + lp(phi, 2) * lp(gpsi, 2);
  const double tol = tolerance >= 0.0 ? tolerance : default_tolerance(backend);
  return make_report("gradient-duality", safe_ratio(worst, scale), tol,
                     Digest().add(phi).add(psi).add(params).add(backend).hex(),
                     {{"lhs", lhs}, {"rhs", rhs}});
}

IdentityReport check_duality_laplacian(const SampledField& phi, const SampledField& psi, double s,
                                       const OperatorBackend& backend, double tolerance) {
  require_scalar(phi, "check_duality_laplacian");
  require_scalar(psi, "check_duality_laplacian");
  require_compatible(phi, psi, "check_duality_laplacian");
  auto lphi = fractional_laplacian(phi, s, backend).field;
  auto lpsi = fractional_laplacian(psi, s, backend).field;
  const double a = inner_product(lphi, psi);
  const double b = inner_product(phi, lpsi);
  const double scale = lp(lphi, 2) * lp(psi, 2) + lp(phi, 2) * lp(lpsi, 2);
  const double tol = tolerance >= 0.0 ? tolerance : default_tolerance(backend);
  return make_report("laplacian-duality", safe_ratio(std::abs(a - b), scale), tol,
                     Digest().add(phi).add(psi).add(s).add(backend).hex(), {{"lhs", a}, {"rhs", b}});
}

IdentityReport check_composition(const SampledField& phi, double alpha, const OperatorBackend& backend,
                                 double tolerance) {
  const auto& g = phi.grid();
  const auto params = compute_constants(g.dim, alpha);
  const double s = 0.5 * (1.0 - alpha);
  const auto w = wide_setup(g);
  auto wphi = widen(phi, w);
  auto grad = narrow(discrete_gradient(wphi, backend), w);
  auto ga = with_decay(fractional_gradient(wphi, params, backend).field, DecayClass::SchwartzLike);
  auto first = narrow(fractional_laplacian(ga, s, backend).field, w);
  auto ls = with_decay(fractional_laplacian(wphi, s, backend).field, DecayClass::SchwartzLike);
  auto second = narrow(fractional_gradient(ls, params, backend).field, w);
  const double scale = lp(grad, 2);
  const double r1 = safe_ratio(lp(first - grad, 2), scale);
  const double r2 = safe_ratio(lp(second - grad, 2), scale);
  const double tol =
      tolerance >= 0.0 ? tolerance : (backend.kind == BackendKind::Spectral ? 1e-6 : 1e-3);
  return make_report("composition", std::max(r1, r2), tol,
                     Digest().add(phi).add(alpha).add(backend).hex(),
                     {{"laplacian_of_gradient", r1}, {"gradient_of_laplacian", r2}});
}

std::vector<double> alpha_continuation(const SampledField& phi, const std::vector<double>& alphas,
                                       const OperatorBackend& backend) {
  auto grad = discrete_gradient(phi, backend);
  std::vector<double> out;
  for (double a : alphas) {
    auto ga = fractional_gradient(phi, compute_constants(phi.grid().dim, a), backend).field;
    out.push_back(safe_ratio(lp(ga - grad, 2), lp(grad, 2)));
  }
  return out;
}

IdentityReport check_leibniz(const SampledField& u, const SampledField& psi,
                             const FractionalParams& params, const OperatorBackend& backend,
                             double tolerance) {
  require_scalar(psi, "check_leibniz (psi)");
  if (!(psi.grid() == u.grid())) throw Error("check_leibniz: u and psi live on different grids");
  const int n = u.grid().dim;
  const int m = u.components();
  const std::string digest = Digest().add(u).add(psi).add(params).add(backend).hex();
  const double tol = tolerance >= 0.0 ? tolerance : 1e-3;

  auto pu = multiply(psi, u);
  if (u.decay() != DecayClass::Unknown && pu.decay() == DecayClass::Unknown) pu.set_decay(u.decay());
  auto lhs = fractional_gradient(pu, params, backend).field;
  auto term_u = multiply(psi, fractional_gradient(u, params, backend).field);

  const auto pv = psi.values();
  const bool constant = std::all_of(pv.begin(), pv.end(), [&](double v) { return v == pv[0]; });
  SampledField term_psi(u.grid(), m * n);
  SampledField nl(u.grid(), m * n);
  if (!constant) {
    auto gpsi = fractional_gradient(psi, params, backend).field;
    for (std::size_t i = 0; i < u.num_points(); ++i)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < n; ++d) term_psi(i, c * n + d) = u(i, c) * gpsi(i, d);
    nl = nonlocal_leibniz_remainder(u, psi, params, backend).field;
  }
  auto rhs = term_u + term_psi + nl;
  const double scale = std::max(lp(lhs, 2), lp(term_u, 2) + lp(term_psi, 2) + lp(nl, 2));
  return make_report("leibniz", safe_ratio(lp(lhs - rhs, 2), scale), tol, digest,
                     {{"constant_cutoff", constant}});
}

CutoffEstimateResult check_cutoff_estimate(const CutoffEstimateSetup& setup,
                                           const FractionalParams& params,
                                           const OperatorBackend& backend, double tolerance) {
  if (setup.ks.size() < 2) throw Error("check_cutoff_estimate needs at least two values of k");
  std::vector<double> dil = setup.dilations;
  if (dil.empty())
    for (int j = -4; j <= 12; ++j) dil.push_back(std::pow(2.0, 0.5 * j));
  const auto& g = setup.grid;
  const int n = g.dim;
  CutoffEstimateResult res;
  Digest digest;
  digest.add(params).add(backend);
  for (double k : setup.ks) {
    auto psi = SampledField::scalar(
        g,
        [&](std::span<const double> x) {
          std::array<double, 3> y{};
          for (int d = 0; d < n; ++d) y[d] = x[d] / k;
          return setup.cutoff(std::span<const double>(y.data(), n));
        },
        DecayClass::Unknown);
    double best = 0.0, best_lambda = 0.0;
    for (double lambda : dil) {
      auto u = SampledField::scalar(
          g,
          [&](std::span<const double> x) {
            std::array<double, 3> y{};
            for (int d = 0; d < n; ++d) y[d] = x[d] / lambda;
            return setup.profile(std::span<const double>(y.data(), n));
          },
          DecayClass::SchwartzLike);
      auto pu = multiply(psi, u);
      pu.set_decay(DecayClass::SchwartzLike);
      auto comm = fractional_gradient(pu, params, backend).field -
                  multiply(psi, fractional_gradient(u, params, backend).field);
      const double ratio = safe_ratio(lp(comm, params.p), lp(u, params.p));
      if (ratio > best) {
        best = ratio;
        best_lambda = lambda;
      }
      digest.add(lambda);
    }
    digest.add(k);
    res.ks.push_back(k);
    res.constants.push_back(best);
    res.best_dilation.push_back(best_lambda);
  }
  // Least-squares slope of log C(k) against log k.
  const double m = static_cast<double>(res.ks.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < res.ks.size(); ++i) {
    const double x = std::log(res.ks[i]), y = std::log(res.constants[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  res.fitted_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  res.fitted_constant = std::exp((sy - res.fitted_exponent * sx) / m);
  const bool interior =
      std::all_of(res.best_dilation.begin(), res.best_dilation.end(),
                  [&](double l) { return l != dil.front() && l != dil.back(); });
  res.report = make_report("cutoff-commutator-rate", std::abs(res.fitted_exponent + params.alpha),
                           tolerance, digest.hex(),
                           {{"ks", res.ks},
                            {"constants", res.constants},
                            {"best_dilation", res.best_dilation},
                            {"fitted_exponent", res.fitted_exponent},
                            {"fitted_constant", res.fitted_constant},
                            {"maximiser_interior", interior}});
  return res;
}

IdentityReport check_potential_lift(const SampledField& u, const FractionalParams& params,
                                    double tolerance) {
  const auto& g = u.grid();
  if (g.kind != GridKind::TruncatedBox || u.decay() != DecayClass::CompactSupport)
    throw Error("check_potential_lift needs a compactly supported field on a truncated box");
  const auto b = OperatorBackend::quadrature();
  auto v = riesz_potential(u, 1.0 - params.alpha, b).field;
  auto dv = discrete_gradient(v, b);
  auto ga = fractional_gradient(u, params, b).field;
  auto inner = Mask::from_predicate(g, [&](std::span<const double> x) {
    for (int d = 0; d < g.dim; ++d)
      if (std::abs(x[d]) > 0.5 * g.half_extent) return false;
    return true;
  });
  const double r = safe_ratio(lp_norm(dv - ga, 2, &inner), lp_norm(ga, 2, &inner));
  return make_report("potential-lift", r, tolerance, Digest().add(u).add(params).hex());
}

IdentityReport check_laplacian_push(const SampledField& v, const FractionalParams& params,
                                    const OperatorBackend& backend, double tolerance) {
  const auto w = wide_setup(v.grid());
  auto wv = widen(v, w);
  auto u = with_decay(fractional_laplacian(wv, 0.5 * (1.0 - params.alpha), backend).field,
                      DecayClass::SchwartzLike);
  auto gu = narrow(fractional_gradient(u, params, backend).field, w);
  auto dv = narrow(discrete_gradient(wv, backend), w);
  const double tol =
      tolerance >= 0.0 ? tolerance : (backend.kind == BackendKind::Spectral ? 1e-6 : 1e-3);
  return make_report("laplacian-push", safe_ratio(lp(gu - dv, 2), lp(dv, 2)), tol,
                     Digest().add(v).add(params).add(backend).hex());
}

InterpolationFit fit_interpolation_bound(const std::vector<SampledField>& calibration,
                                         const std::vector<SampledField>& heldout,
                                         const FractionalParams& params,
                                         const OperatorBackend& backend, double exponent_v,
                                         double spread) {
  if (calibration.empty() || heldout.empty())
    throw Error("fit_interpolation_bound needs calibration and held-out fields");
  InterpolationFit fit;
  fit.exponent_v = exponent_v;
  Digest digest;
  digest.add(params).add(backend).add(exponent_v);
  auto ratio = [&](const SampledField& v) {
    digest.add(v);
    const auto w = wide_setup(v.grid());
    auto wv = widen(v, w);
    auto u = fractional_laplacian(wv, 0.5 * (1.0 - params.alpha), backend).field;
    const double nv = lp(v, params.p);
    const double ng = lp(discrete_gradient(v, backend), params.p);
    if (nv == 0.0 || ng == 0.0) throw Error("fit_interpolation_bound: zero field in family");
    return lp(u, params.p) / (std::pow(nv, exponent_v) * std::pow(ng, 1.0 - exponent_v));
  };
  for (const auto& v : calibration) fit.ratios_calibration.push_back(ratio(v));
  for (const auto& v : heldout) fit.ratios_heldout.push_back(ratio(v));
  fit.fitted_constant = *std::max_element(fit.ratios_calibration.begin(), fit.ratios_calibration.end());
  double worst = 0.0;
  for (double r : fit.ratios_heldout)
    worst = std::max(worst, std::abs(std::log(r / fit.fitted_constant)));
  // Report the spread as a ratio-1 so it compares directly with `spread`.
  fit.report = make_report("interpolation-bound", std::expm1(worst), spread, digest.hex(),
                           {{"exponent_v", exponent_v},
                            {"fitted_constant", fit.fitted_constant},
                            {"calibration", fit.ratios_calibration},
                            {"heldout", fit.ratios_heldout}});
  return fit;
}

IdentityReport check_periodic_mean_zero(const SampledField& u_periodic, const FractionalParams& params,
                                        const OperatorBackend& backend, double tolerance) {
  if (u_periodic.grid().kind != GridKind::PeriodicCell)
    throw Error("check_periodic_mean_zero needs a field on the periodic cell");
  auto ga = fractional_gradient(u_periodic, params, backend).field;
  auto mean = integral(ga);
  double mnorm = 0.0;
  for (double v : mean) mnorm += v * v;
  mnorm = std::sqrt(mnorm);
  return make_report("periodic-mean-zero", safe_ratio(mnorm, lp(ga, 1.0)), tolerance,
                     Digest().add(u_periodic).add(params).add(backend).hex(), {{"cell_mean", mean}});
}

std::vector<double> cell_mean_of_gradient(const SampledField& u, const FractionalParams& params,
                                          const OperatorBackend& backend, double lo) {
  const auto& g = u.grid();
  auto ga = fractional_gradient(u, params, backend).field;
  auto cell = Mask::from_predicate(g, [&](std::span<const double> x) {
    for (int d = 0; d < g.dim; ++d)
      if (x[d] < lo || x[d] >= lo + 1.0) return false;
    return true;
  });
  return integral(ga, &cell);
}

double poincare_ratio(const SampledField& u, const FractionalParams& params, const Mask& omega,
                      const OperatorBackend& backend) {
  for (std::size_t i = 0; i < u.num_points(); ++i)
    for (int c = 0; c < u.components(); ++c)
      if (!omega.contains(i) && u(i, c) != 0.0)
        throw Error("poincare sample does not vanish outside Omega");
  if (u.is_zero()) throw Error("poincare sample is identically zero");
  auto ga = fractional_gradient(u, params, backend).field;
  return lp_norm(u, params.p, &omega) / lp_norm(ga, params.p);
}

IdentityReport check_poincare(const std::vector<SampledField>& samples, const FractionalParams& params,
                              const Mask& omega, const OperatorBackend& backend, double tolerance) {
  if (samples.size() < 2) throw Error("check_poincare needs at least two samples");
  Digest digest;
  digest.add(params).add(backend);
  std::vector<double> ratios;
  for (const auto& u : samples) {
    ratios.push_back(poincare_ratio(u, params, omega, backend));
    digest.add(u);
  }
  const std::size_t half = (samples.size() + 1) / 2;
  const double c_half = *std::max_element(ratios.begin(), ratios.begin() + half);
  const double c_full = *std::max_element(ratios.begin(), ratios.end());
  const bool finite = std::isfinite(c_full);
  const double residual = finite ? (c_full - c_half) / c_full : INFINITY;
  return make_report("poincare", residual, tolerance, digest.hex(),
                     {{"constant", c_full}, {"constant_half", c_half}, {"samples", samples.size()}});
}

nlohmann::json to_json(const IdentityReport& r) {
  return {{"identity_name", r.identity_name}, {"residual", r.residual},
          {"tolerance", r.tolerance},         {"passed", r.passed},
          {"inputs_digest", r.inputs_digest}, {"details", r.details}};
}

void write_reports_jsonl(std::ostream& os, const std::vector<IdentityReport>& reports) {
  for (const auto& r : reports) os << to_json(r).dump() << '\n';
}

std::string summary_table(const std::vector<IdentityReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "identity" << std::right << std::setw(14) << "residual"
     << std::setw(12) << "tolerance" << "  result\n";
  for (const auto& r : reports) {
    os << std::left << std::setw(28) << r.identity_name << std::right << std::scientific
       << std::setprecision(3) << std::setw(14) << r.residual << std::setw(12) << r.tolerance
       << "  " << (r.passed ? "PASS" : "FAIL") << '\n';
  }
  return os.str();
}

}  // namespace fraccv
