#include "fraccv/varsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fraccv {

namespace {

double frob(std::span<const double> A) {
  double s = 0.0;
  for (double a : A) s += a * a;
  return std::sqrt(s);
}

double vnorm_p(std::span<const double> v, double p) { return std::pow(frob(v), p); }

// h^n-weighted inner product over Omega only.
double omega_dot(const SampledField& a, const SampledField& b, const Mask& omega) {
  double s = 0.0;
  const int m = a.components();
  for (std::size_t i = 0; i < a.num_points(); ++i)
    if (omega.contains(i))
      for (int c = 0; c < m; ++c) s += a(i, c) * b(i, c);
  return s * a.grid().cell_volume();
}

struct Pointwise {
  SampledField w;  // projected field
  SampledField G;  // grad_a w
  double truncation = 0.0;
};

Pointwise pointwise(const SampledField& u, const ComplementarySpec& spec, const FractionalParams& params,
                    const OperatorBackend& backend) {
  require_compatible(u, spec.g, "varsolve");
  if (params.dim != u.grid().dim) throw Error("varsolve: parameter dimension differs from grid");
  auto w = project_complementary(u, spec);
  auto r = fractional_gradient(w, params, backend);
  return {std::move(w), std::move(r.field), r.truncation_estimate};
}

void require_scalar(const SampledField& u, const char* what) {
  if (u.grid().dim != 1 || u.components() != 1)
    throw Error(std::string(what) + ": only one-dimensional scalar problems are supported");
}

}  // namespace

std::vector<std::string> integrand_names() {
  return {"quadratic", "pinched-nonconvex-1d", "double-well-unpinched"};
}

Integrand make_integrand(const std::string& name) {
  Integrand f;
  f.name = name;
  if (name == "quadratic") {
    f.eval = [](auto, auto, std::span<const double> A) { return frob(A) * frob(A); };
    f.deriv_A = [](auto, auto, std::span<const double> A, std::span<double> out) {
      for (std::size_t k = 0; k < A.size(); ++k) out[k] = 2.0 * A[k];
    };
    f.C = 1.0;
    f.c = 1.0;
    f.convex = true;
  } else if (name == "pinched-nonconvex-1d") {
    f.eval = [](auto, auto, std::span<const double> A) {
      const double r = frob(A);
      return std::min(2.0 * r * r, r * r + (r - 1.0) * (r - 1.0));
    };
    f.deriv_A = [](auto, auto, std::span<const double> A, std::span<double> out) {
      const double r = frob(A);
      const double k = r <= 0.5 ? 4.0 : 4.0 - 2.0 / r;
      for (std::size_t i = 0; i < A.size(); ++i) out[i] = k * A[i];
    };
    f.C = 2.0;
    f.c = 0.5;
  } else if (name == "double-well-unpinched") {
    f.eval = [](auto, auto, std::span<const double> A) {
      const double r2 = frob(A) * frob(A);
      return (r2 - 1.0) * (r2 - 1.0);
    };
    f.deriv_A = [](auto, auto, std::span<const double> A, std::span<double> out) {
      const double r2 = frob(A) * frob(A);
      for (std::size_t i = 0; i < A.size(); ++i) out[i] = 4.0 * (r2 - 1.0) * A[i];
    };
    f.a = [](auto) { return 1.0; };
    f.C = 1.0;
    f.c = 0.0;
    f.p = 4.0;
  } else {
    std::string known;
    for (const auto& n : integrand_names()) known += (known.empty() ? "" : ", ") + n;
    throw Error("unknown integrand '" + name + "' (known: " + known + ")");
  }
  return f;
}

Integrand relaxed_integrand(const Integrand& f, const EnvelopeTable& table, const ComplementarySpec& spec) {
  if (table.m != 1 || table.n != 1) throw Error("relaxed_integrand: scalar envelope table required");
  Integrand r = f;
  r.name = f.name + "-relaxed";
  r.x_dependent = true;
  const GridSpec grid = spec.g.grid();
  const Mask omega = spec.omega;
  auto inside = [grid, omega](std::span<const double> x) { return omega.contains(grid.nearest_node(x)); };
  r.eval = [f, table, inside](std::span<const double> x, std::span<const double> z, std::span<const double> A) {
    return inside(x) ? table.interpolate(A[0]) : f.eval(x, z, A);
  };
  if (f.deriv_A)
    r.deriv_A = [f, table, inside](std::span<const double> x, std::span<const double> z,
                                   std::span<const double> A, std::span<double> out) {
      if (!inside(x)) return f.deriv_A(x, z, A, out);
      const double h = (table.max_sample() - table.min_sample()) / static_cast<double>(table.size() - 1);
      const double s = std::clamp((A[0] - table.min_sample()) / h, 0.0, static_cast<double>(table.size() - 2));
      const auto k = static_cast<std::size_t>(s);
      out[0] = (table.fqc[k + 1] - table.fqc[k]) / h;
    };
  r.convex = true;
  return r;
}

EnvelopeTable integrand_envelope(const Integrand& f, double a_min, double a_max, int samples) {
  const double zero[1] = {0.0};
  return convex_envelope_1d(
      [&f, &zero](double A) {
        const double a[1] = {A};
        return f.eval(zero, zero, a);
      },
      a_min, a_max, samples, Pinching{f.c, f.C, f.p});
}

EnergyEvaluation evaluate_functional(const SampledField& u, const Integrand& f, const ComplementarySpec& spec,
                                     const FractionalParams& params, const OperatorBackend& backend) {
  if (!f.eval) throw Error("evaluate_functional: integrand has no evaluation");
  auto pw = pointwise(u, spec, params, backend);
  const auto& grid = u.grid();
  const int m = u.components();
  const int mn = pw.G.components();
  EnergyEvaluation e;
  e.truncation_estimate = pw.truncation;
  e.min_gradient = std::numeric_limits<double>::infinity();
  e.max_gradient = -std::numeric_limits<double>::infinity();
  std::vector<double> z(m), A(mn);
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const auto x = grid.point(i);
    for (int c = 0; c < m; ++c) z[c] = pw.w(i, c);
    for (int k = 0; k < mn; ++k) {
      A[k] = pw.G(i, k);
      e.min_gradient = std::min(e.min_gradient, A[k]);
      e.max_gradient = std::max(e.max_gradient, A[k]);
    }
    const std::span<const double> xs(x.data(), grid.dim);
    const double v = f.eval(xs, z, A);
    if (!std::isfinite(v)) throw Error("evaluate_functional: integrand returned a non-finite value");
    const double upper = (f.a ? f.a(xs) : 0.0) + f.C * (vnorm_p(z, f.p) + vnorm_p(A, f.p));
    if (v < -1e-12 || v > upper * (1.0 + 1e-9) + 1e-12) e.growth_warning = true;
    sum += v;
  }
  e.energy = sum * grid.cell_volume();
  return e;
}

SampledField functional_gradient(const SampledField& u, const Integrand& f, const ComplementarySpec& spec,
                                 const FractionalParams& params, const OperatorBackend& backend) {
  if (!f.deriv_A) throw Error("functional_gradient: integrand '" + f.name + "' has no A-derivative");
  if (f.z_dependent && !f.deriv_z) throw Error("functional_gradient: integrand depends on z without a z-derivative");
  auto pw = pointwise(u, spec, params, backend);
  const auto& grid = u.grid();
  const int m = u.components();
  const int mn = pw.G.components();
  SampledField dA(grid, mn, DecayClass::Unknown);
  SampledField out(grid, m, DecayClass::Unknown);
  std::vector<double> z(m), A(mn), buf(std::max(m, mn));
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const auto x = grid.point(i);
    const std::span<const double> xs(x.data(), grid.dim);
    for (int c = 0; c < m; ++c) z[c] = pw.w(i, c);
    for (int k = 0; k < mn; ++k) A[k] = pw.G(i, k);
    f.deriv_A(xs, z, A, std::span<double>(buf.data(), mn));
    for (int k = 0; k < mn; ++k) dA(i, k) = buf[k];
    if (f.deriv_z && spec.omega.contains(i)) {
      f.deriv_z(xs, z, A, std::span<double>(buf.data(), m));
      for (int c = 0; c < m; ++c) out(i, c) = buf[c];
    }
  }
  const auto div = fractional_divergence(dA, params, backend);
  for (std::size_t i = 0; i < grid.num_points(); ++i)
    for (int c = 0; c < m; ++c) out(i, c) = spec.omega.contains(i) ? out(i, c) - div(i, c) : 0.0;
  return out;
}

MinimizeReport minimize(const Integrand& f, const ComplementarySpec& spec, const FractionalParams& params,
                        const OperatorBackend& backend, const MinimizeOptions& options) {
  MinimizeReport rep;
  SampledField u = project_complementary(options.initial ? *options.initial : spec.g, spec);
  auto energy = [&](const SampledField& v) { return evaluate_functional(v, f, spec, params, backend).energy; };
  double E = energy(u);
  auto grad = functional_gradient(u, f, spec, params, backend);
  double gg = omega_dot(grad, grad, spec.omega);
  rep.energy_trace.push_back(E);
  double step = options.initial_step;
  while (std::sqrt(gg) > options.tolerance && rep.iterations < options.max_iterations) {
    bool accepted = false;
    SampledField trial;
    double E_trial = E;
    for (int halving = 0; halving < 60; ++halving) {
      trial = u - step * grad;
      E_trial = energy(trial);
      if (E_trial <= E - options.armijo * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at round-off level
    auto grad_new = functional_gradient(trial, f, spec, params, backend);
    const auto s = trial - u;
    const auto y = grad_new - grad;
    const double sy = omega_dot(s, y, spec.omega);
    const double ss = omega_dot(s, s, spec.omega);
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : 2.0 * step;
    u = std::move(trial);
    grad = std::move(grad_new);
    gg = omega_dot(grad, grad, spec.omega);
    E = E_trial;
    rep.energy_trace.push_back(E);
    ++rep.iterations;
  }
  rep.optimality_residual = std::sqrt(gg);
  rep.converged = rep.optimality_residual <= options.tolerance;
  rep.energy = E;
  rep.minimizer = std::move(u);
  return rep;
}

double relaxed_energy(const SampledField& u, const Integrand& f, const EnvelopeTable& table,
                      const ComplementarySpec& spec, const FractionalParams& params,
                      const OperatorBackend& backend) {
  require_scalar(u, "relaxed_energy");
  auto pw = pointwise(u, spec, params, backend);
  const auto& grid = u.grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const double A[1] = {pw.G(i)};
    if (spec.omega.contains(i) && !f.convex) {
      sum += table.interpolate(A[0]);
    } else {
      const auto x = grid.point(i);
      const double z[1] = {pw.w(i)};
      sum += f.eval(std::span<const double>(x.data(), 1), z, A);
    }
  }
  return sum * grid.cell_volume();
}

SampledField interval_cutoff(const Mask& omega, double inner_fraction) {
  const auto& g = omega.grid;
  if (g.dim != 1) throw Error("interval_cutoff: one-dimensional grids only");
  if (!(inner_fraction > 0.0 && inner_fraction < 1.0)) throw Error("interval_cutoff: inner fraction must be in (0,1)");
  std::size_t first = g.num_points(), last = 0;
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (omega.contains(i)) {
      first = std::min(first, i);
      last = i;
    }
  if (first > last) throw Error("interval_cutoff: Omega is empty");
  if (omega.count() != last - first + 1) throw Error("interval_cutoff: Omega must be an interval");
  const double h = g.spacing;
  const double centre = 0.5 * (g.coordinate(static_cast<int>(first)) + g.coordinate(static_cast<int>(last)));
  const double R = 0.5 * (last - first) * h + h;  // the first nodes outside sit at distance R
  const double r = inner_fraction * R;
  auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  SampledField chi(g, 1, DecayClass::CompactSupport);
  for (std::size_t i = first; i <= last; ++i) {
    const double d = std::abs(g.coordinate(static_cast<int>(i)) - centre);
    if (d <= r) {
      chi(i) = 1.0;
    } else {
      const double s = (d - r) / (R - r);
      chi(i) = psi(1.0 - s) / (psi(1.0 - s) + psi(s));
    }
  }
  return chi;
}

MinimizingSequence minimizing_sequence(const SampledField& u, const Integrand& f, const EnvelopeTable& table,
                                       const ComplementarySpec& spec, const FractionalParams& params,
                                       const OperatorBackend& backend, const std::vector<int>& oscillations,
                                       const SequenceOptions& options) {
  require_scalar(u, "minimizing_sequence");
  const auto& grid = u.grid();
  MinimizingSequence seq;
  const auto base = project_complementary(u, spec);
  seq.base_energy = evaluate_functional(base, f, spec, params, backend).energy;
  seq.relaxed = relaxed_energy(base, f, table, spec, params, backend);
  seq.cutoff = interval_cutoff(spec.omega, options.inner_fraction);

  // grad (v_K - v) is built directly as a node-sampled step function, with v
  // = I_{1-a} u never formed: grad v = grad_a u, and the lift of v_K - v is
  // the least-squares inverse of grad_a applied to the step function.
  const auto G = fractional_gradient(base, params, backend).field;
  std::size_t i0 = grid.num_points(), i1 = 0;
  for (std::size_t i = 0; i < grid.num_points(); ++i)
    if (seq.cutoff(i) == 1.0) {
      i0 = std::min(i0, i);
      i1 = i;
    }
  if (i0 >= i1) throw Error("minimizing_sequence: the cut-off plateau has no interior");

  bool any_split = false;
  for (int K : oscillations) {
    if (K < 1) throw Error("minimizing_sequence: oscillation counts must be positive");
    const double span = static_cast<double>(i1 + 1 - i0);
    if (span / K < 2.0) throw Error("minimizing_sequence: K = " + std::to_string(K) + " needs at least two nodes per laminate period");
    SampledField step(grid, 1, DecayClass::CompactSupport);
    // Phase counts are chosen by error diffusion: each cell takes the count
    // that keeps the running sum of the step closest to zero, so both phases
    // sit exactly on contact points and v_K - v stays O(h) between cells.
    double carry = 0.0;
    std::vector<std::size_t> touched;
    for (int k = 0; k < K; ++k) {
      const auto a = i0 + static_cast<std::size_t>(std::lround(span * k / K));
      const auto b = i0 + static_cast<std::size_t>(std::lround(span * (k + 1) / K));
      const auto cells = static_cast<double>(b - a);
      double mean = 0.0;
      for (std::size_t i = a; i < b; ++i) mean += G(i);
      mean /= cells;
      const auto split = envelope_split(table, mean);
      if (split.affine) continue;
      any_split = true;
      const double exact = (carry + cells * (split.upper - mean)) / (split.upper - split.lower);
      const auto n_lower = static_cast<std::size_t>(std::clamp(std::round(exact), 0.0, cells));
      carry += static_cast<double>(n_lower) * split.lower + (cells - static_cast<double>(n_lower)) * split.upper -
               cells * mean;
      // Alternate the phase order between neighbouring cells.
      const bool lower_first = k % 2 == 0;
      for (std::size_t i = a; i < b; ++i) {
        const std::size_t j = lower_first ? i - a : b - 1 - i;
        step(i) = (j < n_lower ? split.lower : split.upper) - G(i);
        touched.push_back(i);
      }
    }
    // Spread the final remainder so v_K = v outside the laminated cells.
    for (auto i : touched) step(i) -= carry / static_cast<double>(touched.size());
    SampledField uk = base;
    if (!step.is_zero()) {
      const auto lifted = fractional_gradient_inverse(step, params, backend.padding_factor);
      for (std::size_t i = 0; i < grid.num_points(); ++i)
        if (spec.omega.contains(i)) uk(i) += seq.cutoff(i) * lifted(i);
    }
    const double e = evaluate_functional(uk, f, spec, params, backend).energy;
    seq.members.push_back({K, std::move(uk), e});
  }
  seq.degenerate = !any_split;
  return seq;
}

std::vector<IdentityReport> lsc_probe(const Integrand& f, const ComplementarySpec& spec,
                                      const FractionalParams& params, const OperatorBackend& backend,
                                      const std::vector<LscSequence>& sequences, double tolerance) {
  std::vector<IdentityReport> out;
  for (const auto& s : sequences) {
    if (s.members.empty()) throw Error("lsc_probe: sequence '" + s.name + "' is empty");
    const double E_lim = evaluate_functional(s.limit, f, spec, params, backend).energy;
    const auto G_lim = fractional_gradient(project_complementary(s.limit, spec), params, backend).field;
    const double M = 4.0 * std::max(lp_norm(G_lim, INFINITY), 1e-300);
    std::vector<double> energies;
    double share = 0.0;
    Digest digest;
    digest.add(s.limit).add(params).add(backend);
    for (const auto& u : s.members) {
      energies.push_back(evaluate_functional(u, f, spec, params, backend).energy);
      const auto G = fractional_gradient(project_complementary(u, spec), params, backend).field;
      double above = 0.0, total = 0.0;
      for (std::size_t i = 0; i < G.num_points(); ++i) {
        double r = 0.0;
        for (int k = 0; k < G.components(); ++k) r += G(i, k) * G(i, k);
        const double w = std::pow(std::sqrt(r), params.p);
        total += w;
        if (std::sqrt(r) > M) above += w;
      }
      if (total > 0.0) share = std::max(share, above / total);
      digest.add(u);
    }
    const double liminf = *std::min_element(energies.begin() + static_cast<long>(energies.size() / 2), energies.end());
    const double drop = E_lim - liminf;
    out.push_back(make_report("liminf-inequality", std::max(0.0, drop) / std::max(1.0, std::abs(E_lim)), tolerance,
                              digest.hex(),
                              {{"sequence", s.name},
                               {"energies", energies},
                               {"limit_energy", E_lim},
                               {"liminf", liminf},
                               {"drop", drop},
                               {"equi_integrability_share", share}}));
  }
  return out;
}

}  // namespace fraccv
