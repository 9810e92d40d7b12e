// Runs the ten acceptance criteria and prints one PASS/FAIL line each.
// Exit status 0 only if every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fraccv/calculus_id.hpp"
#include "fraccv/envelope.hpp"
#include "fraccv/spaces.hpp"
#include "fraccv/varsolve.hpp"

using namespace fraccv;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

SampledField gaussian(const GridSpec& g, double centre = 0.0, double width = 1.0) {
  return SampledField::scalar(
      g,
      [=](std::span<const double> x) {
        double r2 = 0.0;
        for (int d = 0; d < g.dim; ++d) {
          const double t = (x[d] - centre) / width;
          r2 += t * t;
        }
        return std::exp(-kPi * r2);
      },
      DecayClass::SchwartzLike);
}

SampledField bump(const GridSpec& g, double amp, double centre, double width) {
  return SampledField::scalar(
      g,
      [=](std::span<const double> x) {
        const double s = (x[0] - centre) / width;
        return std::abs(s) < 1.0 ? amp * std::exp(-1.0 / (1.0 - s * s)) : 0.0;
      },
      DecayClass::CompactSupport);
}

Mask ball(const GridSpec& g, double r) {
  return Mask::from_predicate(g, [r, n = g.dim](std::span<const double> x) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += x[d] * x[d];
    return std::sqrt(s) < r;
  });
}

ComplementarySpec zero_datum(const GridSpec& g, double r, int m = 1) {
  return ComplementarySpec::with_margin(ball(g, r), SampledField(g, m, DecayClass::CompactSupport), 0.1);
}

// 1. Identity suite.
void identities(Outcome& o) {
  const auto spectral = OperatorBackend::spectral();
  const auto cell = periodic_grid(1, 512);
  const auto box = box_grid(1, 4.0, 512);
  double dual = 0.0, comp = 0.0, mean = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto p = compute_constants(1, alpha);
    for (const auto& g : {cell, box}) {
      const double c = g.kind == GridKind::PeriodicCell ? 0.5 : 0.0;
      const double w = g.kind == GridKind::PeriodicCell ? 0.15 : 1.0;
      const auto phi = gaussian(g, c + 0.1 * w, w), psi = gaussian(g, c - 0.2 * w, 1.5 * w);
      dual = std::max(dual, check_duality_gradient(phi, psi, p, spectral, 1e-10).residual);
      dual = std::max(dual, check_duality_laplacian(phi, psi, 0.5 * alpha, spectral, 1e-10).residual);
    }
    comp = std::max(comp, check_composition(gaussian(cell, 0.5, 0.15), alpha, spectral, 1e-6).residual);
    const auto u = SampledField::scalar(
        cell, [](std::span<const double> x) { return std::cos(2 * kPi * x[0]) + 0.5 * std::sin(6 * kPi * x[0]) + 0.3; },
        DecayClass::Unknown);
    mean = std::max(mean, check_periodic_mean_zero(u, p, spectral, 1e-10).residual);
  }
  o.detail << "duality " << dual << ", composition " << comp << ", periodic mean " << mean;
  o.require(dual <= 1e-10, "duality <= 1e-10");
  o.require(comp <= 1e-6, "composition <= 1e-6");
  o.require(mean <= 1e-10, "periodic mean <= 1e-10");
}

// 2. Spectral vs quadrature on a Gaussian.
void cross_validation(Outcome& o) {
  const auto p = compute_constants(1, 0.5);
  std::vector<double> err;
  for (int N : {1024, 2048}) {
    const auto g = box_grid(1, 16.0, N);
    const auto u = gaussian(g);
    const auto s = fractional_gradient(u, p, OperatorBackend::spectral()).field;
    const auto q = fractional_gradient(u, p, OperatorBackend::quadrature()).field;
    err.push_back(lp_norm(s - q, 2) / lp_norm(s, 2));
  }
  o.detail << "alpha 0.5: rel L2 " << err[0] << " (N=1024), " << err[1] << " (N=2048)";
  o.require(err[0] <= 1e-3, "difference <= 1e-3");
  o.require(err[1] <= 0.5 * err[0], "halves under refinement");
}

// 3. Leibniz rule and cut-off commutator rate.
void leibniz(Outcome& o) {
  const auto g = box_grid(1, 2.0, 512);
  double worst = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto r = check_leibniz(bump(g, 1.0, 0.2, 1.2), bump(g, 1.0, -0.3, 1.0), compute_constants(1, alpha),
                                 OperatorBackend::quadrature(), 1e-3);
    worst = std::max(worst, r.residual);
  }
  o.detail << "four-term residual " << worst << "; fitted exponents";
  o.require(worst <= 1e-3, "Leibniz residual <= 1e-3");
  CutoffEstimateSetup setup;
  setup.grid = box_grid(1, 128.0, 4096);
  setup.profile = [](std::span<const double> x) {
    const double s = x[0] - 1.5;
    return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
  };
  setup.cutoff = [](std::span<const double> x) { return std::clamp(2.0 - std::abs(x[0]), 0.0, 1.0); };
  setup.dilations.clear();
  for (int j = -2; j <= 10; ++j) setup.dilations.push_back(std::pow(2.0, 0.5 * j));
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto res = check_cutoff_estimate(setup, compute_constants(1, alpha), OperatorBackend::spectral(), 0.1);
    o.detail << " " << alpha << ":" << -res.fitted_exponent;
    o.require(std::abs(-res.fitted_exponent - alpha) <= 0.1, "exponent within 0.1 of alpha");
  }
}

// 4. Prescribed value and fractional gradient at a point.
void prescribed(Outcome& o) {
  double worst = 0.0;
  bool inside = true;
  {
    const auto g = box_grid(1, 1.0, 1024);
    const auto spec = zero_datum(g, 0.7);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-2.0, 2.0), pos(-0.2, 0.2), al(0.15, 0.85);
    for (int k = 0; k < 20; ++k) {
      const auto p = compute_constants(1, al(rng));
      const auto x0 = g.nearest_node(std::vector<double>{pos(rng)});
      const double z = u(rng), A = u(rng);
      const auto r = construct_prescribed(x0, {z}, {A}, spec, p);
      worst = std::max({worst, std::abs(r.achieved_value[0] - z) / std::abs(z),
                        std::abs(r.achieved_gradient[0] - A) / std::abs(A)});
      for (std::size_t i = 0; i < g.num_points(); ++i)
        if (r.phi(i) != 0.0 && !spec.omega.contains(i)) inside = false;
    }
  }
  {
    const auto g = box_grid(2, 1.0, 256);
    const auto spec = zero_datum(g, 0.7, 2);
    std::mt19937 rng(4048);
    std::uniform_real_distribution<double> u(-2.0, 2.0), pos(-0.1, 0.1), al(0.15, 0.85);
    for (int k = 0; k < 5; ++k) {
      const auto p = compute_constants(2, al(rng));
      const auto x0 = g.nearest_node(std::vector<double>{pos(rng), pos(rng)});
      std::vector<double> z{u(rng), u(rng)}, A{u(rng), u(rng), u(rng), u(rng)};
      const auto r = construct_prescribed(x0, z, A, spec, p);
      double dz = 0, nz = 0, dA = 0, nA = 0;
      for (int c = 0; c < 2; ++c) dz += std::pow(r.achieved_value[c] - z[c], 2), nz += z[c] * z[c];
      for (int c = 0; c < 4; ++c) dA += std::pow(r.achieved_gradient[c] - A[c], 2), nA += A[c] * A[c];
      worst = std::max({worst, std::sqrt(dz / nz), std::sqrt(dA / nA)});
      for (std::size_t i = 0; i < g.num_points(); ++i)
        if ((r.phi(i, 0) != 0.0 || r.phi(i, 1) != 0.0) && !spec.omega.contains(i)) inside = false;
    }
  }
  o.detail << "20 cases in 1D, 5 in 2D: worst relative error " << worst << ", support inside Omega "
           << (inside ? "yes" : "no");
  o.require(worst <= 1e-5, "relative error <= 1e-5");
  o.require(inside, "support inside Omega");
}

// 5. Outside-gradient tails of oscillations with amplitude 1/j.
void outside_tails(Outcome& o) {
  const auto g = box_grid(1, 1.0, 1024);
  const auto spec = zero_datum(g, 0.45);
  const auto p = compute_constants(1, 0.5);
  std::vector<SampledField> seq;
  std::vector<double> w;
  for (int j = 1; j <= 32; ++j) {
    seq.push_back(SampledField::scalar(
        g,
        [j](std::span<const double> x) {
          const double s = 2.5 * x[0];
          const double cut = std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
          return std::sin(2.0 * kPi * j * x[0]) * cut / j;
        },
        DecayClass::CompactSupport));
    w.push_back(1.0 / j);
  }
  const auto d = strong_outside_diagnostic(seq, spec, p, OperatorBackend::quadrature(), 8, std::nullopt, w);
  bool bounded = true;
  for (std::size_t j = 0; j < d.tails.size(); ++j)
    bounded = bounded && d.tails[j] <= d.fitted_constant / (j + 1.0) * (1.0 + 1e-12);
  o.detail << "C_fit " << d.fitted_constant << ", tails ||grad_a u_j||_L2(outside Omega') <= C_fit/j for j=1..32: "
           << (bounded ? "yes" : "no");
  o.require(bounded && d.report.passed, "single constant bounds every tail");
}

// Brute-force biconjugate on a slope grid.
std::vector<double> slope_grid_biconjugate(const std::vector<double>& A, const std::vector<double>& f,
                                           const std::vector<double>& at, double smax, int slopes) {
  std::vector<double> s(slopes), conj(slopes, -INFINITY);
  for (int j = 0; j < slopes; ++j) {
    s[j] = -smax + 2 * smax * j / (slopes - 1);
    for (std::size_t k = 0; k < A.size(); ++k) conj[j] = std::max(conj[j], s[j] * A[k] - f[k]);
  }
  std::vector<double> out(at.size(), -INFINITY);
  for (std::size_t i = 0; i < at.size(); ++i)
    for (int j = 0; j < slopes; ++j) out[i] = std::max(out[i], s[j] * at[i] - conj[j]);
  return out;
}

double double_well(double A) { return std::min((A - 1) * (A - 1), (A + 1) * (A + 1)); }

// 6. Convex envelope against the oracle, and the pinched sandwich.
void envelope(Outcome& o) {
  const int K = 401;
  const auto t = convex_envelope_1d(double_well, -2, 2, K);
  const double h = 4.0 / (K - 1);
  std::vector<double> fine_A, fine_f, at;
  for (int k = 0; k < 10 * (K - 1) + 1; ++k) {
    fine_A.push_back(-2 + 0.1 * h * k);
    fine_f.push_back(double_well(fine_A.back()));
  }
  for (const auto& s : t.samples) at.push_back(s[0]);
  const auto oracle = slope_grid_biconjugate(fine_A, fine_f, at, 3.0, 6001);
  double worst = 0.0;
  for (int k = 0; k < K; ++k) worst = std::max(worst, std::abs(t.fqc[k] - oracle[k]));
  const auto f = make_integrand("pinched-nonconvex-1d");
  const auto table = integrand_envelope(f, -4, 4, 8001);
  double sandwich = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const double A = table.samples[k][0];
    sandwich = std::max({sandwich, f.c * A * A - table.fqc[k], table.fqc[k] - table.f[k]});
  }
  o.detail << "max |f** - oracle| " << worst << " (2h = " << 2 * h << "), sandwich violation " << sandwich;
  o.require(worst <= 2 * h, "oracle agreement within two spacings");
  o.require(sandwich <= 0.0, "c|A|^p <= f^qc <= f");
}

// 7. Witness sweep.
void consistency(Outcome& o) {
  const auto env = convex_envelope_1d(double_well, -4, 4, 8001);
  const auto pinched = make_integrand("pinched-nonconvex-1d");
  const auto ptable = integrand_envelope(pinched, -12, 12, 24001);
  MatrixFunction dw = [](std::span<const double> a) { return double_well(a[0]); };
  MatrixFunction quad = [](std::span<const double> a) { return a[0] * a[0]; };
  MatrixFunction relaxed = [&ptable](std::span<const double> a) { return ptable.interpolate(a[0]); };
  int mismatches = 0, witnesses = 0, convex_witnesses = 0, samples = 0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto p = compute_constants(1, alpha);
    for (int k = 0; k <= 40; ++k) {
      const double A = -2.0 + 0.1 * k;
      std::vector<double> a{A};
      const bool differs = double_well(A) - env.interpolate(A) > 1e-6;
      const bool found = alpha_qc_violation_search(dw, a, 1, p).witness.has_value();
      mismatches += differs != found;
      witnesses += found;
      ++samples;
      for (const auto& h : {quad, relaxed}) convex_witnesses += alpha_qc_violation_search(h, a, 1, p).witness.has_value();
    }
  }
  o.detail << samples << " double-well samples: " << witnesses << " witnesses, " << mismatches
           << " mismatches; convex presets: " << convex_witnesses << " witnesses";
  o.require(mismatches == 0, "witness iff envelope differs");
  o.require(convex_witnesses == 0, "no witness for convex presets");
}

// 8. Relaxation.
void relaxation(Outcome& o) {
  const auto g = box_grid(1, 4.0, 2048);
  const auto spec = zero_datum(g, 1.0);
  const auto p = compute_constants(1, 0.5, 2.0);
  const auto u = bump(g, 1.0, 0.0, 0.9);
  const auto f = make_integrand("pinched-nonconvex-1d");
  const auto seq = minimizing_sequence(u, f, integrand_envelope(f, -4, 4, 8001), spec, p, OperatorBackend::spectral(),
                                       {4, 8, 16, 32, 64});
  bool mono = true;
  double prev = seq.base_energy, gap32 = INFINITY;
  o.detail << "F(u) " << seq.base_energy << ", relaxed " << seq.relaxed << ", E_K";
  for (const auto& m : seq.members) {
    o.detail << " " << m.energy;
    mono = mono && m.energy <= prev;
    prev = m.energy;
    if (m.oscillations == 32) gap32 = std::abs(m.energy - seq.relaxed) / seq.relaxed;
  }
  const auto q = make_integrand("quadratic");
  const auto cseq = minimizing_sequence(u, q, integrand_envelope(q, -4, 4, 801), spec, p, OperatorBackend::spectral(),
                                        {4, 8, 16, 32, 64});
  double cgap = std::abs(cseq.relaxed - cseq.base_energy);
  for (const auto& m : cseq.members) cgap = std::max(cgap, std::abs(m.energy - cseq.relaxed));
  o.detail << "; gap at K=32 " << gap32 << ", convex gap " << cgap;
  o.require(mono, "energies non-increasing in K");
  o.require(gap32 <= 0.05, "K=32 within 5% of relaxed");
  o.require(cgap <= 1e-6, "convex gap <= 1e-6");
}

// 9. Minimization of the convex preset.
void minimization(Outcome& o) {
  const auto g = box_grid(1, 2.0, 256);
  const auto p = compute_constants(1, 0.5);
  const auto datum = bump(g, 1.0, 0.9, 0.5);
  const auto spec = ComplementarySpec::with_margin(ball(g, 1.0), datum, 0.1);
  const auto rep = minimize(make_integrand("quadratic"), spec, p, OperatorBackend::spectral());
  bool mono = true, kept = true;
  for (std::size_t k = 1; k < rep.energy_trace.size(); ++k) mono = mono && rep.energy_trace[k] <= rep.energy_trace[k - 1];
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (!spec.omega.contains(i)) kept = kept && rep.minimizer(i) == datum(i);
  o.detail << rep.iterations << " iterations, residual " << rep.optimality_residual << ", energy "
           << rep.energy_trace.front() << " -> " << rep.energy;
  o.require(rep.converged && rep.optimality_residual <= 1e-6, "residual <= 1e-6");
  o.require(mono, "energy trace non-increasing");
  o.require(kept, "minimizer equals g off Omega");
}

// 10. Energy gradient against central differences.
void gradient_check(Outcome& o) {
  const auto g = box_grid(1, 2.0, 256);
  const auto spec = zero_datum(g, 1.0);
  const auto p = compute_constants(1, 0.5);
  const auto u = bump(g, 1.5, 0.1, 0.8);
  const auto backend = OperatorBackend::spectral();
  double worst = 0.0;
  for (const auto& name : integrand_names()) {
    const auto f = make_integrand(name);
    const auto grad = functional_gradient(u, f, spec, p, backend);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> N01;
    for (int k = 0; k < 10; ++k) {
      SampledField phi(g, 1, DecayClass::CompactSupport);
      for (std::size_t i = 0; i < g.num_points(); ++i)
        if (spec.omega.contains(i)) phi(i) = N01(rng);
      phi = (1.0 / lp_norm(phi, 2)) * phi;
      const double eps = 1e-5;
      const double fd = (evaluate_functional(u + eps * phi, f, spec, p, backend).energy -
                         evaluate_functional(u - eps * phi, f, spec, p, backend).energy) /
                        (2 * eps);
      const double an = inner_product(grad, phi);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1.0));
    }
  }
  o.detail << "3 presets x 10 directions: worst relative difference " << worst;
  o.require(worst <= 1e-6, "agreement to 1e-6");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
    double seconds = 0.0;  // runtime budget, 0 for none
  };
  const std::vector<Criterion> criteria{
      {"identity suite", identities, 10.0},
      {"backend cross-validation", cross_validation, 60.0},
      {"Leibniz rule and cut-off rate", leibniz},
      {"prescribed value and gradient", prescribed},
      {"outside-gradient tails", outside_tails},
      {"convex envelope", envelope},
      {"quasiconvexity witness sweep", consistency},
      {"relaxation by laminates", relaxation, 300.0},
      {"convex minimization", minimization},
      {"energy gradient", gradient_check},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[k].run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[k].seconds > 0.0) o.require(secs <= criteria[k].seconds, "runtime budget");
    failed += !o.pass;
    std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name,
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
