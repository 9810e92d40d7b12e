#include "fraccv/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

#include "fraccv/fracops.hpp"

namespace fraccv {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite sample");
}

// Unit directions in R^k used for rank-one factors.
std::vector<std::vector<double>> unit_directions(int k, int steps) {
  if (k == 1) return {{1.0}};
  std::vector<std::vector<double>> out;
  if (k == 2) {
    for (int s = 0; s < steps; ++s) {
      const double t = std::numbers::pi * s / steps;
      out.push_back({std::cos(t), std::sin(t)});
    }
    return out;
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> e(3, 0.0);
    e[i] = 1.0;
    out.push_back(e);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      for (double sg : {1.0, -1.0}) {
        std::vector<double> e(3, 0.0);
        e[i] = r;
        e[j] = sg * r;
        out.push_back(e);
      }
  return out;
}

double lamination(const MatrixFunction& f, const std::vector<double>& A, int m, int n, int depth,
                  const LaminationOptions& o, const std::vector<std::vector<double>>& as,
                  const std::vector<std::vector<double>>& bs) {
  double best = f(A);
  if (depth == 0) return best;
  std::vector<double> B(A.size()), C(A.size());
  for (const auto& a : as)
    for (const auto& b : bs)
      for (int k = 1; k < o.lambda_steps; ++k) {
        const double l = static_cast<double>(k) / o.lambda_steps;
        for (int j = 1; j <= o.amplitude_steps; ++j) {
          const double t = o.amplitude_max * j / o.amplitude_steps;
          for (int c = 0; c < m; ++c)
            for (int d = 0; d < n; ++d) {
              const double r = a[c] * b[d];
              B[c * n + d] = A[c * n + d] + (1.0 - l) * t * r;
              C[c * n + d] = A[c * n + d] - l * t * r;
            }
          best = std::min(best, l * lamination(f, B, m, n, depth - 1, o, as, bs) +
                                    (1.0 - l) * lamination(f, C, m, n, depth - 1, o, as, bs));
        }
      }
  return best;
}

int default_points(int n) { return n == 1 ? 4096 : (n == 2 ? 64 : 16); }

// Integer lattice directions for laminate profiles.
std::vector<std::vector<int>> lattice_directions(int n) {
  std::vector<std::vector<int>> out;
  for (int d = 0; d < n; ++d) {
    std::vector<int> e(n, 0);
    e[d] = 1;
    out.push_back(e);
  }
  if (n >= 2)
    for (int s : {1, -1}) {
      std::vector<int> e(n, 0);
      e[0] = 1;
      e[1] = s;
      out.push_back(e);
    }
  return out;
}

// Periodic laminate v(x) = t a s(b.x): s has slope 1 - l on the first L of
// every P cells and slope -l on the rest.
SampledField laminate_profile(const GridSpec& grid, const std::vector<double>& a, const std::vector<int>& b,
                              int P, int L, double l, double t) {
  const int N = grid.points_per_axis;
  const int m = static_cast<int>(a.size());
  SampledField v(grid, m, DecayClass::Unknown);
  for (std::size_t i = 0; i < grid.num_points(); ++i) {
    const auto idx = grid.multi_index(i);
    long q = 0;
    for (int d = 0; d < grid.dim; ++d) q += static_cast<long>(b[d]) * idx[d];
    const int r = static_cast<int>(((q % N) + N) % N) % P;
    const double s = grid.spacing * (r <= L ? (1.0 - l) * r : (1.0 - l) * L - l * (r - L));
    for (int c = 0; c < m; ++c) v(i, c) = t * a[c] * s;
  }
  return v;
}

}  // namespace

std::string to_string(EnvelopeMethod method) {
  return method == EnvelopeMethod::Biconjugate1d ? "biconjugate-1d" : "lamination";
}

double EnvelopeTable::min_sample() const { return samples.front()[0]; }
double EnvelopeTable::max_sample() const { return samples.back()[0]; }

double EnvelopeTable::interpolate(double A) const {
  if (m != 1 || n != 1) throw Error("EnvelopeTable::interpolate: only scalar tables can be interpolated");
  if (samples.size() < 2) throw Error("EnvelopeTable::interpolate: table has fewer than two samples");
  const double lo = min_sample(), hi = max_sample();
  const double slack = 1e-12 * (hi - lo);
  if (!(A >= lo - slack && A <= hi + slack))
    throw Error("envelope table covers [" + std::to_string(lo) + ", " + std::to_string(hi) +
                "] but was asked to extrapolate to " + std::to_string(A));
  const double h = (hi - lo) / static_cast<double>(samples.size() - 1);
  const double s = std::clamp((A - lo) / h, 0.0, static_cast<double>(samples.size() - 1));
  const auto k = std::min(static_cast<std::size_t>(s), samples.size() - 2);
  const double w = s - static_cast<double>(k);
  return (1.0 - w) * fqc[k] + w * fqc[k + 1];
}

EnvelopeTable convex_envelope_1d(const std::vector<double>& values, double a_min, double a_max,
                                 std::optional<Pinching> pinching) {
  const auto K = values.size();
  if (K < 2 || !(a_max > a_min)) throw Error("convex_envelope_1d: need at least two samples on a nonempty interval");
  require_finite(values, "convex_envelope_1d");
  const double h = (a_max - a_min) / static_cast<double>(K - 1);
  auto x = [&](std::size_t k) { return a_min + h * static_cast<double>(k); };

  // Lower convex hull (monotone chain); on sampled data it equals the biconjugate.
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k < K; ++k) {
    while (hull.size() >= 2) {
      const auto i = hull[hull.size() - 2], j = hull.back();
      const double cross = (x(j) - x(i)) * (values[k] - values[i]) - (values[j] - values[i]) * (x(k) - x(i));
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(k);
  }

  EnvelopeTable t;
  t.method = EnvelopeMethod::Biconjugate1d;
  t.pinching = pinching;
  t.f = values;
  t.fqc.resize(K);
  t.samples.resize(K);
  for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
    const auto i = hull[s], j = hull[s + 1];
    for (std::size_t k = i; k <= j; ++k) {
      const double w = static_cast<double>(k - i) / static_cast<double>(j - i);
      t.fqc[k] = std::min(values[k], (1.0 - w) * values[i] + w * values[j]);
    }
  }
  for (std::size_t k = 0; k < K; ++k) t.samples[k] = {x(k)};
  return t;
}

EnvelopeTable convex_envelope_1d(const ScalarFunction& f, double a_min, double a_max, int samples,
                                 std::optional<Pinching> pinching) {
  if (samples < 2) throw Error("convex_envelope_1d: need at least two samples");
  std::vector<double> v(samples);
  const double h = (a_max - a_min) / (samples - 1);
  for (int k = 0; k < samples; ++k) v[k] = f(a_min + h * k);
  return convex_envelope_1d(v, a_min, a_max, pinching);
}

EnvelopeSplit envelope_split(const EnvelopeTable& table, double A, double tolerance) {
  const double fq = table.interpolate(A);
  auto touches = [&](std::size_t k) {
    return table.f[k] - table.fqc[k] <= tolerance * std::max(1.0, std::abs(table.f[k]));
  };
  const double h = (table.max_sample() - table.min_sample()) / static_cast<double>(table.size() - 1);
  const auto below = static_cast<std::size_t>(std::clamp(std::floor((A - table.min_sample()) / h), 0.0,
                                                         static_cast<double>(table.size() - 1)));
  const double f_lin = below + 1 < table.size()
                           ? table.f[below] + (A - table.samples[below][0]) / h * (table.f[below + 1] - table.f[below])
                           : table.f[below];
  EnvelopeSplit s;
  s.lower = s.upper = A;
  if (f_lin - fq <= tolerance * std::max(1.0, std::abs(f_lin))) return s;
  std::size_t lo = below, hi = std::min(below + 1, table.size() - 1);
  while (lo > 0 && !touches(lo)) --lo;
  while (hi + 1 < table.size() && !touches(hi)) ++hi;
  s.lower = table.samples[lo][0];
  s.upper = table.samples[hi][0];
  if (!(s.upper > s.lower)) return EnvelopeSplit{A, A, 1.0, true};
  s.weight_lower = (s.upper - A) / (s.upper - s.lower);
  s.affine = false;
  return s;
}

double convexity_defect(const EnvelopeTable& table) {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < table.size(); ++k)
    worst = std::max(worst, -(table.fqc[k - 1] - 2.0 * table.fqc[k] + table.fqc[k + 1]));
  return worst;
}

double laminate_upper_bound(const MatrixFunction& f, std::span<const double> A, int m, int n, int depth,
                            const LaminationOptions& options) {
  if (depth < 0 || depth > 3) throw Error("laminate_upper_bound: depth must be in 0..3");
  if (m < 1 || n < 1 || static_cast<int>(A.size()) != m * n)
    throw Error("laminate_upper_bound: A must have m x n entries");
  if (options.lambda_steps < 2 || options.amplitude_steps < 1 || !(options.amplitude_max > 0.0))
    throw Error("laminate_upper_bound: invalid lamination options");
  const auto as = unit_directions(m, options.direction_steps);
  const auto bs = unit_directions(n, options.direction_steps);
  return lamination(f, std::vector<double>(A.begin(), A.end()), m, n, depth, options, as, bs);
}

EnvelopeTable laminate_envelope_table(const MatrixFunction& f, const std::vector<std::vector<double>>& samples,
                                      int m, int n, int depth, const LaminationOptions& options) {
  EnvelopeTable t;
  t.m = m;
  t.n = n;
  t.method = EnvelopeMethod::Lamination;
  t.depth = depth;
  t.samples = samples;
  for (const auto& A : samples) {
    t.f.push_back(f(A));
    t.fqc.push_back(laminate_upper_bound(f, A, m, n, depth, options));
  }
  require_finite(t.f, "laminate_envelope_table");
  return t;
}

PushforwardResult periodic_pushforward(const SampledField& v, const FractionalParams& params) {
  if (v.grid().kind != GridKind::PeriodicCell) throw Error("periodic_pushforward: v must live on the periodic cell");
  if (params.dim != v.grid().dim) throw Error("periodic_pushforward: parameter dimension differs from grid");
  v.validate_finite();
  const auto backend = OperatorBackend::spectral();
  SampledField u(v.grid(), v.components(), DecayClass::Unknown);
  const auto mean = integral(v);
  for (int c = 0; c < v.components(); ++c) {
    auto w = fractional_laplacian(v.component(c), 0.5 * (1.0 - params.alpha), backend).field;
    for (std::size_t i = 0; i < v.num_points(); ++i) u(i, c) = w(i) + mean[c];
  }
  const auto ga = fractional_gradient(u, params, backend).field;
  const auto gv = discrete_gradient(v, backend);
  const double scale = lp_norm(gv, 2.0);
  const double diff = lp_norm(ga - gv, 2.0);
  return {std::move(u), scale > 0.0 ? diff / scale : diff};
}

ViolationSearchResult alpha_qc_violation_search(const MatrixFunction& h, std::span<const double> A, int m,
                                                const FractionalParams& params, const ViolationBudget& budget) {
  const int n = params.dim;
  if (m < 1 || static_cast<int>(A.size()) != m * n)
    throw Error("alpha_qc_violation_search: A must have m x n entries");
  const int N = budget.points_per_axis > 0 ? budget.points_per_axis : default_points(n);
  const auto grid = periodic_grid(n, N);
  const auto backend = OperatorBackend::spectral();
  const std::vector<double> A0(A.begin(), A.end());
  const double hA = h(A0);
  if (!std::isfinite(hA)) throw Error("alpha_qc_violation_search: h(A) is not finite");

  ViolationSearchResult res;
  struct Best {
    int K = 0;
    double l = 0.0, t = 0.0;
    std::vector<double> a;
    std::vector<int> b;
  } best;
  std::vector<double> M(m * n);

  for (const auto& a : unit_directions(m, 4))
    for (const auto& b : lattice_directions(n))
      for (int K : budget.oscillations) {
        if (K < 1 || N % K != 0) continue;
        const int P = N / K;
        for (int k = 1; k < budget.lambda_steps; ++k) {
          if ((k * P) % budget.lambda_steps != 0) continue;
          const int L = k * P / budget.lambda_steps;
          const double l = static_cast<double>(k) / budget.lambda_steps;
          const auto v = laminate_profile(grid, a, b, P, L, l, 1.0);
          const auto phi = periodic_pushforward(v, params).u;
          const auto G = fractional_gradient(phi, params, backend).field;
          for (int j = 1; j <= budget.amplitude_steps; ++j) {
            const double t = budget.amplitude_max * j / budget.amplitude_steps;
            double sum = 0.0;
            for (std::size_t i = 0; i < grid.num_points(); ++i) {
              for (int e = 0; e < m * n; ++e) M[e] = A0[e] + t * G(i, e);
              sum += h(M);
            }
            const double gap = hA - sum / static_cast<double>(grid.num_points());
            ++res.candidates;
            if (gap > res.best_gap) {
              res.best_gap = gap;
              best = {K, l, t, a, b};
            }
          }
        }
      }

  if (res.best_gap > budget.tolerance) {
    ViolationWitness w;
    w.A = A0;
    w.gap = res.best_gap;
    w.oscillations = best.K;
    w.volume_fraction = best.l;
    w.amplitude = best.t;
    w.direction_a = best.a;
    w.direction_b = best.b;
    const int P = N / best.K;
    const int L = static_cast<int>(std::lround(best.l * P));
    const auto v = laminate_profile(grid, best.a, best.b, P, L, best.l, best.t);
    w.test_field = periodic_pushforward(v, params).u;
    res.witness = std::move(w);
    res.verdict = "violation";
  } else {
    res.verdict = "consistent with alpha-quasiconvexity";
  }
  return res;
}

void write_envelope_csv(std::ostream& os, const EnvelopeTable& table) {
  if (table.m == 1 && table.n == 1) {
    os << "A";
  } else {
    for (int c = 0; c < table.m; ++c)
      for (int d = 0; d < table.n; ++d) os << (c + d == 0 ? "" : ",") << "A_" << c << d;
  }
  os << ",f,fqc\n" << std::setprecision(17);
  for (std::size_t k = 0; k < table.size(); ++k) {
    for (std::size_t e = 0; e < table.samples[k].size(); ++e) os << (e ? "," : "") << table.samples[k][e];
    os << ',' << table.f[k] << ',' << table.fqc[k] << '\n';
  }
}

}  // namespace fraccv
