#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "fraccv/fracops.hpp"

using namespace fraccv;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kPi = std::numbers::pi;

// Fourier-side oracles for the Gaussian exp(-pi x^2), whose transform is
// exp(-pi xi^2). Each is an inverse transform of symbol * exp(-pi xi^2),
// integrated adaptively over xi in [0, 7].
double gaussian_frac_gradient_1d(double x, double alpha) {
  auto f = [=](double xi) {
    return std::pow(2 * kPi * xi, alpha) * std::exp(-kPi * xi * xi) * std::sin(2 * kPi * x * xi);
  };
  return -2.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, 7.0, 20, 1e-13);
}

double gaussian_frac_laplacian_1d(double x, double s) {
  auto f = [=](double xi) {
    return std::pow(2 * kPi * xi, 2 * s) * std::exp(-kPi * xi * xi) * std::cos(2 * kPi * x * xi);
  };
  return 2.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, 7.0, 20, 1e-13);
}

double gaussian_riesz_1d(double x, double a) {
  // Substitute xi = t^2 to remove the xi^{-a} singularity at 0.
  auto f = [=](double t) {
    const double xi = t * t;
    return 2 * t * std::pow(2 * kPi * xi, -a) * std::exp(-kPi * xi * xi) *
           std::cos(2 * kPi * x * xi);
  };
  return 2.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, std::sqrt(7.0), 20, 1e-13);
}

// Radial component of the fractional gradient of exp(-pi |x|^2) in 2D.
double gaussian_frac_gradient_2d_radial(double r, double alpha) {
  auto f = [=](double rho) {
    return rho * rho * std::pow(2 * kPi * rho, alpha - 1) * std::exp(-kPi * rho * rho) *
           boost::math::cyl_bessel_j(1, 2 * kPi * r * rho);
  };
  return -4 * kPi * kPi * gauss_kronrod<double, 61>::integrate(f, 0.0, 7.0, 20, 1e-13);
}

SampledField gaussian(const GridSpec& g) {
  return SampledField::scalar(
      g,
      [n = g.dim](auto x) {
        double r2 = 0;
        for (int d = 0; d < n; ++d) r2 += x[d] * x[d];
        return std::exp(-kPi * r2);
      },
      DecayClass::SchwartzLike);
}

double rel_l2(const SampledField& a, const SampledField& b) { return lp_norm(a - b, 2) / lp_norm(b, 2); }

SampledField oracle_gradient_1d(const GridSpec& g, double alpha) {
  return SampledField::scalar(g, [=](auto x) { return gaussian_frac_gradient_1d(x[0], alpha); },
                              DecayClass::Unknown);
}

SampledField random_field(const GridSpec& g, int comps, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  SampledField f(g, comps, DecayClass::CompactSupport);
  for (double& v : f.values()) v = U(rng);
  return f;
}

}  // namespace

TEST(CubeIntegrals, ClosedForms) {
  EXPECT_NEAR(cube_power_integral(1, -0.5), 4.0, 1e-13);
  EXPECT_NEAR(cube_power_integral(2, 0.0), 4.0, 1e-13);
  EXPECT_NEAR(cube_power_integral(2, 2.0), 8.0 / 3.0, 1e-13);
  EXPECT_NEAR(cube_power_integral(3, 2.0), 8.0, 1e-12);
  EXPECT_NEAR(cube_exterior_power_integral(1, -2.0), 2.0, 1e-13);
  // Ball of radius 1 inside the cube: exterior of cube <= exterior of ball.
  const double ball_ext = 2 * kPi / 1.0;  // int_{|r|>1} |r|^{-3} in 2D
  EXPECT_LT(cube_exterior_power_integral(2, -3.0), ball_ext);
  EXPECT_THROW(cube_power_integral(1, -1.0), Error);
}

TEST(FractionalGradient, SpectralIsExactOnPeriodicModes) {
  auto g = periodic_grid(1, 64);
  const double alpha = 0.3;
  auto p = compute_constants(1, alpha);
  auto u = SampledField::scalar(g, [](auto x) { return std::sin(2 * kPi * 3 * x[0]); },
                                DecayClass::Unknown);
  auto expect = SampledField::scalar(
      g, [=](auto x) { return std::pow(2 * kPi * 3, alpha) * std::cos(2 * kPi * 3 * x[0]); },
      DecayClass::Unknown);
  auto r = fractional_gradient(u, p, OperatorBackend::spectral());
  EXPECT_LT(lp_norm(r.field - expect, INFINITY), 1e-12);
  EXPECT_EQ(r.truncation_estimate, 0.0);
}

TEST(FractionalGradient, QuadratureConvergesOnPeriodicModes) {
  const double alpha = 0.6;
  auto p = compute_constants(1, alpha);
  double prev = 0;
  for (int N : {8, 16, 32}) {
    auto g = periodic_grid(1, N);
    auto u = SampledField::scalar(g, [](auto x) { return std::sin(2 * kPi * x[0]); },
                                  DecayClass::Unknown);
    auto expect = SampledField::scalar(
        g, [=](auto x) { return std::pow(2 * kPi, alpha) * std::cos(2 * kPi * x[0]); },
        DecayClass::Unknown);
    auto r = fractional_gradient(u, p, OperatorBackend::quadrature());
    const double err = lp_norm(r.field - expect, 2) / lp_norm(expect, 2);
    EXPECT_LT(err, 1e-2) << "N=" << N;
    if (prev > 0) EXPECT_LT(err, 0.5 * prev) << "N=" << N;
    prev = err;
  }
}

TEST(FractionalGradient, GaussianOnBoxMatchesFourierOracle) {
  for (double alpha : {0.25, 0.75}) {
    auto g = box_grid(1, 16.0, 1024);
    auto p = compute_constants(1, alpha);
    auto u = gaussian(g);
    auto oracle = oracle_gradient_1d(g, alpha);
    auto s = fractional_gradient(u, p, OperatorBackend::spectral());
    EXPECT_LT(rel_l2(s.field, oracle), 2e-5) << "alpha=" << alpha;
    // With light padding the periodic images of the |x|^{-1-alpha} tail dominate.
    auto s8 = fractional_gradient(u, p, OperatorBackend::spectral(8));
    EXPECT_LT(rel_l2(s8.field, oracle), 5e-4) << "alpha=" << alpha;
    auto q = fractional_gradient(u, p, OperatorBackend::quadrature());
    EXPECT_LT(rel_l2(q.field, oracle), 1e-3) << "alpha=" << alpha;
  }
}

TEST(FractionalGradient, QuadratureErrorShrinksUnderRefinement) {
  const double alpha = 0.5;
  auto p = compute_constants(1, alpha);
  double prev = 0;
  for (int N : {256, 512, 1024}) {
    auto g = box_grid(1, 8.0, N);
    auto err = rel_l2(fractional_gradient(gaussian(g), p, OperatorBackend::quadrature()).field,
                      oracle_gradient_1d(g, alpha));
    if (prev > 0) EXPECT_LT(err, 0.5 * prev) << "N=" << N;
    prev = err;
  }
}

TEST(FractionalGradient, TwoDimensionalGaussianRadialProfile) {
  const double alpha = 0.5;
  auto p = compute_constants(2, alpha);
  auto g = box_grid(2, 4.0, 64);
  auto u = gaussian(g);
  auto s = fractional_gradient(u, p, OperatorBackend::spectral()).field;
  auto q = fractional_gradient(u, p, OperatorBackend::quadrature()).field;
  for (std::size_t i = 0; i < g.num_points(); i += 97) {
    auto x = g.point(i);
    const double r = std::hypot(x[0], x[1]);
    if (r == 0 || r > 3) continue;
    const double radial = gaussian_frac_gradient_2d_radial(r, alpha);
    for (int d = 0; d < 2; ++d) {
      EXPECT_NEAR(s(i, d), radial * x[d] / r, 1e-6);
      EXPECT_NEAR(q(i, d), radial * x[d] / r, 2e-3);
    }
  }
}

TEST(FractionalGradient, PointEvaluationMatchesFullEvaluation) {
  auto p = compute_constants(2, 0.4);
  auto g = box_grid(2, 2.0, 32);
  auto u = gaussian(g);
  auto full = fractional_gradient(u, p, OperatorBackend::quadrature()).field;
  for (std::size_t node : {0ul, 100ul, 517ul, 1023ul}) {
    auto v = fractional_gradient_at(u, node, p);
    EXPECT_NEAR(v[0], full(node, 0), 1e-11);
    EXPECT_NEAR(v[1], full(node, 1), 1e-11);
  }
  auto gp = periodic_grid(1, 32);
  auto pp = compute_constants(1, 0.4);
  auto w = SampledField::scalar(gp, [](auto x) { return std::cos(2 * kPi * x[0]); }, DecayClass::Unknown);
  auto fw = fractional_gradient(w, pp, OperatorBackend::quadrature()).field;
  EXPECT_NEAR(fractional_gradient_at(w, 5, pp)[0], fw(5), 1e-11);
}

TEST(FractionalGradient, UnknownDecayOnBoxIsRefused) {
  auto g = box_grid(1, 1.0, 16);
  SampledField u(g, 1, DecayClass::Unknown);
  auto p = compute_constants(1, 0.5);
  EXPECT_THROW(fractional_gradient(u, p, OperatorBackend::spectral()), Error);
  EXPECT_THROW(fractional_gradient(u, p, OperatorBackend::quadrature()), Error);
}

TEST(FractionalGradient, TruncationEstimateBoundsCutKernel) {
  auto g = box_grid(1, 8.0, 256);
  auto p = compute_constants(1, 0.5);
  auto u = gaussian(g);
  auto full = fractional_gradient(u, p, OperatorBackend::quadrature());
  auto cut = fractional_gradient(u, p, OperatorBackend::quadrature(0.0, 2.0));
  EXPECT_GT(cut.truncation_estimate, 0.0);
  // Far-field error of the cut kernel, away from the Taylor-window change.
  auto cut_far = fractional_gradient(u, p, OperatorBackend::quadrature(1.0, 2.0));
  auto full_far = fractional_gradient(u, p, OperatorBackend::quadrature(1.0));
  EXPECT_LE(lp_norm(cut_far.field - full_far.field, INFINITY), cut_far.truncation_estimate);
}

TEST(Divergence, IsNegativeAdjointOfGradient) {
  for (int dim : {1, 2}) {
    for (auto kind : {GridKind::PeriodicCell, GridKind::TruncatedBox}) {
      auto g = kind == GridKind::PeriodicCell ? periodic_grid(dim, dim == 1 ? 64 : 16)
                                               : box_grid(dim, 1.5, dim == 1 ? 64 : 16);
      auto p = compute_constants(dim, 0.35);
      auto u = random_field(g, 2, 11);
      auto V = random_field(g, 2 * dim, 12);
      for (auto b : {OperatorBackend::spectral(), OperatorBackend::quadrature()}) {
        auto gu = fractional_gradient(u, p, b).field;
        auto dv = fractional_divergence(V, p, b);
        const double lhs = inner_product(gu, V);
        const double rhs = -inner_product(u, dv);
        const double scale = lp_norm(gu, 2) * lp_norm(V, 2);
        EXPECT_LT(std::abs(lhs - rhs) / scale, 1e-12) << "dim=" << dim;
      }
    }
  }
}

TEST(FractionalLaplacian, GaussianMatchesFourierOracle) {
  const double s = 0.35;
  auto g = box_grid(1, 8.0, 512);
  auto u = gaussian(g);
  auto oracle =
      SampledField::scalar(g, [=](auto x) { return gaussian_frac_laplacian_1d(x[0], s); }, DecayClass::Unknown);
  const double e8 = rel_l2(fractional_laplacian(u, s, OperatorBackend::spectral(8)).field, oracle);
  const double e32 = rel_l2(fractional_laplacian(u, s, OperatorBackend::spectral(32)).field, oracle);
  EXPECT_LT(e8, 2e-3);
  EXPECT_LT(e32, 0.25 * e8);  // image sum shrinks like period^{-1-2s}
  EXPECT_LT(rel_l2(fractional_laplacian(u, s, OperatorBackend::quadrature()).field, oracle), 1e-3);
}

TEST(FractionalLaplacian, PeriodicModeIsEigenfunction) {
  const double s = 0.7;
  auto g = periodic_grid(1, 128);
  auto u = SampledField::scalar(g, [](auto x) { return std::cos(2 * kPi * 2 * x[0]); }, DecayClass::Unknown);
  auto expect = std::pow(4 * kPi, 2 * s) * u;
  EXPECT_LT(rel_l2(fractional_laplacian(u, s, OperatorBackend::spectral()).field, expect), 1e-12);
  EXPECT_LT(rel_l2(fractional_laplacian(u, s, OperatorBackend::quadrature()).field, expect), 2e-3);
}

TEST(RieszPotential, GaussianMatchesFourierOracle) {
  const double a = 0.4;
  auto g = box_grid(1, 16.0, 1024);
  auto u = gaussian(g);
  auto oracle = SampledField::scalar(g, [=](auto x) { return gaussian_riesz_1d(x[0], a); }, DecayClass::Unknown);
  auto inner = Mask::from_predicate(g, [](auto x) { return std::abs(x[0]) < 4.0; });
  auto err = [&](const SampledField& f) {
    return lp_norm(f - oracle, 2, &inner) / lp_norm(oracle, 2, &inner);
  };
  // The spectral route drops the zero frequency, i.e. subtracts the cell mean
  // of a potential that decays like |x|^{a-1}; that offset shrinks with padding.
  const double e8 = err(riesz_potential(u, a, OperatorBackend::spectral(8)).field);
  const double e32 = err(riesz_potential(u, a, OperatorBackend::spectral(32)).field);
  EXPECT_LT(e32, 0.6 * e8);
  EXPECT_LT(err(riesz_potential(u, a, OperatorBackend::quadrature()).field), 1e-3);
}

TEST(RieszPotential, RefusesPeriodicQuadrature) {
  auto g = periodic_grid(1, 16);
  SampledField u(g, 1);
  EXPECT_THROW(riesz_potential(u, 0.5, OperatorBackend::quadrature()), Error);
  EXPECT_THROW(riesz_potential(u, 1.5, OperatorBackend::spectral()), Error);
}

TEST(NonlocalRemainder, VanishesForConstantCutoff) {
  auto g = periodic_grid(1, 64);
  auto p = compute_constants(1, 0.5);
  auto u = random_field(g, 1, 3);
  auto one = SampledField::scalar(g, [](auto) { return 2.5; }, DecayClass::Unknown);
  auto r = nonlocal_leibniz_remainder(u, one, p, OperatorBackend::quadrature());
  EXPECT_LT(lp_norm(r.field, INFINITY), 1e-12);
}

TEST(NonlocalRemainder, ProductRuleHoldsOnBox) {
  auto g = box_grid(1, 6.0, 512);
  auto p = compute_constants(1, 0.5);
  auto u = gaussian(g);
  auto psi = SampledField::scalar(g, [](auto x) { return std::exp(-0.5 * x[0] * x[0]) * std::cos(x[0]); },
                                  DecayClass::SchwartzLike);
  auto b = OperatorBackend::quadrature();
  auto lhs = fractional_gradient(multiply(psi, u), p, b).field;
  auto rhs = multiply(psi, fractional_gradient(u, p, b).field) +
             multiply(u, fractional_gradient(psi, p, b).field) +
             nonlocal_leibniz_remainder(u, psi, p, b).field;
  EXPECT_LT(rel_l2(rhs, lhs), 1e-6);
}

TEST(GradientInverse, InvertsPeriodicModes) {
  auto g = periodic_grid(1, 64);
  const double alpha = 0.4;
  auto p = compute_constants(1, alpha);
  auto V = SampledField::scalar(g, [](auto x) { return std::cos(2 * kPi * 5 * x[0]); }, DecayClass::Unknown);
  auto expect = SampledField::scalar(
      g, [=](auto x) { return std::sin(2 * kPi * 5 * x[0]) / std::pow(2 * kPi * 5, alpha); },
      DecayClass::Unknown);
  EXPECT_LT(lp_norm(fractional_gradient_inverse(V, p) - expect, INFINITY), 1e-13);
}

TEST(GradientInverse, RecoversFieldFromItsGradient) {
  auto g = periodic_grid(2, 16);
  auto p = compute_constants(2, 0.6);
  auto w = SampledField::scalar(
      g, [](auto x) { return std::sin(2 * kPi * (x[0] + 2 * x[1])) + std::cos(2 * kPi * 3 * x[1]); },
      DecayClass::Unknown);
  auto V = fractional_gradient(w, p, OperatorBackend::spectral()).field;
  EXPECT_LT(lp_norm(fractional_gradient_inverse(V, p) - w, INFINITY), 1e-12);
}

TEST(GradientInverse, StepGradientIsReproducedOnNodes) {
  // A node-sampled zero-mean step has no Gibbs loss through the inverse.
  auto g = periodic_grid(1, 128);
  auto p = compute_constants(1, 0.5);
  SampledField step(g, 1, DecayClass::Unknown);
  for (std::size_t i = 0; i < g.num_points(); ++i) step(i) = (i / 16) % 2 == 0 ? 1.0 : -1.0;
  auto u = fractional_gradient_inverse(step, p);
  auto G = fractional_gradient(u, p, OperatorBackend::spectral()).field;
  EXPECT_LT(lp_norm(G - step, INFINITY), 1e-12);
}
