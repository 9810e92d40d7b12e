#include "fraccv/params.hpp"

#include <cmath>
#include <numbers>

#include "fraccv/grid.hpp"

namespace fraccv {

double gradient_constant(int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
  return std::pow(2.0, alpha) * std::pow(std::numbers::pi, -0.5 * n) *
         std::tgamma(0.5 * (n + alpha + 1.0)) / std::tgamma(0.5 * (1.0 - alpha));
}

double riesz_potential_constant(int n, double order) {
  if (!(order > 0.0 && order < n)) throw Error("Riesz potential order must lie in (0,n)");
  return std::pow(std::numbers::pi, 0.5 * n) * std::pow(2.0, order) * std::tgamma(0.5 * order) /
         std::tgamma(0.5 * (n - order));
}

double laplacian_constant(int n, double order) {
  if (!(order > 0.0 && order < 2.0)) throw Error("fractional Laplacian order must lie in (0,2)");
  return std::pow(2.0, order) * std::pow(std::numbers::pi, -0.5 * n) *
         std::tgamma(0.5 * (n + order)) / std::tgamma(-0.5 * order);
}

FractionalParams compute_constants(int n, double alpha, double p) {
  if (n < 1 || n > 3) throw Error("dimension must be 1, 2 or 3");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0,1)");
  if (!(p > 1.0) || std::isinf(p)) throw Error("p must lie in (1,inf)");
  FractionalParams fp;
  fp.dim = n;
  fp.alpha = alpha;
  fp.p = p;
  fp.mu = gradient_constant(n, alpha);
  fp.gamma = riesz_potential_constant(n, alpha);
  fp.nu = laplacian_constant(n, alpha);
  return fp;
}

}  // namespace fraccv
