#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace volterra {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  std::size_t max_evals = std::size_t{1} << 20;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 21-point Gauss-Kronrod quadrature on [a, b]. Throws
/// QuadratureError when the tolerance is not met within max_evals.
QuadratureResult integrate(const Integrand& f, double a, double b,
                           const QuadratureOptions& opts = {});

/// Integrates f over [a, b] where f(x) behaves like (x - a)^exponent near a
/// (exponent > -1). The map x = a + (b - a) s^q with q = 1 / (exponent + 1)
/// turns the leading power into a constant, so the adaptive rule sees a
/// regular integrand. Non-negative exponents use q = 1.
QuadratureResult integrate_singular(const Integrand& f, double a, double b, double exponent,
                                    const QuadratureOptions& opts = {});

/// Nodes and weights of a one-dimensional rule.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
GaussRule gauss_legendre(int n);

/// n-point Gauss-Hermite rule for the weight exp(-x^2) on the real line.
GaussRule gauss_hermite(int n);

/// Cached 64-point Gauss-Hermite rule.
const GaussRule& gauss_hermite_64();

}  // namespace volterra
