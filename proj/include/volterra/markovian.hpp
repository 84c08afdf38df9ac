#pragma once

#include <string>
#include <vector>

#include "volterra/kernels.hpp"

namespace volterra {

/// Geometric-cell layout of a sum-of-exponentials rule on [cut_low, cut_high].
struct RuleDesign {
  double cut_low = 0.0;
  double cut_high = 0.0;
  int cells = 1;
  int points_per_cell = 1;
  /// Replace the dropped mass on [0, cut_low] by one node at its mean.
  bool lump_low_tail = false;
};

/// Default cuts for a horizon T and simulation step dt. The upper cut is
/// 10 / dt; the lower cut is the smaller of 1 / (10 T) and the point below
/// which the dropped Laplace mass falls under 1e-4 K(T).
RuleDesign default_design(double H, double T, double dt, int cells, int points_per_cell);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double target_H = 0.0;
  RuleDesign design;
};

/// Density of the Laplace representation t^(H-1/2) = int_0^inf e^(-tx) lambda(x) dx,
/// lambda(x) = x^(-H-1/2) / Gamma(1/2 - H).
double laplace_density(double H, double x);

/// int_a^b x^k lambda(x) dx in closed form (k >= 0, 0 <= a < b < inf).
double laplace_moment(double H, int k, double a, double b);

/// Gaussian rule for lambda(x) dx: p points on each of m geometric cells of
/// [cut_low, cut_high]. Each cell rule integrates x^k lambda exactly for
/// k <= 2p - 1; the reproduced moments are checked against closed forms and a
/// RuleConstructionError is thrown when they drift.
QuadratureRule build_rule(double H, const RuleDesign& design);

/// Kernel{SumOfExponentials} with the rule's nodes and weights.
Kernel to_kernel(const QuadratureRule& rule, double scale = 1.0);

/// CSV with header "x,w", one node per line.
std::string rule_to_csv(const QuadratureRule& rule);

}  // namespace volterra
