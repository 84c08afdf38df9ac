#include "volterra/markovian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "volterra/errors.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/text.hpp"

namespace volterra {

namespace {

constexpr double kMomentTolerance = 1e-9;

void check_rule_H(double H) {
  if (!(H > 0.0 && H < 0.5)) {
    throw DomainError("markovian: H must lie in (0, 1/2), got " + format_double(H));
  }
}

// Gaussian rule for lambda restricted to [a, b], via the Stieltjes procedure
// on a fine discretisation of the measure in log coordinates followed by the
// Golub-Welsch eigenproblem.
void cell_rule(double H, double a, double b, int p, std::vector<double>& nodes,
               std::vector<double>& weights) {
  const double alpha = H + 0.5;
  const double norm = 1.0 / std::tgamma(0.5 - H);
  static const GaussRule gl = gauss_legendre(20);

  // Discrete measure in y = x / b on u = log y in [log(a/b), 0].
  const double u_lo = std::log(a / b);
  const double piece = std::min(0.5, 4.0 / (2.0 * p));
  const int pieces = std::max(1, static_cast<int>(std::ceil(-u_lo / piece)));
  const double h = -u_lo / pieces;
  std::vector<double> y;
  std::vector<double> mass;
  y.reserve(static_cast<std::size_t>(pieces) * gl.nodes.size());
  mass.reserve(y.capacity());
  const double bscale = std::pow(b, 1.0 - alpha) * norm;
  for (int k = 0; k < pieces; ++k) {
    const double mid = u_lo + (k + 0.5) * h;
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
      const double u = mid + 0.5 * h * gl.nodes[j];
      const double yy = std::exp(u);
      y.push_back(yy);
      mass.push_back(0.5 * h * gl.weights[j] * std::pow(yy, 1.0 - alpha) * bscale);
    }
  }

  // Stieltjes: monic recurrence coefficients alpha_k, beta_k.
  const std::size_t n = y.size();
  std::vector<double> prev(n, 0.0);
  std::vector<double> cur(n, 1.0);
  Eigen::VectorXd diag(p);
  Eigen::VectorXd sub(std::max(p - 1, 1));
  double norm_prev = 0.0;
  double beta0 = 0.0;
  for (int k = 0; k < p; ++k) {
    double nrm = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = mass[i] * cur[i] * cur[i];
      nrm += w;
      first += w * y[i];
    }
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw RuleConstructionError(
          "markovian: recurrence broke down; reduce points_per_cell or widen cells");
    }
    diag[k] = first / nrm;
    double beta = 0.0;
    if (k == 0) {
      beta0 = nrm;
    } else {
      beta = nrm / norm_prev;
      sub[k - 1] = std::sqrt(beta);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double next = (y[i] - diag[k]) * cur[i] - beta * prev[i];
      prev[i] = cur[i];
      cur[i] = next;
    }
    norm_prev = nrm;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(std::max(p - 1, 0)), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw RuleConstructionError("markovian: Jacobi eigenproblem failed");
  }
  for (int i = 0; i < p; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    const double x = b * solver.eigenvalues()[i];
    const double w = beta0 * v0 * v0;
    if (!(x >= a * (1.0 - 1e-12) && x <= b * (1.0 + 1e-12)) || !(w > 0.0) ||
        !std::isfinite(w)) {
      throw RuleConstructionError(
          "markovian: cell rule left its cell; reduce points_per_cell or widen cells");
    }
    nodes.push_back(x);
    weights.push_back(w);
  }

  // Moment check in scaled coordinates.
  for (int k = 0; k < 2 * p; ++k) {
    double approx = 0.0;
    for (int i = 0; i < p; ++i) {
      const double yi = nodes[nodes.size() - p + i] / b;
      approx += weights[weights.size() - p + i] * std::pow(yi, k);
    }
    const double exact = laplace_moment(H, k, a, b) / std::pow(b, k);
    if (std::abs(approx - exact) > kMomentTolerance * std::abs(exact)) {
      throw RuleConstructionError(
          "markovian: moments are not reproduced (ill-conditioned cell); reduce "
          "points_per_cell or widen cells");
    }
  }
}

}  // namespace

RuleDesign default_design(double H, double T, double dt, int cells, int points_per_cell) {
  check_rule_H(H);
  if (!(T > 0.0) || !(dt > 0.0)) throw DomainError("default_design: T and dt must be positive");
  RuleDesign design;
  design.cells = cells;
  design.points_per_cell = points_per_cell;
  design.cut_high = 10.0 / dt;
  // int_0^c lambda = c^(1/2 - H) / Gamma(3/2 - H); keep it below 1e-4 T^(H-1/2).
  const double tail_cut =
      std::pow(1e-4 * std::pow(T, H - 0.5) * std::tgamma(1.5 - H), 1.0 / (0.5 - H));
  design.cut_low = std::min(1.0 / (10.0 * T), tail_cut);
  return design;
}

double laplace_density(double H, double x) {
  check_rule_H(H);
  if (!(x > 0.0)) throw DomainError("laplace_density: x must be positive");
  return std::pow(x, -H - 0.5) / std::tgamma(0.5 - H);
}

double laplace_moment(double H, int k, double a, double b) {
  check_rule_H(H);
  if (k < 0 || !(a >= 0.0) || !(b > a) || !std::isfinite(b)) {
    throw DomainError("laplace_moment: need k >= 0 and 0 <= a < b < inf");
  }
  const double e = k + 0.5 - H;
  // b^e (1 - (a/b)^e) / (e Gamma(1/2 - H))
  const double ratio = a / b;
  const double frac = (ratio == 0.0) ? 1.0 : -std::expm1(e * std::log(ratio));
  return std::pow(b, e) * frac / (e * std::tgamma(0.5 - H));
}

QuadratureRule build_rule(double H, const RuleDesign& design) {
  check_rule_H(H);
  if (!(design.cut_low > 0.0) || !(design.cut_high > design.cut_low) ||
      !std::isfinite(design.cut_high)) {
    throw DomainError("build_rule: need 0 < cut_low < cut_high < inf");
  }
  if (design.cells < 1 || design.points_per_cell < 1) {
    throw DomainError("build_rule: cells and points_per_cell must be positive");
  }
  QuadratureRule rule;
  rule.target_H = H;
  rule.design = design;
  const double H_alpha = H + 0.5;
  if (design.lump_low_tail) {
    // Mean of lambda on [0, cut_low] is cut_low (1 - alpha) / (2 - alpha).
    rule.nodes.push_back(design.cut_low * (1.0 - H_alpha) / (2.0 - H_alpha));
    rule.weights.push_back(laplace_moment(H, 0, 0.0, design.cut_low));
  }
  const double log_lo = std::log(design.cut_low);
  const double log_hi = std::log(design.cut_high);
  double left = design.cut_low;
  for (int c = 0; c < design.cells; ++c) {
    const double right = (c + 1 == design.cells)
                             ? design.cut_high
                             : std::exp(log_lo + (log_hi - log_lo) * (c + 1) / design.cells);
    cell_rule(H, left, right, design.points_per_cell, rule.nodes, rule.weights);
    left = right;
  }
  for (std::size_t i = 1; i < rule.nodes.size(); ++i) {
    if (!(rule.nodes[i] > rule.nodes[i - 1])) {
      throw RuleConstructionError("build_rule: nodes are not strictly increasing");
    }
  }
  return rule;
}

Kernel to_kernel(const QuadratureRule& rule, double scale) {
  if (rule.nodes.empty()) {
    throw std::invalid_argument("to_kernel: empty rule gives the zero kernel");
  }
  return Kernel::sum_of_exponentials(rule.nodes, rule.weights, scale);
}

std::string rule_to_csv(const QuadratureRule& rule) {
  std::string out = "x,w\n";
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    out += format_double(rule.nodes[i]) + "," + format_double(rule.weights[i]) + "\n";
  }
  return out;
}

}  // namespace volterra
