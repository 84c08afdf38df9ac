#include "volterra/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "volterra/errors.hpp"
#include "volterra/text.hpp"

namespace volterra {

namespace {

void check_H(double H) {
  if (!(H > 0.0 && H < 1.0)) {
    throw std::invalid_argument("kernel: H must lie in (0, 1), got " + format_double(H));
  }
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("kernel: tau must be positive, got " + format_double(tau));
  }
}

void check_scale(double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("kernel: scale must be finite and non-negative");
  }
}

// (1 - exp(-x t)) / x with the x -> 0 limit t.
double exp_integral(double x, double t) {
  if (x == 0.0) return t;
  return -std::expm1(-x * t) / x;
}

bool is_truncated_pair(const Kernel& a, const Kernel& b) {
  auto one_way = [](const Kernel& f, const Kernel& g) {
    return f.family() == KernelFamily::Fractional && g.family() == KernelFamily::Truncated &&
           f.H() == g.H() && f.scale() == g.scale();
  };
  return one_way(a, b) || one_way(b, a);
}

const Kernel& truncated_member(const Kernel& a, const Kernel& b) {
  return a.family() == KernelFamily::Truncated ? a : b;
}

double pair_exponent(const Kernel& a, const Kernel& b) {
  return std::min(a.singular_exponent(), b.singular_exponent());
}

// Breakpoints of the pair strictly inside (0, t), sorted, with t appended.
std::vector<double> pair_breakpoints(const Kernel& a, const Kernel& b, double t) {
  std::vector<double> points;
  for (const Kernel* k : {&a, &b}) {
    if (k->has_tau() && k->tau() < t) points.push_back(k->tau());
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  points.push_back(t);
  return points;
}

// Integrates g over [0, t]: singular map on the first piece, plain adaptive
// rule on the rest.
double integrate_pieces(const Integrand& g, const std::vector<double>& points, double exponent,
                        const QuadratureOptions& opts) {
  double total = 0.0;
  double left = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double right = points[i];
    total += (i == 0) ? integrate_singular(g, left, right, exponent, opts).value
                      : integrate(g, left, right, opts).value;
    left = right;
  }
  return total;
}

// Composite Gauss-Legendre on a mesh graded towards 0 as (k/n)^grading, with
// the remaining pieces uniform. Doubles n until two successive estimates agree.
double graded_outer_integral(const std::function<double(double)>& g,
                             const std::vector<double>& points, double grading,
                             const QuadratureOptions& opts) {
  static const GaussRule gl = gauss_legendre(8);
  auto composite = [&](int cells) {
    double total = 0.0;
    double left = 0.0;
    for (std::size_t piece = 0; piece < points.size(); ++piece) {
      const double right = points[piece];
      const double width = right - left;
      for (int k = 0; k < cells; ++k) {
        double a;
        double b;
        if (piece == 0) {
          a = width * std::pow(static_cast<double>(k) / cells, grading);
          b = width * std::pow(static_cast<double>(k + 1) / cells, grading);
        } else {
          a = left + width * k / cells;
          b = left + width * (k + 1) / cells;
        }
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
          total += half * gl.weights[j] * g(mid + half * gl.nodes[j]);
        }
      }
      left = right;
    }
    return total;
  };
  int cells = 8;
  double previous = composite(cells);
  while (true) {
    cells *= 2;
    const double current = composite(cells);
    const double diff = std::abs(current - previous);
    if (diff <= std::max(opts.abs_tol, opts.rel_tol * std::abs(current))) return current;
    if (cells >= 2048) {
      throw QuadratureError("bound_quantity: graded outer quadrature did not converge", diff);
    }
    previous = current;
  }
}

QuadratureOptions tightened(const QuadratureOptions& opts) {
  QuadratureOptions inner = opts;
  inner.abs_tol = opts.abs_tol * 1e-2;
  inner.rel_tol = opts.rel_tol * 1e-2;
  return inner;
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Fractional:
      return "fractional";
    case KernelFamily::Smoothed:
      return "smoothed";
    case KernelFamily::Truncated:
      return "truncated";
    case KernelFamily::SumOfExponentials:
      return "sum_of_exponentials";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "fractional") return KernelFamily::Fractional;
  if (name == "smoothed") return KernelFamily::Smoothed;
  if (name == "truncated") return KernelFamily::Truncated;
  if (name == "sum_of_exponentials") return KernelFamily::SumOfExponentials;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

Kernel Kernel::fractional(double H, double scale) {
  check_H(H);
  check_scale(scale);
  Kernel k;
  k.family_ = KernelFamily::Fractional;
  k.H_ = H;
  k.scale_ = scale;
  return k;
}

Kernel Kernel::smoothed(double H, double tau, double scale) {
  check_H(H);
  check_tau(tau);
  check_scale(scale);
  Kernel k;
  k.family_ = KernelFamily::Smoothed;
  k.H_ = H;
  k.tau_ = tau;
  k.scale_ = scale;
  return k;
}

Kernel Kernel::truncated(double H, double tau, double scale) {
  Kernel k = smoothed(H, tau, scale);
  k.family_ = KernelFamily::Truncated;
  return k;
}

Kernel Kernel::sum_of_exponentials(std::vector<double> nodes, std::vector<double> weights,
                                   double scale) {
  check_scale(scale);
  if (nodes.empty()) throw std::invalid_argument("kernel: sum of exponentials needs nodes");
  if (nodes.size() != weights.size()) {
    throw std::invalid_argument("kernel: nodes and weights differ in length");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(nodes[i] >= 0.0) || !std::isfinite(nodes[i])) {
      throw std::invalid_argument("kernel: nodes must be finite and non-negative");
    }
    if (i > 0 && !(nodes[i] > nodes[i - 1])) {
      throw std::invalid_argument("kernel: nodes must be strictly increasing");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("kernel: weights must be finite and non-negative");
    }
  }
  Kernel k;
  k.family_ = KernelFamily::SumOfExponentials;
  k.scale_ = scale;
  k.nodes_ = std::move(nodes);
  k.weights_ = std::move(weights);
  return k;
}

double Kernel::singular_exponent() const noexcept {
  return family_ == KernelFamily::Fractional ? std::min(0.0, H_ - 0.5) : 0.0;
}

double eval(const Kernel& kernel, double t) {
  if (t < 0.0 || std::isnan(t)) throw DomainError("eval: negative time");
  const double a = kernel.H() - 0.5;
  switch (kernel.family()) {
    case KernelFamily::Fractional:
      if (t <= 0.0) throw DomainError("eval: fractional kernel is singular at t = 0");
      return kernel.scale() * std::pow(t, a);
    case KernelFamily::Smoothed:
      return kernel.scale() * std::pow(t + kernel.tau(), a);
    case KernelFamily::Truncated:
      return kernel.scale() * std::pow(std::max(t, kernel.tau()), a);
    case KernelFamily::SumOfExponentials: {
      double sum = 0.0;
      for (std::size_t i = 0; i < kernel.nodes().size(); ++i) {
        sum += kernel.weights()[i] * std::exp(-kernel.nodes()[i] * t);
      }
      return kernel.scale() * sum;
    }
  }
  return 0.0;
}

double integral(const Kernel& kernel, double t) {
  if (t < 0.0 || std::isnan(t)) throw DomainError("integral: negative time");
  if (t == 0.0) return 0.0;
  const double a = kernel.H() + 0.5;
  const double tau = kernel.tau();
  switch (kernel.family()) {
    case KernelFamily::Fractional:
      return kernel.scale() * std::pow(t, a) / a;
    case KernelFamily::Smoothed:
      return kernel.scale() * (std::pow(t + tau, a) - std::pow(tau, a)) / a;
    case KernelFamily::Truncated:
      if (t <= tau) return kernel.scale() * std::pow(tau, a - 1.0) * t;
      return kernel.scale() * (std::pow(tau, a) + (std::pow(t, a) - std::pow(tau, a)) / a);
    case KernelFamily::SumOfExponentials: {
      double sum = 0.0;
      for (std::size_t i = 0; i < kernel.nodes().size(); ++i) {
        sum += kernel.weights()[i] * exp_integral(kernel.nodes()[i], t);
      }
      return kernel.scale() * sum;
    }
  }
  return 0.0;
}

double l2_norm_sq(const Kernel& kernel, double T) {
  if (T < 0.0 || std::isnan(T)) throw DomainError("l2_norm_sq: negative horizon");
  if (T == 0.0) return 0.0;
  const double h2 = 2.0 * kernel.H();
  const double s2 = kernel.scale() * kernel.scale();
  const double tau = kernel.tau();
  switch (kernel.family()) {
    case KernelFamily::Fractional:
      return s2 * std::pow(T, h2) / h2;
    case KernelFamily::Smoothed:
      return s2 * (std::pow(T + tau, h2) - std::pow(tau, h2)) / h2;
    case KernelFamily::Truncated:
      if (T <= tau) return s2 * std::pow(tau, h2 - 1.0) * T;
      return s2 * (std::pow(tau, h2) + (std::pow(T, h2) - std::pow(tau, h2)) / h2);
    case KernelFamily::SumOfExponentials: {
      const auto& x = kernel.nodes();
      const auto& w = kernel.weights();
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
          sum += w[i] * w[j] * exp_integral(x[i] + x[j], T);
        }
      }
      return s2 * sum;
    }
  }
  return 0.0;
}

double l2_norm_sq_quadrature(const Kernel& kernel, double T, const QuadratureOptions& opts) {
  if (T <= 0.0) throw DomainError("l2_norm_sq_quadrature: horizon must be positive");
  auto g = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double k = eval(kernel, t);
    return k * k;
  };
  return integrate_pieces(g, pair_breakpoints(kernel, kernel, T), 2.0 * kernel.singular_exponent(),
                          opts);
}

double l1_diff(const Kernel& K, const Kernel& Kbar, double t, const QuadratureOptions& opts) {
  if (t < 0.0 || std::isnan(t)) throw DomainError("l1_diff: negative time");
  if (t == 0.0 || K == Kbar) return 0.0;
  if (is_truncated_pair(K, Kbar)) {
    const Kernel& tr = truncated_member(K, Kbar);
    const double H = tr.H();
    const double u = std::min(t, tr.tau());
    return tr.scale() * (std::pow(u, H + 0.5) / (H + 0.5) - std::pow(tr.tau(), H - 0.5) * u);
  }
  auto g = [&](double s) { return s <= 0.0 ? 0.0 : std::abs(eval(K, s) - eval(Kbar, s)); };
  return integrate_pieces(g, pair_breakpoints(K, Kbar, t), pair_exponent(K, Kbar), opts);
}

double l1_sqdiff(const Kernel& K, const Kernel& Kbar, double t, const QuadratureOptions& opts) {
  if (t < 0.0 || std::isnan(t)) throw DomainError("l1_sqdiff: negative time");
  if (t == 0.0 || K == Kbar) return 0.0;
  if (is_truncated_pair(K, Kbar)) {
    const Kernel& tr = truncated_member(K, Kbar);
    const double h2 = 2.0 * tr.H();
    const double u = std::min(t, tr.tau());
    return tr.scale() * tr.scale() *
           (std::pow(u, h2) / h2 - std::pow(tr.tau(), h2 - 1.0) * u);
  }
  auto g = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double a = eval(K, s);
    const double b = eval(Kbar, s);
    return std::abs(a * a - b * b);
  };
  return integrate_pieces(g, pair_breakpoints(K, Kbar, t), 2.0 * pair_exponent(K, Kbar), opts);
}

double l2_distance(const Kernel& K, const Kernel& Kbar, double t, const QuadratureOptions& opts) {
  if (t < 0.0 || std::isnan(t)) throw DomainError("l2_distance: negative time");
  if (t == 0.0 || K == Kbar) return 0.0;
  auto g = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double d = eval(K, s) - eval(Kbar, s);
    return d * d;
  };
  return std::sqrt(
      integrate_pieces(g, pair_breakpoints(K, Kbar, t), 2.0 * pair_exponent(K, Kbar), opts));
}

double domination_constant(const Kernel& K, const Kernel& Kbar, double T) {
  constexpr int kPoints = 4096;
  const double lo = std::log(1e-12 * T);
  const double hi = std::log(T);
  double worst = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / (kPoints - 1));
    const double k = eval(K, r);
    const double kb = eval(Kbar, r);
    if (kb == 0.0) continue;
    if (k <= 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, kb / k);
  }
  return worst;
}

KernelDistanceProfile bound_quantity(const Kernel& K, const Kernel& Kbar, double T,
                                     const QuadratureOptions& opts) {
  if (!(T > 0.0)) throw DomainError("bound_quantity: horizon must be positive");
  KernelDistanceProfile profile;
  profile.T = T;
  profile.domination_constant = domination_constant(K, Kbar, T);
  if (K == Kbar) return profile;

  const QuadratureOptions inner = tightened(opts);
  profile.l1_diff_T = l1_diff(K, Kbar, T, opts);
  profile.l1_sqdiff_T = l1_sqdiff(K, Kbar, T, opts);

  // The outer integrands behave like t^(e + 1) near 0, e being the inner
  // singular exponent; grade so the first cell error is O(n^-4).
  const double e = pair_exponent(K, Kbar);
  const auto points = pair_breakpoints(K, Kbar, T);
  const double diff_grading = std::max(1.0, 4.0 / (e + 2.0));
  const double sqdiff_grading = std::max(1.0, 4.0 / (2.0 * e + 2.0));
  profile.diff_component = graded_outer_integral(
      [&](double t) { return l1_diff(K, Kbar, t, inner); }, points, diff_grading, opts);
  profile.sqdiff_component = graded_outer_integral(
      [&](double t) { return l1_sqdiff(K, Kbar, t, inner); }, points, sqdiff_grading, opts);
  profile.bound_quantity = profile.diff_component + profile.sqdiff_component;
  return profile;
}

double covariance(const Kernel& kernel, double s, double t, const QuadratureOptions& opts) {
  if (s < 0.0 || t < 0.0 || std::isnan(s) || std::isnan(t)) {
    throw DomainError("covariance: negative time");
  }
  const double a = std::min(s, t);
  const double d = std::abs(t - s);
  if (a == 0.0) return 0.0;
  if (d == 0.0) return l2_norm_sq(kernel, a);
  if (kernel.family() == KernelFamily::SumOfExponentials) {
    const auto& x = kernel.nodes();
    const auto& w = kernel.weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        sum += w[i] * w[j] * std::exp(-x[j] * d) * exp_integral(x[i] + x[j], a);
      }
    }
    return kernel.scale() * kernel.scale() * sum;
  }
  // With r = min(s,t) - u the integrand is K(r) K(r + d) on [0, a].
  auto g = [&](double r) { return r <= 0.0 ? 0.0 : eval(kernel, r) * eval(kernel, r + d); };
  std::vector<double> points;
  if (kernel.has_tau()) {
    for (double p : {kernel.tau(), kernel.tau() - d}) {
      if (p > 0.0 && p < a) points.push_back(p);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  points.push_back(a);
  return integrate_pieces(g, points, kernel.singular_exponent(), opts);
}

std::map<std::string, std::string> to_config(const Kernel& kernel) {
  std::map<std::string, std::string> block;
  block["family"] = std::string(to_string(kernel.family()));
  block["scale"] = format_double(kernel.scale());
  if (kernel.family() == KernelFamily::SumOfExponentials) {
    block["nodes"] = format_list(kernel.nodes());
    block["weights"] = format_list(kernel.weights());
  } else {
    block["H"] = format_double(kernel.H());
    if (kernel.has_tau()) block["tau"] = format_double(kernel.tau());
  }
  return block;
}

Kernel kernel_from_config(const std::map<std::string, std::string>& block) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = block.find(key);
    if (it == block.end()) throw ConfigError("kernel block is missing key '" + key + "'");
    return it->second;
  };
  for (const auto& [key, value] : block) {
    if (key != "family" && key != "H" && key != "tau" && key != "scale" && key != "nodes" &&
        key != "weights") {
      throw ConfigError("unknown kernel key '" + key + "'");
    }
  }
  const KernelFamily family = kernel_family_from_string(trim(get("family")));
  auto reject = [&](const char* key) {
    if (block.count(key)) {
      throw ConfigError("key '" + std::string(key) + "' does not apply to family " +
                        std::string(to_string(family)));
    }
  };
  if (family == KernelFamily::SumOfExponentials) {
    reject("H");
    reject("tau");
  } else {
    reject("nodes");
    reject("weights");
    if (family == KernelFamily::Fractional) reject("tau");
  }
  const double scale = block.count("scale") ? parse_double(block.at("scale")) : 1.0;
  try {
    switch (family) {
      case KernelFamily::Fractional:
        return Kernel::fractional(parse_double(get("H")), scale);
      case KernelFamily::Smoothed:
        return Kernel::smoothed(parse_double(get("H")), parse_double(get("tau")), scale);
      case KernelFamily::Truncated:
        return Kernel::truncated(parse_double(get("H")), parse_double(get("tau")), scale);
      case KernelFamily::SumOfExponentials:
        return Kernel::sum_of_exponentials(parse_list(get("nodes")), parse_list(get("weights")),
                                           scale);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unreachable kernel family");
}

}  // namespace volterra
