#include "volterra/weakerror.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "volterra/errors.hpp"
#include "volterra/expression.hpp"
#include "volterra/parallel.hpp"
#include "volterra/stats.hpp"
#include "volterra/quadrature.hpp"

namespace volterra {

TestFunction TestFunction::builtin(const std::string& name) {
  TestFunction phi;
  phi.name_ = name;
  if (name == "square") {
    phi.f_ = [](double x) { return x * x; };
    phi.d2_ = [](double) { return 2.0; };
    phi.polynomial_ = true;
  } else if (name == "cos") {
    phi.f_ = [](double x) { return std::cos(x); };
    phi.d2_ = [](double x) { return -std::cos(x); };
  } else if (name == "exp_neg") {
    phi.f_ = [](double x) { return std::exp(-x * x); };
    phi.d2_ = [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); };
  } else if (name == "poly4") {
    phi.f_ = [](double x) { return x * x * x * x; };
    phi.d2_ = [](double x) { return 12.0 * x * x; };
    phi.polynomial_ = true;
  } else {
    throw ConfigError("unknown test function '" + name + "'");
  }
  return phi;
}

TestFunction TestFunction::custom(const std::string& expression) {
  const auto e = Expression::parse(expression);
  TestFunction phi;
  phi.name_ = expression;
  phi.f_ = [e](double x) { return e(0.0, x); };
  return phi;
}

TestFunction TestFunction::from_string(const std::string& text) {
  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), text) != names.end()) return builtin(text);
  return custom(text);
}

const std::vector<std::string>& TestFunction::builtin_names() {
  static const std::vector<std::string> names{"square", "cos", "exp_neg", "poly4"};
  return names;
}

double TestFunction::second_derivative(double x) const {
  if (!d2_) throw DomainError("test function '" + name_ + "' has no second derivative");
  return d2_(x);
}

double gaussian_expectation(const std::function<double(double)>& f, double variance) {
  if (!(variance >= 0.0)) throw DomainError("gaussian_expectation: variance must be >= 0");
  if (variance == 0.0) return f(0.0);
  const auto& rule = gauss_hermite_64();
  const double s = std::sqrt(2.0 * variance);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(s * rule.nodes[i]);
  return sum / std::sqrt(std::numbers::pi);
}

double gaussian_expectation_adaptive(const std::function<double(double)>& f, double variance) {
  if (!(variance >= 0.0)) throw DomainError("gaussian_expectation: variance must be >= 0");
  if (variance == 0.0) return f(0.0);
  const double s = std::sqrt(variance);
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto g = [&](double z) { return f(s * z) * c * std::exp(-0.5 * z * z); };
  // exp(-z^2/2) underflows past |z| = 39.
  const QuadratureOptions opts{1e-15, 1e-13, std::size_t{1} << 20};
  return integrate(g, -39.0, 0.0, opts).value + integrate(g, 0.0, 39.0, opts).value;
}

double gaussian_expectation(const TestFunction& phi, double variance) {
  if (phi.is_polynomial()) return gaussian_expectation([&](double x) { return phi(x); }, variance);
  return gaussian_expectation_adaptive([&](double x) { return phi(x); }, variance);
}

double gaussian_moment(int order, double variance) {
  if (order < 0 || order % 2 != 0) throw DomainError("gaussian_moment: order must be even and >= 0");
  if (!(variance >= 0.0)) throw DomainError("gaussian_moment: variance must be >= 0");
  double m = 1.0;
  for (int j = order - 1; j > 1; j -= 2) m *= j;
  return m * std::pow(variance, order / 2);
}

double gaussian_w1(double sigma, double sigma_bar) {
  if (!(sigma >= 0.0 && sigma_bar >= 0.0)) throw DomainError("gaussian_w1: sigmas must be >= 0");
  return std::sqrt(2.0 / std::numbers::pi) * std::abs(sigma - sigma_bar);
}

ExactWeakError volterra_weak_error_exact(const TestFunction& phi, const Kernel& K,
                                         const Kernel& Kbar, double T) {
  if (!(T > 0.0)) throw DomainError("volterra_weak_error_exact: T must be positive");
  ExactWeakError out;
  const double norm = l2_norm_sq(K, T);
  const double norm_bar = l2_norm_sq(Kbar, T);
  out.direct = gaussian_expectation(phi, norm_bar) - gaussian_expectation(phi, norm);
  if (K == Kbar) {
    out.discrepancy = std::abs(out.direct);
    return out;
  }

  auto integrand = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double k = eval(K, r), kb = eval(Kbar, r);
    const double s = std::max(0.0, l2_norm_sq(K, r) + norm_bar - l2_norm_sq(Kbar, r));
    auto d2 = [&](double x) { return phi.second_derivative(x); };
    const double e = phi.is_polynomial() ? gaussian_expectation(d2, s)
                                         : gaussian_expectation_adaptive(d2, s);
    return 0.5 * (kb * kb - k * k) * e;
  };
  const QuadratureOptions opts{1e-12, 1e-10, std::size_t{1} << 20};
  const double exponent =
      std::min({0.0, 2.0 * K.singular_exponent(), 2.0 * Kbar.singular_exponent()});
  double split = T;
  for (const Kernel* k : {&K, &Kbar}) {
    if (k->has_tau() && k->tau() < split) split = k->tau();
  }
  out.expansion = integrate_singular(integrand, 0.0, split, exponent, opts).value;
  if (split < T) out.expansion += integrate(integrand, split, T, opts).value;
  out.discrepancy = std::abs(out.expansion - out.direct);
  return out;
}

namespace {

// Seed offset for the uncoupled comparison run.
constexpr std::uint64_t kIndependentSalt = 0xD1B54A32D192ED03ULL;

}  // namespace

WeakErrorReport coupled_weak_error(const ModelSpec& model, const Kernel& K, const Kernel& Kbar,
                                   const TimeGrid& grid, const TestFunction& phi,
                                   const CoupledOptions& opts) {
  const auto fact = factorize_joint(K, grid);
  if (K == Kbar) return coupled_weak_error(model, fact, fact, phi, opts);
  return coupled_weak_error(model, fact, factorize_joint(Kbar, grid), phi, opts);
}

WeakErrorReport coupled_weak_error(const ModelSpec& model, const JointFactorization& fact,
                                   const JointFactorization& fact_bar, const TestFunction& phi,
                                   const CoupledOptions& opts) {
  if (!(fact.grid() == fact_bar.grid())) {
    throw std::invalid_argument("coupled_weak_error: factorizations use different grids");
  }
  if (opts.replications < 2) throw std::invalid_argument("coupled_weak_error: need N >= 2");
  const int n = fact.grid().steps();
  const std::int64_t N = opts.replications;
  const int batches = static_cast<int>(std::clamp<std::int64_t>(opts.batches, 1, N));

  std::vector<RunningStats> parts(batches);
  auto run_batch = [&](int b) {
    long long lo, hi;
    batch_range(N, batches, b, lo, hi);
    RunningStats acc;
    for (long long r = lo; r < hi; ++r) {
      const StreamId id{opts.seed, static_cast<std::uint64_t>(r)};
      const auto z = draw_normals(id, n, n);
      const auto path = sample_exact(fact, model.rho, z);
      const auto path_bar =
          opts.independent
              ? sample_exact(fact_bar, model.rho,
                             draw_normals({opts.seed ^ kIndependentSalt, id.replication}, n, n))
              : sample_exact(fact_bar, model.rho, z);
      const auto x = euler_evolve(model, path);
      const auto xb = euler_evolve(model, path_bar);
      const double d = phi(x.X_T) - phi(xb.X_T);
      if (!x.finite || !xb.finite || !std::isfinite(d)) {
        ++acc.rejected;
        continue;
      }
      acc.add(d);
    }
    parts[b] = acc;
  };

  for_each_batch(batches, opts.threads, run_batch);

  const RunningStats total = reduce_pairwise(parts);
  WeakErrorReport report;
  report.n_replications = N;
  report.seed = opts.seed;
  report.rejections = total.rejected;
  report.estimate = total.mean;
  report.sample_variance = total.variance();
  report.ci_half_width =
      total.count > 0.0 ? 1.96 * std::sqrt(report.sample_variance / total.count) : 0.0;
  if (opts.compute_bound) {
    report.profile = bound_quantity(fact.kernel(), fact_bar.kernel(), fact.grid().T());
    report.bound_quantity = report.profile.bound_quantity;
  }
  return report;
}

RateFit rate_study(const std::vector<RatePoint>& points) {
  RateFit fit;
  for (const auto& p : points) {
    const double m = std::abs(p.magnitude);
    if (!(m > 0.0) || m < 3.0 * p.ci || !(p.parameter > 0.0) || !std::isfinite(m)) {
      ++fit.excluded;
    } else {
      fit.used.push_back(p);
    }
  }
  if (fit.used.size() < 3) {
    throw DomainError("rate_study: fewer than 3 points above the noise floor (" +
                      std::to_string(fit.used.size()) + " usable)");
  }
  const double k = static_cast<double>(fit.used.size());
  double sx = 0, sy = 0;
  for (const auto& p : fit.used) {
    sx += std::log(p.parameter);
    sy += std::log(std::abs(p.magnitude));
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : fit.used) {
    const double dx = std::log(p.parameter) - mx, dy = std::log(std::abs(p.magnitude)) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DomainError("rate_study: parameters must not all be equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : std::min(1.0, sxy * sxy / (sxx * syy));
  return fit;
}

EnvelopeFit fit_envelope(const std::vector<double>& errors, const std::vector<double>& bounds,
                         double tolerance) {
  if (errors.size() != bounds.size() || errors.empty()) {
    throw std::invalid_argument("fit_envelope: need equally many errors and bounds");
  }
  EnvelopeFit fit;
  fit.min_ratio = INFINITY;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(bounds[i] > 0.0)) throw DomainError("fit_envelope: bound quantities must be positive");
    const double r = std::abs(errors[i]) / bounds[i];
    fit.min_ratio = std::min(fit.min_ratio, r);
    fit.max_ratio = std::max(fit.max_ratio, r);
  }
  fit.C = fit.max_ratio;
  fit.stable = fit.max_ratio * (1.0 - tolerance) <= fit.min_ratio * (1.0 + tolerance);
  return fit;
}

std::string report_to_json(const WeakErrorReport& report, const ConfigEcho& echo) {
  nlohmann::ordered_json j;
  j["estimate"] = report.estimate;
  j["ci"] = report.ci_half_width;
  j["bound_quantity"] = report.bound_quantity;
  j["n"] = report.n_replications;
  j["seed"] = report.seed;
  j["rejections"] = report.rejections;
  nlohmann::ordered_json e = nlohmann::ordered_json::object();
  for (const auto& [section, block] : echo) {
    for (const auto& [key, value] : block) e[section][key] = value;
  }
  j["config_echo"] = e;
  return j.dump(2) + "\n";
}

}  // namespace volterra
