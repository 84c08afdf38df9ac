#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "volterra/kernels.hpp"
#include "volterra/models.hpp"
#include "volterra/sampler.hpp"

namespace volterra {

/// Test function phi with its second derivative when known.
///   square   x^2
///   cos      cos(x)
///   exp_neg  exp(-x^2)
///   poly4    x^4
/// Custom functions come from an expression in x and have no derivative.
class TestFunction {
 public:
  static TestFunction builtin(const std::string& name);
  static TestFunction custom(const std::string& expression);
  /// builtin() for the four names above, custom() otherwise.
  static TestFunction from_string(const std::string& text);
  static const std::vector<std::string>& builtin_names();

  const std::string& name() const noexcept { return name_; }
  double operator()(double x) const { return f_(x); }
  bool has_second_derivative() const noexcept { return static_cast<bool>(d2_); }
  /// square and poly4; Gauss-Hermite is exact for these.
  bool is_polynomial() const noexcept { return polynomial_; }
  /// Throws DomainError for custom functions.
  double second_derivative(double x) const;

 private:
  std::string name_;
  std::function<double(double)> f_;
  std::function<double(double)> d2_;
  bool polynomial_ = false;
};

/// E f(N(0, variance)) by 64-point Gauss-Hermite.
double gaussian_expectation(const std::function<double(double)>& f, double variance);
/// Adaptive Gauss-Kronrod on the standard normal density; resolves test
/// functions much narrower than the standard deviation.
double gaussian_expectation_adaptive(const std::function<double(double)>& f, double variance);
/// Gauss-Hermite for polynomial test functions, adaptive otherwise.
double gaussian_expectation(const TestFunction& phi, double variance);

/// E Z^order for Z ~ N(0, variance): variance^k (2k - 1)!! for order 2k.
/// Throws DomainError for odd or negative orders.
double gaussian_moment(int order, double variance);

/// W1 distance between N(0, sigma^2) and N(0, sigma_bar^2): sqrt(2/pi) |sigma - sigma_bar|.
double gaussian_w1(double sigma, double sigma_bar);

struct ExactWeakError {
  /// 1/2 int_0^T (Kbar(r)^2 - K(r)^2) E phi''(N(0, s(r))) dr,
  /// s(r) = ||K||^2_[0,r] + ||Kbar||^2_[r,T].
  double expansion = 0.0;
  /// E phi(N(0, ||Kbar||^2)) - E phi(N(0, ||K||^2)).
  double direct = 0.0;
  double discrepancy = 0.0;
};

/// E phi(Vbar_T) - E phi(V_T) for the pure Volterra process, by both routes.
ExactWeakError volterra_weak_error_exact(const TestFunction& phi, const Kernel& K,
                                         const Kernel& Kbar, double T);

struct CoupledOptions {
  std::int64_t replications = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Number of work batches; fixed independently of the thread count.
  int batches = 64;
  /// Drive Xbar with an unrelated stream instead of the shared one.
  bool independent = false;
  bool compute_bound = true;
};

struct WeakErrorReport {
  /// mean of phi(X_T) - phi(Xbar_T)
  double estimate = 0.0;
  double ci_half_width = 0.0;
  double sample_variance = 0.0;
  double bound_quantity = 0.0;
  KernelDistanceProfile profile;
  std::int64_t n_replications = 0;
  std::uint64_t seed = 0;
  std::int64_t rejections = 0;
};

/// Coupled Monte Carlo: X from K and Xbar from Kbar share dW, dWhat and the
/// residual normals of every replication.
WeakErrorReport coupled_weak_error(const ModelSpec& model, const Kernel& K, const Kernel& Kbar,
                                   const TimeGrid& grid, const TestFunction& phi,
                                   const CoupledOptions& opts);

/// Same as above with prebuilt factorizations (reused across a sweep).
WeakErrorReport coupled_weak_error(const ModelSpec& model, const JointFactorization& fact,
                                   const JointFactorization& fact_bar, const TestFunction& phi,
                                   const CoupledOptions& opts);

struct RatePoint {
  double parameter = 0.0;
  double magnitude = 0.0;
  double ci = 0.0;
};

struct RateFit {
  std::vector<RatePoint> used;
  int excluded = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log|magnitude| on log(parameter). Points with
/// |magnitude| < 3 ci (or zero) are excluded; fewer than three usable points
/// throw DomainError.
RateFit rate_study(const std::vector<RatePoint>& points);

/// One constant C with |error_i| <= C bound_i for every point of a sweep.
/// C is the largest ratio; the fit is stable when some C' puts every ratio
/// inside [(1 - tol) C', (1 + tol) C'], i.e. max / min <= (1 + tol) / (1 - tol).
struct EnvelopeFit {
  double C = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool stable = false;
};

EnvelopeFit fit_envelope(const std::vector<double>& errors, const std::vector<double>& bounds,
                         double tolerance = 0.2);

using ConfigEcho = std::map<std::string, std::map<std::string, std::string>>;

/// JSON object {estimate, ci, bound_quantity, n, seed, rejections, config_echo}.
std::string report_to_json(const WeakErrorReport& report, const ConfigEcho& echo);

}  // namespace volterra
