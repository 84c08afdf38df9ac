#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "volterra/quadrature.hpp"

namespace volterra {

enum class KernelFamily { Fractional, Smoothed, Truncated, SumOfExponentials };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// A non-negative convolution kernel K on [0, T].
///
///   Fractional         scale * t^(H - 1/2)
///   Smoothed           scale * (t + tau)^(H - 1/2)
///   Truncated          scale * max(t, tau)^(H - 1/2)
///   SumOfExponentials  scale * sum_i w_i exp(-x_i t)
///
/// Instances are immutable values; build them with the named constructors,
/// which validate the parameters.
class Kernel {
 public:
  static Kernel fractional(double H, double scale = 1.0);
  static Kernel smoothed(double H, double tau, double scale = 1.0);
  static Kernel truncated(double H, double tau, double scale = 1.0);
  static Kernel sum_of_exponentials(std::vector<double> nodes, std::vector<double> weights,
                                    double scale = 1.0);

  KernelFamily family() const noexcept { return family_; }
  double H() const noexcept { return H_; }
  double tau() const noexcept { return tau_; }
  double scale() const noexcept { return scale_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Power-law exponent of the leading behaviour at t -> 0 (H - 1/2 for the
  /// fractional family, 0 otherwise).
  double singular_exponent() const noexcept;
  bool has_tau() const noexcept {
    return family_ == KernelFamily::Smoothed || family_ == KernelFamily::Truncated;
  }

  bool operator==(const Kernel&) const = default;

 private:
  Kernel() = default;

  KernelFamily family_ = KernelFamily::Fractional;
  double H_ = 0.0;
  double tau_ = 0.0;
  double scale_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// K(t). Throws DomainError for t < 0, and for t <= 0 on the fractional family.
double eval(const Kernel& kernel, double t);

/// Primitive of K on [0, t] (closed form for every family).
double integral(const Kernel& kernel, double t);

/// ||K||^2 on [0, T]; closed form for every family.
double l2_norm_sq(const Kernel& kernel, double T);

/// ||K||^2 on [0, T] by adaptive quadrature only; independent of the closed forms.
double l2_norm_sq_quadrature(const Kernel& kernel, double T,
                             const QuadratureOptions& opts = {});

/// int_0^t |K - Kbar|.
double l1_diff(const Kernel& K, const Kernel& Kbar, double t, const QuadratureOptions& opts = {});

/// int_0^t |K^2 - Kbar^2|.
double l1_sqdiff(const Kernel& K, const Kernel& Kbar, double t,
                 const QuadratureOptions& opts = {});

/// ||K - Kbar|| on [0, t] (L2 distance, reported for context).
double l2_distance(const Kernel& K, const Kernel& Kbar, double t,
                   const QuadratureOptions& opts = {});

struct KernelDistanceProfile {
  double T = 0.0;
  double l1_diff_T = 0.0;
  double l1_sqdiff_T = 0.0;
  /// int_0^T l1_diff(t) dt
  double diff_component = 0.0;
  /// int_0^T l1_sqdiff(t) dt
  double sqdiff_component = 0.0;
  /// diff_component + sqdiff_component
  double bound_quantity = 0.0;
  /// max of Kbar / K over the validation grid.
  double domination_constant = 0.0;
};

/// Kernel-only factor of the weak-error bound:
///   int_0^T { ||K - Kbar||_L1[0,t] + ||K^2 - Kbar^2||_L1[0,t] } dt.
KernelDistanceProfile bound_quantity(const Kernel& K, const Kernel& Kbar, double T,
                                     const QuadratureOptions& opts = {});

/// max Kbar(r) / K(r) over a 4096-point log grid on [1e-12 T, T].
double domination_constant(const Kernel& K, const Kernel& Kbar, double T);

/// Cov(V_s, V_t) = int_0^{min(s,t)} K(s - u) K(t - u) du.
double covariance(const Kernel& kernel, double s, double t, const QuadratureOptions& opts = {});

/// Flat key-value form: family, H, tau, scale, nodes, weights. Decimal text
/// round-trips exactly.
std::map<std::string, std::string> to_config(const Kernel& kernel);
Kernel kernel_from_config(const std::map<std::string, std::string>& block);

}  // namespace volterra
