#pragma once

#include <functional>
#include <string>
#include <vector>

#include "volterra/expression.hpp"
#include "volterra/kernels.hpp"
#include "volterra/sampler.hpp"

namespace volterra {

enum class ModelVariant { RoughBergomi, Dissipation, Custom };

std::string_view to_string(ModelVariant variant);
ModelVariant model_variant_from_string(std::string_view name);

using Coefficient = std::function<double(double t, double v)>;

/// Coefficient pair of the integrated process
///   X_t = X0 + int_0^t b(s, V_s) ds + int_0^t sigma(s, V_s) dB_s.
///
/// The built-in variants normalise their exponentials with the variance of
/// the reference fractional kernel scale * t^(H - 1/2), i.e.
///   var_ref(t) = scale^2 t^(2H) / (2H),
/// and the same functions b, sigma are used whatever kernel produced V.
struct ModelSpec {
  ModelVariant variant = ModelVariant::Custom;
  double nu = 0.0;
  double H = 0.0;
  double scale = 1.0;
  double rho = 0.0;
  double X0 = 0.0;
  Coefficient b;
  Coefficient sigma;
  /// Source text of the coefficients (Custom models built from expressions).
  std::string b_text;
  std::string sigma_text;

  /// b = -1/2 exp(nu v - nu^2/2 t^(2H)), sigma = exp(nu v/2 - nu^2/4 t^(2H)),
  /// with reference scale sqrt(2H) so var_ref(t) = t^(2H).
  static ModelSpec rough_bergomi(double nu, double H, double rho, double X0 = 0.0);
  /// Pure drift b = exp(nu v - nu^2/2 var_ref(t)), sigma = 0.
  static ModelSpec dissipation(double nu, double H, double scale = 1.0, double X0 = 0.0);
  static ModelSpec custom(Coefficient b, Coefficient sigma, double rho, double X0 = 0.0);
  static ModelSpec custom(const std::string& b_expr, const std::string& sigma_expr, double rho,
                          double X0 = 0.0);

  double rho_hat() const;
  double reference_variance(double t) const;
  /// The reference kernel scale * t^(H - 1/2).
  Kernel reference_kernel() const;
};

struct EvolveResult {
  double X_T = 0.0;
  /// False when a coefficient or the state became non-finite; X_T is then
  /// meaningless and the replication is counted as rejected.
  bool finite = true;
  int failed_step = -1;
};

/// Left-point Euler-Maruyama:
///   X_{k+1} = X_k + b(t_k, V_k) dt_k + sigma(t_k, V_k) dB_k.
/// The full path (length n+1) is written to `path` when given.
EvolveResult euler_evolve(const ModelSpec& model, const PathBundle& bundle,
                          std::vector<double>* path = nullptr);

struct ValidityReport {
  /// False when a hard violation was found.
  bool pass = true;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  /// Coefficient envelope note, or "unchecked" for Custom models.
  std::string coefficients;
  double domination_constant = 0.0;
};

/// Runtime checks of the kernel and coefficient hypotheses: H in (0, 1/2),
/// K non-increasing and non-negative on a 1000-point grid, finite Kbar <= c K.
ValidityReport validate_hypotheses(const ModelSpec& model, const Kernel& K, const Kernel& Kbar,
                                   double T);

}  // namespace volterra
