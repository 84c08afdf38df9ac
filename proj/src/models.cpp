#include "volterra/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "volterra/text.hpp"

namespace volterra {

std::string_view to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::RoughBergomi:
      return "rough_bergomi";
    case ModelVariant::Dissipation:
      return "dissipation";
    case ModelVariant::Custom:
      return "custom";
  }
  return "custom";
}

ModelVariant model_variant_from_string(std::string_view name) {
  if (name == "rough_bergomi") return ModelVariant::RoughBergomi;
  if (name == "dissipation") return ModelVariant::Dissipation;
  if (name == "custom") return ModelVariant::Custom;
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

namespace {

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
}

void check_H(double H) {
  if (!(H > 0.0 && H < 1.0)) throw std::invalid_argument("H must lie in (0, 1)");
}

}  // namespace

ModelSpec ModelSpec::rough_bergomi(double nu, double H, double rho, double X0) {
  check_H(H);
  check_rho(rho);
  ModelSpec m;
  m.variant = ModelVariant::RoughBergomi;
  m.nu = nu;
  m.H = H;
  m.scale = std::sqrt(2.0 * H);
  m.rho = rho;
  m.X0 = X0;
  m.b = [nu, H](double t, double v) {
    return -0.5 * std::exp(nu * v - 0.5 * nu * nu * std::pow(t, 2.0 * H));
  };
  m.sigma = [nu, H](double t, double v) {
    return std::exp(0.5 * nu * v - 0.25 * nu * nu * std::pow(t, 2.0 * H));
  };
  return m;
}

ModelSpec ModelSpec::dissipation(double nu, double H, double scale, double X0) {
  check_H(H);
  ModelSpec m;
  m.variant = ModelVariant::Dissipation;
  m.nu = nu;
  m.H = H;
  m.scale = scale;
  m.X0 = X0;
  const double c = scale * scale / (2.0 * H);
  m.b = [nu, H, c](double t, double v) {
    return std::exp(nu * v - 0.5 * nu * nu * c * std::pow(t, 2.0 * H));
  };
  m.sigma = [](double, double) { return 0.0; };
  return m;
}

ModelSpec ModelSpec::custom(Coefficient b, Coefficient sigma, double rho, double X0) {
  check_rho(rho);
  ModelSpec m;
  m.variant = ModelVariant::Custom;
  m.rho = rho;
  m.X0 = X0;
  m.b = std::move(b);
  m.sigma = std::move(sigma);
  return m;
}

ModelSpec ModelSpec::custom(const std::string& b_expr, const std::string& sigma_expr, double rho,
                            double X0) {
  const auto b = Expression::parse(b_expr);
  const auto sigma = Expression::parse(sigma_expr);
  ModelSpec m = custom(b, sigma, rho, X0);
  m.b_text = b_expr;
  m.sigma_text = sigma_expr;
  return m;
}

double ModelSpec::rho_hat() const { return std::sqrt(1.0 - rho * rho); }

double ModelSpec::reference_variance(double t) const {
  return scale * scale * std::pow(t, 2.0 * H) / (2.0 * H);
}

Kernel ModelSpec::reference_kernel() const { return Kernel::fractional(H, scale); }

EvolveResult euler_evolve(const ModelSpec& model, const PathBundle& bundle,
                          std::vector<double>* path) {
  const int n = bundle.grid.steps();
  const bool pure_drift = model.variant == ModelVariant::Dissipation;
  double x = model.X0;
  if (path) {
    path->assign(1, x);
    path->reserve(n + 1);
  }
  EvolveResult result;
  for (int k = 0; k < n; ++k) {
    const double t = bundle.grid.time(k);
    const double v = bundle.V[k];
    const double dt = bundle.grid.dt(k);
    double step = model.b(t, v) * dt;
    if (!pure_drift) {
      const double s = model.sigma(t, v);
      if (s != 0.0) step += s * (model.rho * bundle.dW[k] + model.rho_hat() * bundle.dWhat[k]);
    }
    x += step;
    if (!std::isfinite(x)) {
      result.finite = false;
      result.failed_step = k;
      result.X_T = x;
      return result;
    }
    if (path) path->push_back(x);
  }
  result.X_T = x;
  return result;
}

ValidityReport validate_hypotheses(const ModelSpec& model, const Kernel& K, const Kernel& Kbar,
                                   double T) {
  ValidityReport report;
  auto fail = [&](std::string why) {
    report.pass = false;
    report.failures.push_back(std::move(why));
  };

  for (const Kernel* k : {&K, &Kbar}) {
    if (k->family() == KernelFamily::SumOfExponentials) continue;
    if (k->H() == 0.5) {
      report.warnings.push_back("H = 1/2 (constant kernel) is outside (0,1/2)");
    } else if (!(k->H() > 0.0 && k->H() < 0.5)) {
      fail("H outside (0,1/2)");
    }
  }
  if (K.family() != KernelFamily::SumOfExponentials && model.variant != ModelVariant::Custom &&
      model.H != K.H()) {
    report.warnings.push_back("model H " + format_double(model.H) + " differs from kernel H " +
                              format_double(K.H()));
  }

  if (model.variant != ModelVariant::Custom && K.scale() != model.scale) {
    report.warnings.push_back("kernel scale " + format_double(K.scale()) +
                              " differs from the model's reference scale " +
                              format_double(model.scale));
  }

  // Monotonicity and sign on a 1000-point grid of (0, T].
  for (const Kernel* k : {&K, &Kbar}) {
    double prev = INFINITY;
    bool monotone = true, nonneg = true;
    for (int i = 1; i <= 1000; ++i) {
      const double v = eval(*k, T * i / 1000.0);
      if (v > prev * (1.0 + 1e-12)) monotone = false;
      if (!(v >= 0.0)) nonneg = false;
      prev = v;
    }
    const char* which = k == &K ? "K" : "Kbar";
    if (!nonneg) fail(std::string(which) + " is negative on (0,T]");
    if (!monotone) {
      if (k == &K) {
        fail("K is not non-increasing on (0,T]");
      } else {
        report.warnings.push_back("Kbar is not non-increasing on (0,T]");
      }
    }
  }

  report.domination_constant = domination_constant(K, Kbar, T);
  if (!std::isfinite(report.domination_constant)) fail("no finite c with Kbar <= c K");

  if (model.variant == ModelVariant::Custom) {
    report.coefficients = "unchecked";
  } else {
    std::ostringstream os;
    os << "exponential envelope: nu_b = " << format_double(model.nu)
       << ", nu_sigma = " << format_double(model.nu / 2.0);
    report.coefficients = os.str();
  }
  return report;
}

}  // namespace volterra
