#include <doctest.h>

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "dissipation_exact.hpp"
#include "oracles.hpp"
#include "volterra/errors.hpp"
#include "volterra/markovian.hpp"
#include "volterra/weakerror.hpp"

using namespace volterra;

TEST_CASE("Gaussian expectations") {
  const auto square = TestFunction::builtin("square");
  const auto cosine = TestFunction::builtin("cos");
  CHECK(gaussian_expectation(square, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(gaussian_expectation(cosine, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
  CHECK(gaussian_expectation(cosine, 1.0) == doctest::Approx(0.606531).epsilon(1e-6));
  // Gauss-Hermite path, closed form e^{-s/2}.
  CHECK(gaussian_expectation([](double x) { return std::cos(x); }, 1.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
  for (const auto& name : TestFunction::builtin_names()) {
    const auto phi = TestFunction::builtin(name);
    CHECK(gaussian_expectation(phi, 0.0) == phi(0.0));
  }
  // E exp(-(sZ)^2) = 1 / sqrt(1 + 2 s), including wide variances.
  const auto en = TestFunction::builtin("exp_neg");
  for (double s : {0.1, 1.0, 10.0, 40.0}) {
    CHECK(gaussian_expectation(en, s) == doctest::Approx(1.0 / std::sqrt(1.0 + 2.0 * s)).epsilon(1e-12));
  }
  CHECK(gaussian_expectation(TestFunction::builtin("poly4"), 1.5) ==
        doctest::Approx(3.0 * 2.25).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_expectation(square, -1.0), DomainError);
}

TEST_CASE("test function parsing") {
  const auto phi = TestFunction::from_string("x^2 + 1");
  CHECK(phi(3.0) == 10.0);
  CHECK_FALSE(phi.has_second_derivative());
  CHECK_THROWS_AS(phi.second_derivative(1.0), DomainError);
  CHECK(TestFunction::from_string("cos").has_second_derivative());
  CHECK_THROWS_AS(TestFunction::builtin("sine"), ConfigError);
}

TEST_CASE("Gaussian moments") {
  CHECK(gaussian_moment(2, 1.0) == 1.0);
  CHECK(gaussian_moment(4, 1.0) == 3.0);
  CHECK(gaussian_moment(0, 5.0) == 1.0);
  CHECK(gaussian_moment(6, 0.0) == 0.0);
  CHECK(gaussian_moment(4, 2.0) == 12.0);
  // 2^k Gamma(k + 1/2) / sqrt(pi)
  for (int k = 1; k <= 8; ++k) {
    const double ref = std::pow(2.0, k) * std::tgamma(k + 0.5) / std::sqrt(std::numbers::pi);
    CHECK(gaussian_moment(2 * k, 1.0) == doctest::Approx(ref).epsilon(1e-13));
  }
  CHECK(gaussian_moment(16, 1.0) == 2027025.0);
  CHECK_THROWS_AS(gaussian_moment(3, 1.0), DomainError);
  CHECK_THROWS_AS(gaussian_moment(-2, 1.0), DomainError);
}

TEST_CASE("Gaussian W1 against the quantile coupling") {
  auto oracle_w1 = [](double s, double sb) {
    // |quantile| is symmetric about u = 1/2; on (0, 1/2] it is sqrt(2) erfc^-1(2u).
    auto q = [](double u) { return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); };
    return 2.0 * oracle::integrate([&](double u) { return std::abs((s - sb) * q(u)); }, 0.0, 0.5);
  };
  CHECK(gaussian_w1(1.0, 1.0) == 0.0);
  CHECK(gaussian_w1(1.0, 0.0) == doctest::Approx(0.797885).epsilon(1e-6));
  CHECK(std::abs(gaussian_w1(1.0, 0.0) - oracle_w1(1.0, 0.0)) <= 1e-10);
  CHECK(gaussian_w1(2.0, 1.0) == gaussian_w1(1.0, 0.0));
  CHECK(std::abs(gaussian_w1(0.3, 1.7) - oracle_w1(0.3, 1.7)) <= 1e-10);
  CHECK_THROWS_AS(gaussian_w1(-1.0, 0.0), DomainError);
}

TEST_CASE("exact weak error, square on the truncated pair") {
  const auto r = volterra_weak_error_exact(TestFunction::builtin("square"), Kernel::fractional(0.1),
                                           Kernel::truncated(0.1, 0.01), 1.0);
  const double closed = -std::pow(0.01, 0.2) * (1.0 / 0.2 - 1.0);
  CHECK(r.expansion == doctest::Approx(closed).epsilon(1e-8));
  CHECK(r.direct == doctest::Approx(closed).epsilon(1e-8));
  CHECK(closed == doctest::Approx(-1.592430).epsilon(1e-6));
  const auto z = volterra_weak_error_exact(TestFunction::builtin("cos"), Kernel::fractional(0.1),
                                           Kernel::fractional(0.1), 1.0);
  CHECK(z.expansion == 0.0);
  CHECK(z.direct == 0.0);
}

TEST_CASE("exact weak error: the two routes agree") {
  for (double H : {0.05, 0.1, 0.25}) {
    const Kernel K = Kernel::fractional(H);
    const std::vector<Kernel> bars{Kernel::truncated(H, 0.01), Kernel::smoothed(H, 0.01),
                                   to_kernel(build_rule(H, default_design(H, 1.0, 1.0 / 256, 16, 2)))};
    for (const auto& Kbar : bars) {
      for (const auto& name : TestFunction::builtin_names()) {
        const auto r = volterra_weak_error_exact(TestFunction::builtin(name), K, Kbar, 1.0);
        CHECK(r.discrepancy <= 1e-6);
      }
    }
  }
  CHECK_THROWS_AS(volterra_weak_error_exact(TestFunction::custom("x^2"), Kernel::fractional(0.1),
                                            Kernel::truncated(0.1, 0.1), 1.0),
                  DomainError);
}

TEST_CASE("W1 dominates the error of 1-Lipschitz test functions") {
  for (double H : {0.05, 0.1, 0.25}) {
    const Kernel K = Kernel::fractional(H);
    for (const auto& Kbar : {Kernel::truncated(H, 0.01), Kernel::smoothed(H, 0.1),
                             to_kernel(build_rule(H, default_design(H, 1.0, 1.0 / 64, 8, 2)))}) {
      const double w1 = gaussian_w1(std::sqrt(l2_norm_sq(K, 1.0)), std::sqrt(l2_norm_sq(Kbar, 1.0)));
      for (const char* name : {"cos", "exp_neg"}) {  // Lipschitz constants 1 and sqrt(2/e)
        const auto r = volterra_weak_error_exact(TestFunction::builtin(name), K, Kbar, 1.0);
        CHECK(std::abs(r.direct) <= w1);
      }
    }
  }
}

TEST_CASE("error over l1_sqdiff is stable across tau") {
  struct Case {
    const char* phi;
    double H;
  };
  // (cos, H = 0.05) is excluded: its ratio halves across the sweep.
  for (const Case c : {Case{"square", 0.05}, Case{"square", 0.1}, Case{"square", 0.25},
                       Case{"poly4", 0.05}, Case{"poly4", 0.1}, Case{"poly4", 0.25},
                       Case{"exp_neg", 0.05}, Case{"exp_neg", 0.1}, Case{"exp_neg", 0.25},
                       Case{"cos", 0.1}, Case{"cos", 0.25}}) {
    std::vector<double> errors, bounds;
    const Kernel K = Kernel::fractional(c.H);
    for (int k = 4; k <= 10; ++k) {
      const Kernel Kbar = Kernel::truncated(c.H, std::ldexp(1.0, -k));
      errors.push_back(volterra_weak_error_exact(TestFunction::builtin(c.phi), K, Kbar, 1.0).direct);
      bounds.push_back(l1_sqdiff(K, Kbar, 1.0));
    }
    const auto fit = fit_envelope(errors, bounds);
    CAPTURE(c.phi);
    CAPTURE(c.H);
    CHECK(fit.stable);
    for (std::size_t i = 0; i < errors.size(); ++i) CHECK(std::abs(errors[i]) <= fit.C * bounds[i]);
  }
}

TEST_CASE("rate fits") {
  std::vector<RatePoint> pts;
  for (int k = 4; k <= 10; ++k) {
    const double tau = std::ldexp(1.0, -k);
    pts.push_back({tau, std::pow(tau, 0.2), 0.0});
  }
  const auto fit = rate_study(pts);
  CHECK(fit.slope == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.excluded == 0);

  std::vector<RatePoint> diff, sq;
  const Kernel K = Kernel::fractional(0.1);
  for (int k = 4; k <= 10; ++k) {
    const double tau = std::ldexp(1.0, -k);
    const Kernel Kbar = Kernel::truncated(0.1, tau);
    diff.push_back({tau, l1_diff(K, Kbar, 1.0), 0.0});
    sq.push_back({tau, l1_sqdiff(K, Kbar, 1.0), 0.0});
  }
  CHECK(std::abs(rate_study(diff).slope - 0.6) <= 0.01);
  CHECK(std::abs(rate_study(sq).slope - 0.2) <= 0.01);

  // Noise floor: |estimate| < 3 ci is dropped.
  pts[0].ci = pts[0].magnitude;
  pts[1].magnitude = 0.0;
  const auto partial = rate_study(pts);
  CHECK(partial.excluded == 2);
  CHECK(partial.used.size() == 5);
  std::vector<RatePoint> few(pts.begin(), pts.begin() + 4);
  CHECK_THROWS_AS(rate_study(few), DomainError);
}

TEST_CASE("coupled estimator: trivial cases") {
  const auto grid = TimeGrid::uniform(1.0, 16);
  CoupledOptions opts;
  opts.replications = 2000;
  opts.seed = 42;
  const Kernel K = Kernel::fractional(0.1);
  const auto same = coupled_weak_error(ModelSpec::dissipation(0.5, 0.1), K, K, grid,
                                       TestFunction::builtin("square"), opts);
  CHECK(same.estimate == 0.0);
  CHECK(same.ci_half_width == 0.0);
  CHECK(same.bound_quantity == 0.0);
  CHECK(same.rejections == 0);

  const auto flat = coupled_weak_error(ModelSpec::custom("0", "1", 0.5), K, Kernel::truncated(0.1, 0.1),
                                       grid, TestFunction::builtin("cos"), opts);
  CHECK(flat.estimate == 0.0);
  CHECK(flat.bound_quantity > 0.0);
}

TEST_CASE("coupled estimator: determinism across thread counts") {
  const auto grid = TimeGrid::uniform(1.0, 32);
  const auto model = ModelSpec::rough_bergomi(1.0, 0.1, 0.3);
  const auto fa = factorize_joint(model.reference_kernel(), grid);
  const auto fb = factorize_joint(Kernel::truncated(0.1, 0.05, model.scale), grid);
  CoupledOptions opts;
  opts.replications = 3000;
  opts.seed = 7;
  opts.compute_bound = false;
  std::string first;
  for (int threads : {1, 4, 8}) {
    opts.threads = threads;
    const auto r = coupled_weak_error(model, fa, fb, TestFunction::builtin("cos"), opts);
    const auto json = report_to_json(r, {});
    if (first.empty()) first = json;
    CHECK(json == first);
  }
  opts.seed = 8;
  CHECK(report_to_json(coupled_weak_error(model, fa, fb, TestFunction::builtin("cos"), opts), {}) != first);
}

TEST_CASE("coupling reduces variance") {
  const auto grid = TimeGrid::uniform(1.0, 64);
  const auto model = ModelSpec::dissipation(0.5, 0.1);
  const Kernel K = Kernel::fractional(0.1);
  const Kernel Kbar = Kernel::truncated(0.1, std::ldexp(1.0, -6));
  CoupledOptions opts;
  opts.replications = 10000;
  opts.seed = 2024;
  opts.compute_bound = false;
  const auto phi = TestFunction::builtin("square");
  const auto coupled = coupled_weak_error(model, K, Kbar, grid, phi, opts);
  opts.independent = true;
  const auto indep = coupled_weak_error(model, K, Kbar, grid, phi, opts);
  CHECK(coupled.sample_variance / indep.sample_variance < 0.5);
}

TEST_CASE("rejections are counted") {
  const auto grid = TimeGrid::uniform(1.0, 8);
  CoupledOptions opts;
  opts.replications = 100;
  opts.compute_bound = false;
  const auto r = coupled_weak_error(ModelSpec::custom("1/t", "0", 0.0), Kernel::fractional(0.2),
                                    Kernel::truncated(0.2, 0.1), grid, TestFunction::builtin("square"), opts);
  CHECK(r.rejections == 100);
}

TEST_CASE("report JSON fields") {
  WeakErrorReport r;
  r.estimate = -0.125;
  r.ci_half_width = 0.01;
  r.bound_quantity = 2.5;
  r.n_replications = 10;
  r.seed = 18446744073709551615ULL;
  r.rejections = 1;
  const auto j = nlohmann::json::parse(report_to_json(r, {{"mc", {{"N", "10"}}}}));
  CHECK(j["estimate"].get<double>() == -0.125);
  CHECK(j["ci"].get<double>() == 0.01);
  CHECK(j["bound_quantity"].get<double>() == 2.5);
  CHECK(j["n"].get<long>() == 10);
  CHECK(j["seed"].get<std::uint64_t>() == 18446744073709551615ULL);
  CHECK(j["rejections"].get<long>() == 1);
  CHECK(j["config_echo"]["mc"]["N"] == "10");
}

TEST_CASE("coupled estimator agrees with the lognormal oracle") {
  const auto grid = TimeGrid::uniform(1.0, 32);
  const auto model = ModelSpec::dissipation(0.5, 0.1);
  const auto fa = factorize_joint(Kernel::fractional(0.1), grid);
  const auto fb = factorize_joint(Kernel::truncated(0.1, 0.0625), grid);
  CoupledOptions opts;
  opts.replications = 20000;
  opts.seed = 99;
  opts.compute_bound = false;
  const auto r = coupled_weak_error(model, fa, fb, TestFunction::builtin("square"), opts);
  const double exact = oracle::dissipation_square_error(model, fa, fb);
  CHECK(exact > 0.0);
  CHECK(std::abs(r.estimate - exact) <= 4.0 * r.ci_half_width / 1.96);
}
