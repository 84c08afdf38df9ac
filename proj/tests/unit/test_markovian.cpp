#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "volterra/errors.hpp"
#include "volterra/kernels.hpp"
#include "volterra/markovian.hpp"

using namespace volterra;

TEST_CASE("Laplace density reproduces the fractional kernel") {
  const double H = 0.25;
  auto laplace = [&](double t) {
    // Split at 1: the density is singular at 0, exp-sinh handles the tail.
    auto f = [&](double x) { return x <= 0 ? 0.0 : std::exp(-t * x) * laplace_density(H, x); };
    return oracle::integrate(f, 0.0, 1.0) + oracle::integrate_to_infinity(f, 1.0);
  };
  CHECK(laplace(1.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(laplace(0.25) == doctest::Approx(1.414214).epsilon(1e-6));
  CHECK(laplace(0.25) == doctest::Approx(eval(Kernel::fractional(H), 0.25)).epsilon(1e-9));
  for (double x : {1e-8, 0.5, 3.0, 1e9}) CHECK(laplace_density(0.1, x) > 0.0);
  CHECK_THROWS_AS(laplace_density(0.1, 0.0), DomainError);
  CHECK_THROWS_AS(laplace_density(0.1, -1.0), DomainError);
}

TEST_CASE("closed-form cell moments against quadrature") {
  const double H = 0.1;
  for (int k : {0, 1, 3}) {
    const double ref = oracle::integrate(
        [&](double x) { return std::pow(x, k) * laplace_density(H, x); }, 0.5, 4.0);
    CHECK(laplace_moment(H, k, 0.5, 4.0) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("one point on one cell is the mean of the restricted measure") {
  const auto rule = build_rule(0.1, RuleDesign{0.5, 4.0, 1, 1, false});
  REQUIRE(rule.nodes.size() == 1);
  // mpmath (30 digits): mean 1.91363141128007625654, mass 1.10817416865265249140
  CHECK(rule.nodes[0] == doctest::Approx(1.91363141128007625654).epsilon(1e-12));
  CHECK(rule.weights[0] == doctest::Approx(1.10817416865265249140).epsilon(1e-12));
}

TEST_CASE("cell rules integrate polynomials of degree 2p-1 exactly") {
  const double H = 0.2;
  for (int p : {1, 2, 3, 5, 8}) {
    const RuleDesign design{0.1, 50.0, 1, p, false};
    const auto rule = build_rule(H, design);
    for (int k = 0; k <= 2 * p - 1; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights[i] * std::pow(rule.nodes[i], k);
      }
      CHECK(sum == doctest::Approx(laplace_moment(H, k, 0.1, 50.0)).epsilon(1e-10));
    }
  }
}

TEST_CASE("rule invariants: positivity, complete monotonicity, domination") {
  for (double H : {0.05, 0.1, 0.25, 0.4}) {
    for (int p : {1, 2, 4}) {
      const auto rule = build_rule(H, default_design(H, 1.0, 1.0 / 256, 12, p));
      for (std::size_t i = 0; i < rule.weights.size(); ++i) {
        CHECK(rule.weights[i] > 0.0);
        if (i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
      }
      const auto K = Kernel::fractional(H);
      const auto Kbar = to_kernel(rule);
      double prev = INFINITY;
      double prev_slope = -INFINITY;
      const double h = 1e-3;
      for (int i = 1; i <= 1000; ++i) {
        const double t = i * h;
        const double v = eval(Kbar, t);
        CHECK(v >= 0.0);
        CHECK(v <= prev);
        CHECK(v <= eval(K, t));
        const double slope = eval(Kbar, t + h) - v;
        CHECK(slope >= prev_slope - 1e-12 * std::abs(prev_slope));
        prev = v;
        prev_slope = slope;
      }
      CHECK(domination_constant(K, Kbar, 1.0) <= 1.0);
    }
  }
}

TEST_CASE("lumping the lower tail keeps domination and tightens the kernel") {
  RuleDesign design{1e-2, 1e5, 10, 3, false};
  const auto plain = to_kernel(build_rule(0.1, design));
  design.lump_low_tail = true;
  const auto lumped = to_kernel(build_rule(0.1, design));
  const auto K = Kernel::fractional(0.1);
  CHECK(domination_constant(K, lumped, 1.0) <= 1.0);
  CHECK(eval(lumped, 1.0) > eval(plain, 1.0));
}

TEST_CASE("Laplace reconstruction inside the cuts") {
  const double H = 0.1;
  const RuleDesign design{1e-3, 1e5, 24, 6, false};
  const auto Kbar = to_kernel(build_rule(H, design));
  const double T = 1.0;
  for (double t : {1e-3, 1e-2, 0.1, 0.5, 1.0}) {
    const double ref = oracle::integrate(
        [&](double u) {
          const double x = std::exp(u);
          return std::exp(-t * x) * laplace_density(H, x) * x;
        },
        std::log(design.cut_low), std::log(design.cut_high));
    CHECK(std::abs(eval(Kbar, t) - ref) <= 1e-8 * std::pow(1e-3 * T, H - 0.5));
  }
}

TEST_CASE("L2 error decreases along a refinement ladder") {
  const auto K = Kernel::fractional(0.1);
  double last = INFINITY;
  for (int n : {4, 8, 16, 32, 64}) {
    const auto Kbar = to_kernel(build_rule(0.1, default_design(0.1, 1.0, 1.0 / n, n / 2, 2)));
    const double err = l2_distance(K, Kbar, 1.0);
    CHECK(err < last);
    last = err;
  }
  // Halving the node count of a wide rule loses accuracy.
  const auto wide = to_kernel(build_rule(0.1, RuleDesign{1e-4, 1e6, 20, 4, false}));
  const auto half = to_kernel(build_rule(0.1, RuleDesign{1e-4, 1e6, 10, 4, false}));
  CHECK(l2_distance(K, wide, 1.0) < l2_distance(K, half, 1.0));
}

TEST_CASE("to_kernel") {
  CHECK_THROWS(to_kernel(QuadratureRule{}));
  QuadratureRule constant;
  constant.nodes = {0.0};
  constant.weights = {1.0};
  const auto one = to_kernel(constant);
  CHECK(eval(one, 0.7) == 1.0);
  CHECK(l2_norm_sq(one, 2.0) == 2.0);

  const auto fine = to_kernel(build_rule(0.1, default_design(0.1, 1.0, 1e-6, 32, 4)), 1.0);
  CHECK(std::abs(eval(fine, 1.0) - 1.0) < 1e-3);
  const auto scaled = to_kernel(build_rule(0.1, default_design(0.1, 1.0, 1e-6, 32, 4)), 2.0);
  CHECK(eval(scaled, 0.3) == doctest::Approx(2.0 * eval(fine, 0.3)).epsilon(1e-14));
}

TEST_CASE("rule construction errors") {
  CHECK_THROWS_AS(build_rule(0.1, RuleDesign{0.0, 1.0, 1, 1, false}), DomainError);
  CHECK_THROWS_AS(build_rule(0.1, RuleDesign{2.0, 1.0, 1, 1, false}), DomainError);
  CHECK_THROWS_AS(build_rule(0.1, RuleDesign{1.0, 2.0, 0, 1, false}), DomainError);
  CHECK_THROWS_AS(build_rule(0.6, RuleDesign{1.0, 2.0, 1, 1, false}), DomainError);
  // Far too many points for one extremely wide cell.
  CHECK_THROWS_AS(build_rule(0.1, RuleDesign{1e-12, 1e12, 1, 400, false}), RuleConstructionError);
}

TEST_CASE("rule CSV dump") {
  const auto rule = build_rule(0.1, RuleDesign{1.0, 10.0, 1, 2, false});
  const auto csv = rule_to_csv(rule);
  CHECK(csv.rfind("x,w\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
