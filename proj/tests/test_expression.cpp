#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hyperctrl/expression.hpp"

using hyperctrl::CoeffFn;
using hyperctrl::ParseError;

namespace {

// Deterministic uniform in [lo, hi) independent of distribution internals.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u01;
}

}  // namespace

TEST_CASE("evaluates the coupling expression from the bundled example") {
  auto f = CoeffFn::parse("sin(u+v)/(3-x)", {"u", "v", "x"});
  CHECK(f(1.0, 1.0, 0.0) == doctest::Approx(std::sin(2.0) / 3.0).epsilon(1e-15));
}

TEST_CASE("zero source parses with any signature") {
  auto z3 = CoeffFn::parse("0", {"u", "v", "x"});
  CHECK(z3(0.3, -1.2, 0.5) == 0.0);
  CHECK(z3.is_constant_zero());
  auto z1 = CoeffFn::parse("0", {"x"});
  CHECK(z1(0.9) == 0.0);
}

TEST_CASE("case splits on x") {
  auto lam = CoeffFn::parse("case(x<0.5, 0.2, 2-x)", {"x"});
  CHECK(lam(0.75) == doctest::Approx(1.25).epsilon(1e-16));
  CHECK(lam(0.25) == 0.2);
  CHECK(lam(0.5) == 1.5);  // boundary goes to the else branch for strict <
  auto bp = lam.breakpoints("x");
  REQUIRE(bp.size() == 1);
  CHECK(bp[0] == 0.5);
}

TEST_CASE("case accepts flipped comparisons and constant-expression thresholds") {
  auto f = CoeffFn::parse("case(1/2 >= x, 1, 2)", {"x"});
  CHECK(f(0.4) == 1.0);
  CHECK(f(0.5) == 1.0);
  CHECK(f(0.6) == 2.0);
  CHECK(f.breakpoints("x") == std::vector<double>{0.5});
}

TEST_CASE("rejects malformed input with a useful position") {
  CHECK_THROWS_AS((void)CoeffFn::parse("sin(u+", {"u"}), ParseError);
  CHECK_THROWS_AS((void)CoeffFn::parse("1 + * 2", {}), ParseError);
  try {
    (void)CoeffFn::parse("1 + * 2", {});
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("rejects unknown identifiers") {
  CHECK_THROWS_WITH_AS((void)CoeffFn::parse("u+y", {"u", "v"}),
                       doctest::Contains("unknown identifier 'y'"), ParseError);
}

TEST_CASE("rejects wrong function arity") {
  CHECK_THROWS_WITH_AS((void)CoeffFn::parse("sin(u, v)", {"u", "v"}),
                       doctest::Contains("expects 1 argument"), ParseError);
  CHECK_THROWS_WITH_AS((void)CoeffFn::parse("min(u)", {"u"}),
                       doctest::Contains("expects 2 arguments"), ParseError);
}

TEST_CASE("rejects case conditions on state variables") {
  CHECK_THROWS_AS((void)CoeffFn::parse("case(u<0, 1, 2)", {"u", "v", "x"}), ParseError);
  CHECK_THROWS_AS((void)CoeffFn::parse("case(x<u, 1, 2)", {"u", "v", "x"}), ParseError);
}

TEST_CASE("repeated evaluation is bit-identical") {
  auto f = CoeffFn::parse("exp(u)*sin(v-0.25)/(1.5+x^2)", {"u", "v", "x"});
  double first = f(0.7, -0.3, 0.4);
  for (int i = 0; i < 100; ++i) {
    CHECK(f(0.7, -0.3, 0.4) == first);
  }
}

TEST_CASE("print then parse round-trips on random points") {
  std::vector<std::string> sources = {
      "sin(u+v)/(3-x)",
      "case(x<0.5, 0.2, 2-x)",
      "-v",
      "1+0.5*x",
      "min(u, max(v, -1))*exp(-x)",
      "2^-x + u/(v-4) - abs(v)",
      "u - -v",
      "-(u+v)^2",
      "case(x>=0.25, cos(u)*0.125, case(x<0.125, u, v))",
  };
  std::mt19937_64 rng(20240817u);
  for (const auto& src : sources) {
    CAPTURE(src);
    auto f = CoeffFn::parse(src, {"u", "v", "x"});
    auto g = CoeffFn::parse(f.to_string(), {"u", "v", "x"});
    CAPTURE(f.to_string());
    for (int i = 0; i < 1000; ++i) {
      double u = uniform(rng, -3, 3);
      double v = uniform(rng, -3, 3);
      double x = uniform(rng, 0, 1);
      double a = f(u, v, x);
      double b = g(u, v, x);
      if (std::isfinite(a)) {
        CHECK(std::fabs(a - b) <= 1e-15 * std::max(1.0, std::fabs(a)));
      }
    }
  }
}

TEST_CASE("binding a variable matches full evaluation bitwise") {
  auto f = CoeffFn::parse("sin(u+v)/(3-x) + case(x<0.5, 0.2, 2-x)*v", {"u", "v", "x"});
  std::mt19937_64 rng(7u);
  for (int k = 0; k < 20; ++k) {
    double x = uniform(rng, 0, 1);
    auto bound = f.bind("x", x);
    REQUIRE(bound.arity() == 2);
    for (int i = 0; i < 50; ++i) {
      double u = uniform(rng, -2, 2);
      double v = uniform(rng, -2, 2);
      CHECK(bound(u, v) == f(u, v, x));
    }
  }
}

TEST_CASE("binding resolves case splits away") {
  auto lam = CoeffFn::parse("case(x<0.5, 0.2, 2-x)", {"x"});
  auto left = lam.bind("x", 0.25);
  auto right = lam.bind("x", 0.75);
  CHECK(left(std::span<const double>{}) == 0.2);
  CHECK(right(std::span<const double>{}) == 1.25);
  CHECK(left.breakpoints("x").empty());
}

TEST_CASE("evaluation in the declared domain stays finite for the bundled model") {
  auto lam_u = CoeffFn::parse("case(x<0.5, 0.2, 2-x)", {"x"});
  auto lam_v = CoeffFn::parse("1+0.5*x", {"x"});
  auto f_u = CoeffFn::parse("sin(u+v)/(3-x)", {"u", "v", "x"});
  auto f_v = CoeffFn::parse("sin(v-u)", {"u", "v", "x"});
  auto g = CoeffFn::parse("-v", {"v", "t"});
  std::mt19937_64 rng(99u);
  for (int i = 0; i < 500; ++i) {
    double x = uniform(rng, 0, 1);
    double u = uniform(rng, -10, 10);
    double v = uniform(rng, -10, 10);
    double t = uniform(rng, 0, 20);
    CHECK(std::isfinite(lam_u(x)));
    CHECK(std::isfinite(lam_v(x)));
    CHECK(std::isfinite(f_u(u, v, x)));
    CHECK(std::isfinite(f_v(u, v, x)));
    CHECK(std::isfinite(g(v, t)));
  }
}
