#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hyperctrl/errors.hpp"
#include "hyperctrl/model.hpp"

using namespace hyperctrl;

namespace {

SystemModel example_model() {
  return SystemModel::parse("case(x<0.5, 0.2, 2-x)", "1+0.5*x", "sin(u+v)/(3-x)", "sin(v-u)",
                            "-v");
}

// Independent oracle: dense midpoint rule, no interval logic shared with
// the library quadrature. Splits manually at the one breakpoint used in
// these tests.
double midpoint_integral(const CoeffFn& lambda, double a, double b) {
  const int n = 1 << 21;
  double h = (b - a) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += 1.0 / lambda(a + (i + 0.5) * h);
  }
  return sum * h;
}

}  // namespace

TEST_CASE("bundled example model validates with the expected extrema") {
  ModelBounds b = validate_model(example_model());
  CHECK(b.k_lambda == 1.5);
  CHECK(b.k_lambda_inv == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(b.l_f == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.l_g == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::isfinite(b.c1_emp));
  CHECK(std::isfinite(b.c2_emp));
  CHECK(b.c1_emp >= 0.0);
  CHECK(b.c2_emp >= 0.0);
}

TEST_CASE("zero speed is rejected") {
  auto m = SystemModel::parse("0", "1", "0", "0", "0");
  CHECK_THROWS_AS((void)validate_model(m), ValidationError);
}

TEST_CASE("speed negative on part of the domain is rejected") {
  auto m = SystemModel::parse("0.5-x", "1", "0", "0", "0");
  CHECK_THROWS_AS((void)validate_model(m), ValidationError);
}

TEST_CASE("nonzero coupling at the origin is rejected") {
  auto m = SystemModel::parse("1", "1", "u+1", "0", "0");
  CHECK_THROWS_WITH_AS((void)validate_model(m), doctest::Contains("equilibrium"), ValidationError);
  auto m2 = SystemModel::parse("1", "1", "0", "0", "1-cos(t)+v");
  CHECK_THROWS_AS((void)validate_model(m2), ValidationError);
}

TEST_CASE("sample count must be at least two") {
  CHECK_THROWS_AS((void)validate_model(example_model(), 1), ValidationError);
}

TEST_CASE("unit speeds give the identity travel times") {
  auto m = SystemModel::parse("1", "1", "0", "0", "0");
  for (double x : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    auto t = characteristic_times(m, x);
    CHECK(t.tau_u == doctest::Approx(x).epsilon(1e-12));
    CHECK(t.tau_v == doctest::Approx(1.0 - x).epsilon(1e-12));
  }
}

TEST_CASE("example model travel times match the analytic values") {
  auto m = example_model();

  // tau_v(0) = int_0^1 dx/(1+0.5x) = 2 ln(1.5)
  double tau_v0_expected = 2.0 * std::log(1.5);
  auto t0 = characteristic_times(m, 0.0);
  CHECK(t0.tau_v == doctest::Approx(tau_v0_expected).epsilon(1e-8));
  CHECK(t0.tau_v == doctest::Approx(midpoint_integral(m.lambda_v, 0.0, 1.0)).epsilon(1e-8));
  CHECK(t0.tau_u == 0.0);

  // tau_u(1) = 0.5/0.2 + int_0.5^1 dx/(2-x) = 2.5 + ln(1.5)
  double tau_u1_expected = 2.5 + std::log(1.5);
  auto t1 = characteristic_times(m, 1.0);
  CHECK(t1.tau_u == doctest::Approx(tau_u1_expected).epsilon(1e-8));
  double oracle = midpoint_integral(m.lambda_u, 0.0, 0.5) + midpoint_integral(m.lambda_u, 0.5, 1.0);
  CHECK(t1.tau_u == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(t1.tau_v == 0.0);
}

TEST_CASE("travel times are monotone and bounded by the inverse-speed bound") {
  auto m = example_model();
  ModelBounds b = validate_model(m);
  double prev_u = -1.0, prev_v = 2.0 * b.k_lambda_inv;
  for (int i = 0; i <= 20; ++i) {
    double x = i / 20.0;
    auto t = characteristic_times(m, x);
    CHECK(t.tau_u >= prev_u);
    CHECK(t.tau_v <= prev_v);
    CHECK(t.tau_u <= b.k_lambda_inv * x + 1e-9);
    CHECK(t.tau_v <= b.k_lambda_inv * (1.0 - x) + 1e-9);
    prev_u = t.tau_u;
    prev_v = t.tau_v;
  }
}

TEST_CASE("quadrature reports pathological coefficients") {
  // 1/x is not integrable at 0; the interval halving cannot settle.
  auto m = SystemModel::parse("x", "1", "0", "0", "0");
  CHECK_THROWS_AS((void)characteristic_times(m, 1.0), NumericsError);
}

TEST_CASE("x outside the domain is rejected") {
  auto m = example_model();
  CHECK_THROWS_AS((void)characteristic_times(m, -0.1), ValidationError);
  CHECK_THROWS_AS((void)characteristic_times(m, 1.1), ValidationError);
}
