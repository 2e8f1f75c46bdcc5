#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hyperctrl/errors.hpp"
#include "hyperctrl/sim.hpp"

using namespace hyperctrl;

namespace {

SystemModel example_model() {
  return SystemModel::parse("case(x<0.5, 0.2, 2-x)", "1+0.5*x", "sin(u+v)/(3-x)", "sin(v-u)",
                            "-v");
}

SystemModel transport_model() { return SystemModel::parse("1", "1", "0", "0", "0"); }

double bump(double x) { return std::exp(-100.0 * (x - 0.5) * (x - 0.5)); }

StateProfile zero_profile(const Grid& grid) {
  StateProfile s;
  s.u.assign(grid.n_nodes(), 0.0);
  s.v.assign(grid.n_nodes(), 0.0);
  return s;
}

}  // namespace

TEST_CASE("upwind difference of a linear profile is its slope, exactly") {
  Grid grid{20};
  RightHandSide rhs(transport_model(), grid);
  std::vector<double> u(grid.n_nodes()), v(grid.n_nodes(), 0.0);
  for (int i = 0; i < grid.n_nodes(); ++i) u[i] = 2.0 + 3.0 * grid.node(i);
  std::vector<double> du(grid.n_nodes()), dv(grid.n_nodes());
  rhs.eval(u, v, du, dv);
  for (int i = 1; i < grid.n_nodes(); ++i) {
    CHECK(du[i] == doctest::Approx(-3.0).epsilon(1e-12));
  }
}

TEST_CASE("zero state and zero input give a zero right-hand side") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  auto s = zero_profile(grid);
  std::vector<double> du(grid.n_nodes()), dv(grid.n_nodes());
  rhs.eval(s.u, s.v, du, dv);
  for (int i = 0; i < grid.n_nodes(); ++i) {
    CHECK(du[i] == 0.0);
    CHECK(dv[i] == 0.0);
  }
}

TEST_CASE("f_v vanishes on the diagonal of the example model") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  CHECK(rhs.f_v_node(0)(1.0, 1.0) == 0.0);
  std::vector<double> u(grid.n_nodes(), 1.0), v(grid.n_nodes(), 1.0);
  std::vector<double> du(grid.n_nodes()), dv(grid.n_nodes());
  rhs.eval(u, v, du, dv);
  CHECK(dv[0] == 0.0);  // transport term is zero on a constant, source is sin(0)
}

TEST_CASE("zero state stays zero under a step") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  auto s = zero_profile(grid);
  auto next = step(rhs, s, InputSignal::constant(0.0), rhs.dt());
  for (int i = 0; i < grid.n_nodes(); ++i) {
    CHECK(next.u[i] == 0.0);
    CHECK(next.v[i] == 0.0);
  }
}

TEST_CASE("CFL violation is rejected") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  auto s = zero_profile(grid);
  CHECK_THROWS_AS((void)step(rhs, s, InputSignal::constant(0.0), rhs.dt() * 1.02),
                  ValidationError);
}

TEST_CASE("pure transport moves a bump at unit speed with first-order error") {
  const double T = 0.25;
  double err_prev = 0;
  for (int n : {100, 200}) {
    Grid grid{n};
    RightHandSide rhs(transport_model(), grid);
    StateProfile s = make_profile(grid, CoeffFn::parse("exp(-100*(x-0.5)^2)", {"x"}),
                                  CoeffFn::parse("0", {"x"}));
    Trajectory traj = simulate(rhs, s, InputSignal::constant(0.0), T);
    const StateProfile& last = traj.profiles.back();
    double err = 0;
    for (int i = 0; i < grid.n_nodes(); ++i) {
      double x = grid.node(i);
      double exact = x - T >= 0.0 ? bump(x - T) : 0.0;
      err = std::max(err, std::fabs(last.u[i] - exact));
    }
    CHECK(err <= 12.0 * grid.h());
    if (n == 200) CHECK(err < err_prev);  // refining must help
    err_prev = err;
  }
}

TEST_CASE("open-loop example model is unstable") {
  Grid grid{200};
  RightHandSide rhs(example_model(), grid);
  StateProfile s = make_profile(grid, CoeffFn::parse("1", {"x"}), CoeffFn::parse("1", {"x"}));
  Trajectory traj = simulate(rhs, s, InputSignal::constant(0.0), 10.0);
  double max_norm = 0;
  for (const auto& p : traj.profiles) max_norm = std::max(max_norm, norm_inf(p));
  CHECK(max_norm > 1.5);
}

TEST_CASE("simulating an empty horizon returns only the initial profile") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  auto s = zero_profile(grid);
  s.t = 2.0;
  Trajectory traj = simulate(rhs, s, InputSignal::constant(0.0), 2.0);
  CHECK(traj.profiles.size() == 1);
  CHECK(traj.profiles[0].t == 2.0);
}

TEST_CASE("restart at a step boundary reproduces the direct run") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  StateProfile s0 = make_profile(grid, CoeffFn::parse("0.3*sin(3*x)", {"x"}),
                                 CoeffFn::parse("0.2*cos(2*x)-0.2", {"x"}));
  auto input = InputSignal::callback(
      [](double t, const StateProfile&) { return 0.1 * std::sin(t); });

  const double T = 150.0 * rhs.dt();
  Trajectory direct = simulate(rhs, s0, input, 2.0 * T);
  Trajectory first = simulate(rhs, s0, input, T);
  Trajectory second = simulate(rhs, first.profiles.back(), input, 2.0 * T);

  REQUIRE(direct.profiles.size() == first.profiles.size() + second.profiles.size() - 1);
  const StateProfile& d = direct.profiles.back();
  const StateProfile& r = second.profiles.back();
  for (int i = 0; i < grid.n_nodes(); ++i) {
    CHECK(std::fabs(d.u[i] - r.u[i]) <= 1e-10);
    CHECK(std::fabs(d.v[i] - r.v[i]) <= 1e-10);
  }
}

TEST_CASE("equilibrium is preserved to rounding over a long horizon") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  auto s = zero_profile(grid);
  Trajectory traj = simulate(rhs, s, InputSignal::constant(0.0), 10.0);
  for (const auto& p : traj.profiles) {
    CHECK(norm_inf(p) <= 1e-12);
  }
}

TEST_CASE("boundary closures hold at every stored profile") {
  Grid grid{50};
  SystemModel m = example_model();
  RightHandSide rhs(m, grid);
  StateProfile s0 = make_profile(grid, CoeffFn::parse("0.4*x", {"x"}),
                                 CoeffFn::parse("0.3", {"x"}));
  auto input = InputSignal::callback(
      [](double t, const StateProfile&) { return 0.2 * std::cos(t); });
  Trajectory traj = simulate(rhs, s0, input, 1.0);
  REQUIRE(traj.profiles.size() == traj.boundary_trace.size());
  for (std::size_t k = 0; k < traj.profiles.size(); ++k) {
    const auto& p = traj.profiles[k];
    CHECK(p.u[0] == m.g(p.v[0], p.t));
    CHECK(p.v[grid.n_cells] == traj.boundary_trace[k].U);
    if (k > 0) CHECK(p.t > traj.profiles[k - 1].t);
  }
}

TEST_CASE("reruns are bit-identical") {
  Grid grid{50};
  RightHandSide rhs(example_model(), grid);
  StateProfile s0 = make_profile(grid, CoeffFn::parse("1", {"x"}), CoeffFn::parse("1", {"x"}));
  Trajectory a = simulate(rhs, s0, InputSignal::constant(0.1), 3.0);
  Trajectory b = simulate(rhs, s0, InputSignal::constant(0.1), 3.0);
  REQUIRE(a.profiles.size() == b.profiles.size());
  for (std::size_t k = 0; k < a.profiles.size(); ++k) {
    CHECK(a.profiles[k].t == b.profiles[k].t);
    for (int i = 0; i < grid.n_nodes(); ++i) {
      CHECK(a.profiles[k].u[i] == b.profiles[k].u[i]);
      CHECK(a.profiles[k].v[i] == b.profiles[k].v[i]);
    }
  }
}

TEST_CASE("first-order self-convergence on the example model with a smooth input") {
  SystemModel m = example_model();
  auto u0 = CoeffFn::parse("0.5*sin(3.141592653589793*x)", {"x"});
  auto v0 = CoeffFn::parse("0.5*sin(3.141592653589793*x)", {"x"});
  auto input = InputSignal::callback(
      [](double t, const StateProfile&) { return 0.1 * std::sin(t); });

  auto final_profile = [&](int n) {
    Grid grid{n};
    RightHandSide rhs(m, grid);
    Trajectory traj = simulate(rhs, make_profile(grid, u0, v0), input, 1.0);
    return traj.profiles.back();
  };

  StateProfile ref = final_profile(400);
  auto dev = [&](const StateProfile& coarse) {
    int nc = static_cast<int>(coarse.u.size()) - 1;
    int stride = 400 / nc;
    double d = 0;
    for (int i = 0; i <= nc; ++i) {
      d = std::max(d, std::fabs(coarse.u[i] - ref.u[i * stride]));
      d = std::max(d, std::fabs(coarse.v[i] - ref.v[i * stride]));
    }
    return d;
  };

  double e25 = dev(final_profile(25));
  double e50 = dev(final_profile(50));
  double e100 = dev(final_profile(100));
  CAPTURE(e25);
  CAPTURE(e50);
  CAPTURE(e100);
  CHECK(e25 / e50 >= 1.5);
  CHECK(e25 / e50 <= 3.0);
  CHECK(e50 / e100 >= 1.5);
  CHECK(e50 / e100 <= 3.0);
}

TEST_CASE("blow-up is detected and reported") {
  SystemModel m = SystemModel::parse("1", "1", "3*u+v", "u+3*v", "0");
  Grid grid{25};
  RightHandSide rhs(m, grid);
  StateProfile s0 = make_profile(grid, CoeffFn::parse("1", {"x"}), CoeffFn::parse("1", {"x"}));
  CHECK_THROWS_AS((void)simulate(rhs, s0, InputSignal::constant(0.0), 20.0), BlowupError);
}

TEST_CASE("characteristic trace with unit speed is a straight line") {
  auto path = trace_characteristic(transport_model(), 0.2, 1.0, 1.5);
  for (const auto& [z, s] : path) {
    CHECK(z == doctest::Approx(std::min(1.0, 0.2 + (s - 1.0))).epsilon(1e-10));
  }
}

TEST_CASE("characteristic trace crosses the speed break where expected") {
  auto path = trace_characteristic(example_model(), 0.0, 0.0, 5.0);
  double crossing = -1;
  for (const auto& [z, s] : path) {
    if (z >= 0.5) {
      crossing = s;
      break;
    }
  }
  REQUIRE(crossing > 0);
  CHECK(crossing == doctest::Approx(2.5).epsilon(0.005));

  double prev = -1;
  for (const auto& [z, s] : path) {
    (void)s;
    CHECK(z >= prev);
    prev = z;
  }
}
