#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hyperctrl/model.hpp"

namespace hyperctrl {

// Sampled (u, v) pair over the grid nodes at one time instant.
struct StateProfile {
  double t = 0;
  std::vector<double> u;
  std::vector<double> v;
};

double norm_inf(const StateProfile& s);
bool all_finite(const StateProfile& s);
StateProfile make_profile(const Grid& grid, const CoeffFn& u0, const CoeffFn& v0);

// Boundary input U(t). Held inputs are right-continuous: a callback or
// hook value replaces the signal from its step time onward.
class InputSignal {
 public:
  using Callback = std::function<double(double t, const StateProfile& s)>;

  static InputSignal constant(double value);
  static InputSignal sampled(std::vector<std::pair<double, double>> table);
  static InputSignal callback(Callback fn);

  bool is_callback() const { return static_cast<bool>(fn_); }
  double consult(double t, const StateProfile& s) const { return fn_(t, s); }
  // Value of a constant/sampled signal at time t (hold semantics).
  double value_at(double t) const;

 private:
  InputSignal() = default;
  double value_ = 0;
  std::vector<std::pair<double, double>> table_;
  Callback fn_;
};

struct BoundarySample {
  double t, v0, u0, U;
};

struct TriggerEvent {
  double t, U_old, U_new, trigger_value;
};

struct Trajectory {
  std::vector<StateProfile> profiles;        // strictly increasing t
  std::vector<BoundarySample> boundary_trace;
  std::vector<TriggerEvent> events;          // filled by closed-loop runs
};

// Spatial right-hand side of the first-order upwind semi-discretization.
// Free nodes are u_1..u_N and v_0..v_{N-1}; u_0 = g(v_0, t) and
// v_N = U(t) are algebraic closures re-applied after every stage.
// Coupling expressions are partially evaluated per node once, which is
// what keeps the prediction loops cheap.
class RightHandSide {
 public:
  RightHandSide(const SystemModel& m, Grid grid);

  const Grid& grid() const { return grid_; }
  double k_lambda() const { return k_lambda_; }
  // CFL-safe step, factor 0.5: dt = 0.5 h / k_lambda.
  double dt() const { return 0.5 * grid_.h() / k_lambda_; }

  double lambda_u_node(int i) const { return lam_u_[i]; }
  double lambda_v_node(int i) const { return lam_v_[i]; }
  const CoeffFn& f_u_node(int i) const { return fu_[i]; }
  const CoeffFn& f_v_node(int i) const { return fv_[i]; }
  const CoeffFn& g() const { return g_; }
  const SystemModel& model() const { return model_; }

  void apply_closures(StateProfile& s, double input_value) const;
  // Derivatives of the free nodes; slots 0 of u_dot and N of v_dot are zeroed.
  void eval(const std::vector<double>& u, const std::vector<double>& v,
            std::vector<double>& u_dot, std::vector<double>& v_dot) const;

 private:
  SystemModel model_;
  Grid grid_;
  double k_lambda_ = 0;
  std::vector<double> lam_u_, lam_v_;
  std::vector<CoeffFn> fu_, fv_;  // bound to x_i, arguments (u, v)
  CoeffFn g_;
};

RightHandSide semi_discretize(const SystemModel& m, Grid grid);

// One classical RK4 step of the free nodes with algebraic closures
// re-applied after each stage. `input_at` supplies U at stage times.
// Throws ValidationError if dt violates the CFL bound and BlowupError if
// the result is non-finite or leaves the sane range.
StateProfile step(const RightHandSide& rhs, const StateProfile& s,
                  const std::function<double(double)>& input_at, double dt);
StateProfile step(const RightHandSide& rhs, const StateProfile& s, const InputSignal& input,
                  double dt);

// Fixed-step march with dt = rhs.dt(), the final step truncated to land
// on t_end exactly. The hook runs at the initial instant and after every
// accepted step; a value returned from it replaces the held input from
// that time onward (this is how the event-triggered loop is wired).
using StepHook = std::function<std::optional<double>(double t, const StateProfile& s)>;
Trajectory simulate(const RightHandSide& rhs, const StateProfile& s0, const InputSignal& input,
                    double t_end, const StepHook& hook = {});

// Integrates dz/ds = lambda_u(z) from z(t0) = x0, clipped at z = 1.
// Validation helper, not part of the control path.
std::vector<std::pair<double, double>> trace_characteristic(const SystemModel& m, double x0,
                                                            double t0, double t1);

}  // namespace hyperctrl
