#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "hyperctrl/linear.hpp"
#include "hyperctrl/predictor.hpp"

namespace hyperctrl {

// When and how aggressively the held input is recomputed.
//
//   fixed:            update when |trigger| > eps
//   state_dependent:  eps(t) = max(eps_min, gamma * ||w(.,t)||_inf)
//   periodic:         checks only at multiples of `period`, against
//                     eps/2, which keeps the boundary value within eps
//                     between checks
//
// `reference` is the tracked boundary value for v(0,.); zero for plain
// stabilization. The trigger compares the predicted boundary value
// against the reference at the arrival instant t + tau_v(0).
struct TriggerPolicy {
  enum class Kind { Fixed, StateDependent, Periodic };

  Kind kind = Kind::Fixed;
  double eps = 0.05;
  double eps_min = 0.05;
  double gamma = 0.25;
  double period = 0.1;
  CoeffFn reference = CoeffFn::parse("0", {"t"});

  static TriggerPolicy fixed(double eps);
  static TriggerPolicy state_dependent(double eps_min, double gamma);
  static TriggerPolicy periodic(double eps, double period);

  // Guarantee threshold eps(t); the periodic policy tests against half
  // of this at its check instants.
  double threshold(double norm_w) const;
  void validate() const;
};

struct ControllerState {
  double U_bar = 0;
  double t_last = 0;
  std::vector<TriggerEvent> event_log;
};

struct DiagnosticsSample {
  double t, norm_w_inf, v0, eps_t, U;
};

struct ClosedLoopRecord {
  Trajectory trajectory;
  std::vector<TriggerEvent> events;
  std::vector<DiagnosticsSample> diagnostics;
  double tau_v0 = 0;
  double min_dwell = std::numeric_limits<double>::infinity();
  double max_abs_v0_after_tau = 0;  // max |v(0,t) - reference(t)| for t >= tau_v0
  bool zeno_suspected = false;
};

// Event-triggered feedback: per integrator step, predict the capture
// line, solve the trigger value under the held input, and recompute the
// input only when the trigger leaves the policy band (strict
// inequality). With kernels attached, the trigger and the update come
// from the closed form and no prediction solve runs.
class EventTriggeredController {
 public:
  EventTriggeredController(const SystemModel& m, Grid grid, TriggerPolicy policy, double U0,
                           const KernelVector* kernels = nullptr);

  std::optional<double> on_step(double t, const StateProfile& s);

  const ControllerState& state() const { return state_; }
  const Predictor& predictor() const { return predictor_; }
  double tau_v0() const { return predictor_.tau_v0(); }
  bool zeno_suspected() const { return zeno_pairs_ > 100; }

 private:
  Predictor predictor_;
  TriggerPolicy policy_;
  ControllerState state_;
  const KernelVector* kernels_;
  double next_check_ = 0;
  long step_index_ = -1;
  long last_event_step_ = -2;
  int zeno_pairs_ = 0;
};

// U(t) = vbar*(1): predict, solve the target system upward from the
// reference value, and apply its terminal value.
double continuous_control(const Predictor& p, const StateProfile& w_t, double v0_target);
double continuous_control(const SystemModel& m, const Grid& grid, const StateProfile& w_t,
                          double v0_target = 0.0);

ClosedLoopRecord run_closed_loop(const SystemModel& m, Grid grid, const TriggerPolicy& policy,
                                 const StateProfile& w0, double U0, double t_end,
                                 const KernelVector* kernels = nullptr);
ClosedLoopRecord run_continuous_loop(const SystemModel& m, Grid grid, const CoeffFn& reference,
                                     const StateProfile& w0, double t_end);
ClosedLoopRecord run_open_loop(const SystemModel& m, Grid grid, const InputSignal& input,
                               const StateProfile& w0, double t_end);

}  // namespace hyperctrl
