#include "hyperctrl/controller.hpp"

#include <algorithm>
#include <cmath>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

TriggerPolicy TriggerPolicy::fixed(double eps) {
  TriggerPolicy p;
  p.kind = Kind::Fixed;
  p.eps = eps;
  return p;
}

TriggerPolicy TriggerPolicy::state_dependent(double eps_min, double gamma) {
  TriggerPolicy p;
  p.kind = Kind::StateDependent;
  p.eps_min = eps_min;
  p.gamma = gamma;
  return p;
}

TriggerPolicy TriggerPolicy::periodic(double eps, double period) {
  TriggerPolicy p;
  p.kind = Kind::Periodic;
  p.eps = eps;
  p.period = period;
  return p;
}

double TriggerPolicy::threshold(double norm_w) const {
  switch (kind) {
    case Kind::StateDependent:
      return std::max(eps_min, gamma * norm_w);
    case Kind::Fixed:
    case Kind::Periodic:
      return eps;
  }
  return eps;
}

void TriggerPolicy::validate() const {
  switch (kind) {
    case Kind::Fixed:
      if (!(eps > 0)) throw ValidationError("trigger policy: eps must be positive");
      break;
    case Kind::StateDependent:
      if (!(eps_min > 0)) throw ValidationError("trigger policy: eps_min must be positive");
      if (!(gamma > 0)) throw ValidationError("trigger policy: gamma must be positive");
      break;
    case Kind::Periodic:
      if (!(eps > 0)) throw ValidationError("trigger policy: eps must be positive");
      if (!(period > 0)) throw ValidationError("trigger policy: period must be positive");
      break;
  }
  if (reference.arity() != 1) {
    throw ValidationError("trigger policy: reference must be a function of t");
  }
}

EventTriggeredController::EventTriggeredController(const SystemModel& m, Grid grid,
                                                   TriggerPolicy policy, double U0,
                                                   const KernelVector* kernels)
    : predictor_(m, grid), policy_(std::move(policy)), kernels_(kernels) {
  policy_.validate();
  if (kernels_ && kernels_->n_cells != grid.n_cells) {
    throw ValidationError("kernel grid does not match the controller grid");
  }
  if (kernels_ && !policy_.reference.is_constant_zero()) {
    throw ValidationError("closed-form kernels support stabilization only (reference 0)");
  }
  state_.U_bar = U0;
  state_.t_last = 0;
}

std::optional<double> EventTriggeredController::on_step(double t, const StateProfile& s) {
  ++step_index_;

  if (policy_.kind == TriggerPolicy::Kind::Periodic) {
    if (t + 1e-12 < next_check_) return state_.U_bar;
    next_check_ = (std::floor((t + 1e-12) / policy_.period) + 1.0) * policy_.period;
  }

  const double ref = policy_.reference(t + predictor_.tau_v0());
  double trigger_value;
  std::optional<CharacteristicSlice> slice;
  if (kernels_) {
    trigger_value = closed_form_trigger(*kernels_, s, state_.U_bar) - ref;
  } else {
    slice = predictor_.predict(s);
    trigger_value = predictor_.solve_downstream(*slice, state_.U_bar)[0] - ref;
  }

  double band = policy_.kind == TriggerPolicy::Kind::Periodic
                    ? 0.5 * policy_.eps
                    : policy_.threshold(norm_inf(s));
  if (std::fabs(trigger_value) > band) {
    double U_new = kernels_ ? closed_form_update(*kernels_, s)
                            : predictor_.solve_upstream(*slice, ref).back();
    state_.event_log.push_back({t, state_.U_bar, U_new, trigger_value});
    state_.U_bar = U_new;
    state_.t_last = t;
    if (step_index_ == last_event_step_ + 1) ++zeno_pairs_;
    last_event_step_ = step_index_;
  }
  return state_.U_bar;
}

double continuous_control(const Predictor& p, const StateProfile& w_t, double v0_target) {
  return p.solve_upstream(p.predict(w_t), v0_target).back();
}

double continuous_control(const SystemModel& m, const Grid& grid, const StateProfile& w_t,
                          double v0_target) {
  Predictor p(m, grid);
  return continuous_control(p, w_t, v0_target);
}

namespace {

ClosedLoopRecord assemble_record(Trajectory traj, std::vector<TriggerEvent> events,
                                 const CoeffFn* reference, const TriggerPolicy* threshold_policy,
                                 double tau_v0, bool zeno) {
  ClosedLoopRecord rec;
  rec.events = std::move(events);
  rec.trajectory = std::move(traj);
  rec.trajectory.events = rec.events;
  rec.tau_v0 = tau_v0;
  rec.zeno_suspected = zeno;

  for (std::size_t i = 0; i + 1 < rec.events.size(); ++i) {
    rec.min_dwell = std::min(rec.min_dwell, rec.events[i + 1].t - rec.events[i].t);
  }

  rec.diagnostics.reserve(rec.trajectory.profiles.size());
  for (std::size_t i = 0; i < rec.trajectory.profiles.size(); ++i) {
    const StateProfile& p = rec.trajectory.profiles[i];
    const BoundarySample& b = rec.trajectory.boundary_trace[i];
    double norm = norm_inf(p);
    double eps_t = threshold_policy ? threshold_policy->threshold(norm) : 0.0;
    rec.diagnostics.push_back({p.t, norm, p.v[0], eps_t, b.U});
    if (p.t >= tau_v0) {
      double ref = reference ? (*reference)(p.t) : 0.0;
      rec.max_abs_v0_after_tau = std::max(rec.max_abs_v0_after_tau, std::fabs(p.v[0] - ref));
    }
  }
  return rec;
}

}  // namespace

ClosedLoopRecord run_closed_loop(const SystemModel& m, Grid grid, const TriggerPolicy& policy,
                                 const StateProfile& w0, double U0, double t_end,
                                 const KernelVector* kernels) {
  EventTriggeredController ctrl(m, grid, policy, U0, kernels);
  RightHandSide rhs(m, grid);
  Trajectory traj = simulate(rhs, w0, InputSignal::constant(U0), t_end,
                             [&](double t, const StateProfile& s) { return ctrl.on_step(t, s); });
  return assemble_record(std::move(traj), ctrl.state().event_log, &policy.reference, &policy,
                         ctrl.tau_v0(), ctrl.zeno_suspected());
}

ClosedLoopRecord run_continuous_loop(const SystemModel& m, Grid grid, const CoeffFn& reference,
                                     const StateProfile& w0, double t_end) {
  if (reference.arity() != 1) throw ValidationError("reference must be a function of t");
  Predictor p(m, grid);
  RightHandSide rhs(m, grid);
  Trajectory traj = simulate(rhs, w0, InputSignal::constant(0.0), t_end,
                             [&](double t, const StateProfile& s) -> std::optional<double> {
                               return continuous_control(p, s, reference(t + p.tau_v0()));
                             });
  return assemble_record(std::move(traj), {}, &reference, nullptr, p.tau_v0(), false);
}

ClosedLoopRecord run_open_loop(const SystemModel& m, Grid grid, const InputSignal& input,
                               const StateProfile& w0, double t_end) {
  RightHandSide rhs(m, grid);
  double tau_v0 = characteristic_times(m, 0.0).tau_v;
  Trajectory traj = simulate(rhs, w0, input, t_end);
  return assemble_record(std::move(traj), {}, nullptr, nullptr, tau_v0, false);
}

}  // namespace hyperctrl
