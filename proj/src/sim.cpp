#include "hyperctrl/sim.hpp"

#include <algorithm>
#include <cmath>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

namespace {
constexpr double kBlowupNorm = 1e6;
constexpr double kCflFactor = 0.5;
}  // namespace

double norm_inf(const StateProfile& s) {
  double m = 0;
  for (double x : s.u) m = std::max(m, std::fabs(x));
  for (double x : s.v) m = std::max(m, std::fabs(x));
  return m;
}

bool all_finite(const StateProfile& s) {
  for (double x : s.u) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : s.v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

StateProfile make_profile(const Grid& grid, const CoeffFn& u0, const CoeffFn& v0) {
  StateProfile s;
  s.t = 0;
  s.u.resize(grid.n_nodes());
  s.v.resize(grid.n_nodes());
  for (int i = 0; i < grid.n_nodes(); ++i) {
    s.u[i] = u0(grid.node(i));
    s.v[i] = v0(grid.node(i));
  }
  return s;
}

InputSignal InputSignal::constant(double value) {
  InputSignal s;
  s.value_ = value;
  return s;
}

InputSignal InputSignal::sampled(std::vector<std::pair<double, double>> table) {
  if (table.empty()) throw ValidationError("sampled input needs at least one entry");
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (!(table[i].first > table[i - 1].first)) {
      throw ValidationError("sampled input times must be strictly increasing");
    }
  }
  InputSignal s;
  s.table_ = std::move(table);
  return s;
}

InputSignal InputSignal::callback(Callback fn) {
  InputSignal s;
  s.fn_ = std::move(fn);
  return s;
}

double InputSignal::value_at(double t) const {
  if (table_.empty()) return value_;
  auto it = std::upper_bound(table_.begin(), table_.end(), t,
                             [](double lhs, const auto& e) { return lhs < e.first; });
  if (it == table_.begin()) return table_.front().second;
  return std::prev(it)->second;
}

RightHandSide::RightHandSide(const SystemModel& m, Grid grid)
    : model_(m), grid_(grid), g_(m.g) {
  if (grid.n_cells < 1) throw ValidationError("grid needs at least one cell");
  int n = grid.n_nodes();
  lam_u_.resize(n);
  lam_v_.resize(n);
  fu_.reserve(n);
  fv_.reserve(n);
  for (int i = 0; i < n; ++i) {
    double x = grid.node(i);
    lam_u_[i] = m.lambda_u(x);
    lam_v_[i] = m.lambda_v(x);
    fu_.push_back(m.f_u.bind("x", x));
    fv_.push_back(m.f_v.bind("x", x));
  }

  // Dense sampling for the speed bound; node values alone could miss an
  // interior maximum between nodes.
  std::vector<double> probes = m.lambda_u.breakpoints("x");
  for (double b : m.lambda_v.breakpoints("x")) probes.push_back(b);
  const int dense = 8 * grid.n_cells + 1;
  for (int i = 0; i < dense; ++i) probes.push_back(static_cast<double>(i) / (dense - 1));
  for (double x : probes) {
    if (x < 0 || x > 1) continue;
    k_lambda_ = std::max(k_lambda_, std::max(m.lambda_u(x), m.lambda_v(x)));
  }
  if (!(k_lambda_ > 0) || !std::isfinite(k_lambda_)) {
    throw ValidationError("speed bound is not positive and finite");
  }
}

RightHandSide semi_discretize(const SystemModel& m, Grid grid) { return RightHandSide(m, grid); }

void RightHandSide::apply_closures(StateProfile& s, double input_value) const {
  s.u[0] = g_(s.v[0], s.t);
  s.v[grid_.n_cells] = input_value;
}

void RightHandSide::eval(const std::vector<double>& u, const std::vector<double>& v,
                         std::vector<double>& u_dot, std::vector<double>& v_dot) const {
  const int n = grid_.n_cells;
  const double inv_h = static_cast<double>(n);
  u_dot[0] = 0;
  v_dot[n] = 0;
  for (int i = 1; i <= n; ++i) {
    u_dot[i] = -lam_u_[i] * (u[i] - u[i - 1]) * inv_h + fu_[i](u[i], v[i]);
  }
  for (int i = 0; i < n; ++i) {
    v_dot[i] = lam_v_[i] * (v[i + 1] - v[i]) * inv_h + fv_[i](u[i], v[i]);
  }
}

namespace {

// Shared RK4 kernel. Stage closures: u_0 from g at the stage time,
// v_N from the input at the stage time.
StateProfile rk4_step_impl(const RightHandSide& rhs, const StateProfile& s,
                           const std::function<double(double)>& input_at, double dt) {
  if (dt <= 0) throw ValidationError("step: dt must be positive");
  if (dt > rhs.dt() * (1.0 + 1e-9)) {
    throw ValidationError("step: dt violates the CFL bound 0.5*h/k_lambda");
  }
  const int n = rhs.grid().n_cells;
  const int nn = n + 1;

  StateProfile stage = s;
  std::vector<double> k1u(nn), k1v(nn), k2u(nn), k2v(nn), k3u(nn), k3v(nn), k4u(nn), k4v(nn);

  auto close = [&](StateProfile& p, double t_stage) {
    p.t = t_stage;
    p.u[0] = rhs.g()(p.v[0], t_stage);
    p.v[n] = input_at(t_stage);
  };

  close(stage, s.t);
  rhs.eval(stage.u, stage.v, k1u, k1v);

  StateProfile mid = s;
  for (int i = 0; i < nn; ++i) {
    mid.u[i] = stage.u[i] + 0.5 * dt * k1u[i];
    mid.v[i] = stage.v[i] + 0.5 * dt * k1v[i];
  }
  close(mid, s.t + 0.5 * dt);
  rhs.eval(mid.u, mid.v, k2u, k2v);

  for (int i = 0; i < nn; ++i) {
    mid.u[i] = stage.u[i] + 0.5 * dt * k2u[i];
    mid.v[i] = stage.v[i] + 0.5 * dt * k2v[i];
  }
  close(mid, s.t + 0.5 * dt);
  rhs.eval(mid.u, mid.v, k3u, k3v);

  for (int i = 0; i < nn; ++i) {
    mid.u[i] = stage.u[i] + dt * k3u[i];
    mid.v[i] = stage.v[i] + dt * k3v[i];
  }
  close(mid, s.t + dt);
  rhs.eval(mid.u, mid.v, k4u, k4v);

  StateProfile out = s;
  for (int i = 0; i < nn; ++i) {
    out.u[i] = stage.u[i] + dt / 6.0 * (k1u[i] + 2 * k2u[i] + 2 * k3u[i] + k4u[i]);
    out.v[i] = stage.v[i] + dt / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
  }
  close(out, s.t + dt);

  if (!all_finite(out)) throw BlowupError("state became non-finite", out.t);
  if (norm_inf(out) > kBlowupNorm) throw BlowupError("state norm exceeded 1e6", out.t);
  return out;
}

}  // namespace

StateProfile step(const RightHandSide& rhs, const StateProfile& s,
                  const std::function<double(double)>& input_at, double dt) {
  return rk4_step_impl(rhs, s, input_at, dt);
}

StateProfile step(const RightHandSide& rhs, const StateProfile& s, const InputSignal& input,
                  double dt) {
  if (input.is_callback()) {
    double held = input.consult(s.t, s);
    return rk4_step_impl(rhs, s, [held](double) { return held; }, dt);
  }
  return rk4_step_impl(rhs, s, [&input](double t) { return input.value_at(t); }, dt);
}

Trajectory simulate(const RightHandSide& rhs, const StateProfile& s0, const InputSignal& input,
                    double t_end, const StepHook& hook) {
  if (t_end < s0.t) throw ValidationError("simulate: t_end must not precede the initial time");

  Trajectory traj;
  StateProfile s = s0;
  std::optional<double> held;

  auto consult = [&](double t) {
    if (input.is_callback()) held = input.consult(t, s);
    if (hook) {
      if (auto replacement = hook(t, s)) held = *replacement;
    }
  };
  auto effective = [&](double t_stage) { return held ? *held : input.value_at(t_stage); };
  auto store = [&](const StateProfile& p) {
    traj.profiles.push_back(p);
    traj.boundary_trace.push_back(
        {p.t, p.v[0], p.u[0], p.v[rhs.grid().n_cells]});
  };

  consult(s.t);
  rhs.apply_closures(s, effective(s.t));
  store(s);

  const double dt = rhs.dt();
  const double t0 = s.t;
  long k = 0;
  while (s.t < t_end - 1e-12 * std::max(1.0, std::fabs(t_end))) {
    ++k;
    double t_next = std::min(t0 + static_cast<double>(k) * dt, t_end);
    double held_now = effective(s.t);
    s = rk4_step_impl(rhs, s, [&](double ts) { return held ? held_now : input.value_at(ts); },
                      t_next - s.t);
    s.t = t_next;
    consult(s.t);
    rhs.apply_closures(s, effective(s.t));
    store(s);
  }
  return traj;
}

std::vector<std::pair<double, double>> trace_characteristic(const SystemModel& m, double x0,
                                                            double t0, double t1) {
  if (t1 < t0) throw ValidationError("trace_characteristic: t1 must be >= t0");
  std::vector<std::pair<double, double>> path;
  double z = x0;
  double s = t0;
  path.emplace_back(z, s);
  if (t1 == t0) return path;

  const int steps = std::max(64, static_cast<int>(std::ceil((t1 - t0) / 0.002)));
  const double ds = (t1 - t0) / steps;
  auto speed = [&](double zz) { return m.lambda_u(std::clamp(zz, 0.0, 1.0)); };
  for (int i = 0; i < steps; ++i) {
    if (z < 1.0) {
      double k1 = speed(z);
      double k2 = speed(z + 0.5 * ds * k1);
      double k3 = speed(z + 0.5 * ds * k2);
      double k4 = speed(z + ds * k3);
      z = std::min(1.0, z + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
    }
    s = t0 + (i + 1) * ds;
    path.emplace_back(z, s);
  }
  return path;
}

}  // namespace hyperctrl
