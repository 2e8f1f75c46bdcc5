#include "hyperctrl/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

Predictor::Predictor(const SystemModel& m, Grid grid) : rhs_(m, grid) {
  const int nn = grid.n_nodes();
  tau_v_nodes_.resize(nn);
  for (int i = 0; i < nn; ++i) {
    tau_v_nodes_[i] = characteristic_times(m, grid.node(i)).tau_v;
  }
  lam_v_mid_.resize(grid.n_cells);
  fv_mid_.reserve(grid.n_cells);
  for (int i = 0; i < grid.n_cells; ++i) {
    double xm = (grid.node(i) + grid.node(i + 1)) / 2.0;
    lam_v_mid_[i] = m.lambda_v(xm);
    fv_mid_.push_back(m.f_v.bind("x", xm));
  }
}

CharacteristicSlice Predictor::march(const StateProfile& s, bool determinate,
                                     double stand_in) const {
  const Grid& grid = rhs_.grid();
  const int n = grid.n_cells;
  const int nn = n + 1;
  const double inv_h = static_cast<double>(n);
  const double t0 = s.t;
  const double horizon = t0 + tau_v_nodes_[0];

  CharacteristicSlice slice;
  slice.t = t0;
  slice.tau_v_nodes = tau_v_nodes_;
  slice.ubar.assign(nn, 0.0);

  std::vector<double> u = s.u, v = s.v;
  std::vector<char> captured(nn, 0);
  u[0] = rhs_.g()(v[0], t0);
  if (!determinate) v[n] = stand_in;

  // Node N sits on the capture line at the base time itself.
  slice.ubar[n] = u[n];
  captured[n] = 1;

  std::vector<double> u_prev(nn), v_prev(nn);
  std::vector<double> su(nn), sv(nn);
  std::vector<double> k1u(nn), k1v(nn), k2u(nn), k2v(nn), k3u(nn), k3v(nn), k4u(nn), k4v(nn);

  // Derivatives of the evolving nodes; frozen nodes keep zero slope so
  // the stage combinations leave them untouched.
  auto deriv = [&](const std::vector<double>& uu, const std::vector<double>& vv,
                   std::vector<double>& du, std::vector<double>& dv) {
    du[0] = 0;
    dv[n] = 0;
    for (int i = 1; i <= n; ++i) {
      du[i] = (determinate && captured[i])
                  ? 0.0
                  : -rhs_.lambda_u_node(i) * (uu[i] - uu[i - 1]) * inv_h +
                        rhs_.f_u_node(i)(uu[i], vv[i]);
    }
    for (int i = 0; i < n; ++i) {
      dv[i] = (determinate && captured[i])
                  ? 0.0
                  : rhs_.lambda_v_node(i) * (vv[i + 1] - vv[i]) * inv_h +
                        rhs_.f_v_node(i)(uu[i], vv[i]);
    }
  };
  auto stage_close = [&](std::vector<double>& uu, std::vector<double>& vv, double t_stage) {
    uu[0] = rhs_.g()(vv[0], t_stage);
    if (!determinate) vv[n] = stand_in;
  };

  const double dt = rhs_.dt();
  double t_cur = t0;
  long k = 0;
  while (t_cur < horizon - 1e-15 * std::max(1.0, horizon)) {
    ++k;
    double t_next = std::min(t0 + static_cast<double>(k) * dt, horizon);
    double h_t = t_next - t_cur;
    u_prev = u;
    v_prev = v;

    deriv(u, v, k1u, k1v);
    for (int i = 0; i < nn; ++i) {
      su[i] = u[i] + 0.5 * h_t * k1u[i];
      sv[i] = v[i] + 0.5 * h_t * k1v[i];
    }
    stage_close(su, sv, t_cur + 0.5 * h_t);
    deriv(su, sv, k2u, k2v);
    for (int i = 0; i < nn; ++i) {
      su[i] = u[i] + 0.5 * h_t * k2u[i];
      sv[i] = v[i] + 0.5 * h_t * k2v[i];
    }
    stage_close(su, sv, t_cur + 0.5 * h_t);
    deriv(su, sv, k3u, k3v);
    for (int i = 0; i < nn; ++i) {
      su[i] = u[i] + h_t * k3u[i];
      sv[i] = v[i] + h_t * k3v[i];
    }
    stage_close(su, sv, t_next);
    deriv(su, sv, k4u, k4v);
    for (int i = 0; i < nn; ++i) {
      u[i] += h_t / 6.0 * (k1u[i] + 2 * k2u[i] + 2 * k3u[i] + k4u[i]);
      v[i] += h_t / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    }
    stage_close(u, v, t_next);

    for (int i = 0; i < nn; ++i) {
      if (captured[i]) continue;
      double t_cap = t0 + tau_v_nodes_[i];
      if (t_cap <= t_next) {
        double theta = (t_cap - t_cur) / h_t;
        double u_cap = u_prev[i] + theta * (u[i] - u_prev[i]);
        double v_cap = v_prev[i] + theta * (v[i] - v_prev[i]);
        slice.ubar[i] = u_cap;
        captured[i] = 1;
        if (determinate) {
          u[i] = u_cap;
          v[i] = v_cap;
        }
      }
    }
    t_cur = t_next;

    bool sane = true;
    for (int i = 0; i < nn && sane; ++i) {
      sane = std::isfinite(u[i]) && std::isfinite(v[i]);
    }
    if (!sane) throw BlowupError("prediction state became non-finite", t_cur);
  }

  for (int i = 0; i < nn; ++i) {
    if (!captured[i]) {
      // Only reachable if the final step failed to land on the horizon.
      throw NumericsError("prediction march ended before capturing all nodes");
    }
  }
  return slice;
}

CharacteristicSlice Predictor::predict(const StateProfile& s) const {
  return march(s, true, 0.0);
}

CharacteristicSlice Predictor::predict_rectangle(const StateProfile& s, double stand_in) const {
  return march(s, false, stand_in);
}

namespace {

// RK4 across one cell of vbar' = -f_v(ubar, vbar, x) / lambda_v(x), with
// ubar linear between its node samples. `dir` is +1 upstream, -1
// downstream; `lo` is the lower node index of the cell.
double cell_step(const RightHandSide& rhs, const std::vector<double>& lam_v_mid,
                 const std::vector<CoeffFn>& fv_mid, const std::vector<double>& ubar, int lo,
                 double vb, int dir, double h) {
  const int hi = lo + 1;
  const int from = dir > 0 ? lo : hi;
  const int to = dir > 0 ? hi : lo;
  const double ub_mid = 0.5 * (ubar[lo] + ubar[hi]);
  const double dx = dir * h;

  auto phi_node = [&](int i, double w) { return -rhs.f_v_node(i)(ubar[i], w) / rhs.lambda_v_node(i); };
  auto phi_mid = [&](double w) { return -fv_mid[lo](ub_mid, w) / lam_v_mid[lo]; };

  double k1 = phi_node(from, vb);
  double k2 = phi_mid(vb + 0.5 * dx * k1);
  double k3 = phi_mid(vb + 0.5 * dx * k2);
  double k4 = phi_node(to, vb + dx * k3);
  return vb + dx / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

std::vector<double> Predictor::solve_downstream(const CharacteristicSlice& slice,
                                                double terminal) const {
  const Grid& grid = rhs_.grid();
  if (static_cast<int>(slice.ubar.size()) != grid.n_nodes()) {
    throw ValidationError("slice grid does not match the predictor grid");
  }
  std::vector<double> vb(grid.n_nodes());
  vb[grid.n_cells] = terminal;
  for (int i = grid.n_cells - 1; i >= 0; --i) {
    vb[i] = cell_step(rhs_, lam_v_mid_, fv_mid_, slice.ubar, i, vb[i + 1], -1, grid.h());
    if (!std::isfinite(vb[i])) throw NumericsError("downstream solve became non-finite");
  }
  return vb;
}

std::vector<double> Predictor::solve_upstream(const CharacteristicSlice& slice, double v0) const {
  const Grid& grid = rhs_.grid();
  if (static_cast<int>(slice.ubar.size()) != grid.n_nodes()) {
    throw ValidationError("slice grid does not match the predictor grid");
  }
  std::vector<double> vb(grid.n_nodes());
  vb[0] = v0;
  for (int i = 0; i < grid.n_cells; ++i) {
    vb[i + 1] = cell_step(rhs_, lam_v_mid_, fv_mid_, slice.ubar, i, vb[i], +1, grid.h());
    if (!std::isfinite(vb[i + 1])) throw NumericsError("upstream solve became non-finite");
  }
  return vb;
}

CharacteristicSlice predict_ubar(const SystemModel& m, const Grid& grid, const StateProfile& w_t,
                                 std::optional<double> stand_in) {
  (void)stand_in;  // cannot influence the determinate march; see header
  Predictor p(m, grid);
  return p.predict(w_t);
}

std::vector<double> solve_vbar(const SystemModel& m, const CharacteristicSlice& slice,
                               double terminal) {
  Grid grid{static_cast<int>(slice.ubar.size()) - 1};
  Predictor p(m, grid);
  return p.solve_downstream(slice, terminal);
}

std::vector<double> solve_target(const SystemModel& m, const CharacteristicSlice& slice,
                                 double v0_target) {
  Grid grid{static_cast<int>(slice.ubar.size()) - 1};
  Predictor p(m, grid);
  return p.solve_upstream(slice, v0_target);
}

}  // namespace hyperctrl
