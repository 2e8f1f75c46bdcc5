#pragma once

#include <optional>
#include <vector>

#include "hyperctrl/sim.hpp"

namespace hyperctrl {

// Future state of u on the capture line: ubar[i] ~ u(x_i, t + tau_v(x_i)).
struct CharacteristicSlice {
  double t = 0;                     // base time of the underlying state
  std::vector<double> ubar;         // one value per grid node
  std::vector<double> tau_v_nodes;  // tau_v(x_i), precomputed
};

// Prediction engine for one (model, grid) pair. Construction precomputes
// travel times and per-node/per-midpoint coupling tapes; predictions and
// the x-direction solves are then pure functions of their inputs and safe
// to call concurrently.
//
// predict() marches the upwind semi-discretization forward in time over a
// shrinking domain: node i is read off (by linear interpolation in time)
// and frozen the moment the march passes its capture instant
// t + tau_v(x_i). Frozen values are exactly the capture-line data, which
// is determined by the current state alone, and they stand in for the
// stencil neighbor of the node to their left until that node freezes too.
// The value at the controlled boundary therefore never enters: the march
// realizes the determinate set of the current state discretely, so two
// predictions from the same state agree bit-for-bit regardless of any
// assumed future input.
//
// predict_rectangle() is the classical alternative: solve the full
// rectangle [0,1] x [t, t + tau_v(0)] under an explicit boundary stand-in
// and read the same capture points. Fixed-grid upwind stencils propagate
// boundary data slightly ahead of the true characteristic cone, so this
// variant leaks O(sqrt(h))-scale stand-in dependence into the reads. It
// is kept as a cross-check and for rectangle debug dumps.
class Predictor {
 public:
  Predictor(const SystemModel& m, Grid grid);

  const RightHandSide& rhs() const { return rhs_; }
  const Grid& grid() const { return rhs_.grid(); }
  double tau_v0() const { return tau_v_nodes_[0]; }
  const std::vector<double>& tau_v_nodes() const { return tau_v_nodes_; }

  CharacteristicSlice predict(const StateProfile& s) const;
  CharacteristicSlice predict_rectangle(const StateProfile& s, double stand_in) const;

  // Integrates vbar' = -f_v(ubar(x), vbar, x) / lambda_v(x) across the
  // slice with one RK4 step per cell. Downstream: from x = 1 with the
  // given terminal value (the trigger solve; index 0 of the result is
  // the predicted uncontrolled boundary value). Upstream: from x = 0
  // with the given target value (index N is the input that realizes it).
  std::vector<double> solve_downstream(const CharacteristicSlice& slice, double terminal) const;
  std::vector<double> solve_upstream(const CharacteristicSlice& slice, double v0) const;

 private:
  CharacteristicSlice march(const StateProfile& s, bool determinate, double stand_in) const;

  RightHandSide rhs_;
  std::vector<double> tau_v_nodes_;
  std::vector<double> lam_v_mid_;   // lambda_v at cell midpoints
  std::vector<CoeffFn> fv_mid_;     // f_v bound at cell midpoints, args (u, v)
};

// Convenience wrappers matching the operation-level API. They build a
// Predictor per call; use the class directly in loops. The stand_in
// parameter selects the boundary value for the solve outside the
// determinate region; by construction it cannot influence the result
// (see Predictor::predict) and exists so callers can verify exactly that.
CharacteristicSlice predict_ubar(const SystemModel& m, const Grid& grid, const StateProfile& w_t,
                                 std::optional<double> stand_in = std::nullopt);
std::vector<double> solve_vbar(const SystemModel& m, const CharacteristicSlice& slice,
                               double terminal);
std::vector<double> solve_target(const SystemModel& m, const CharacteristicSlice& slice,
                                 double v0_target);

}  // namespace hyperctrl
