#pragma once

#include <string>
#include <vector>

#include "hyperctrl/expression.hpp"

namespace hyperctrl {

// Uniform grid on [0,1] with nodes x_i = i / n_cells.
struct Grid {
  int n_cells = 50;

  double h() const { return 1.0 / n_cells; }
  int n_nodes() const { return n_cells + 1; }
  double node(int i) const { return static_cast<double>(i) / n_cells; }
};

// A 2x2 semilinear transport system on x in [0,1]:
//
//   u_t = -lambda_u(x) u_x + f_u(u, v, x)
//   v_t =  lambda_v(x) v_x + f_v(u, v, x)
//   u(0,t) = g(v(0,t), t)
//   v(1,t) = U(t)               (boundary input)
//
// Both speeds must be positive; f_u, f_v, g must vanish at the origin so
// that zero is an equilibrium. validate_model() enforces this by sampling.
struct SystemModel {
  CoeffFn lambda_u;  // (x)
  CoeffFn lambda_v;  // (x)
  CoeffFn f_u;       // (u, v, x)
  CoeffFn f_v;       // (u, v, x)
  CoeffFn g;         // (v, t)

  static SystemModel parse(std::string_view lambda_u, std::string_view lambda_v,
                           std::string_view f_u, std::string_view f_v, std::string_view g);
};

// Sampled bounds of a validated model. l_f and l_g are finite-difference
// estimates over the state box [-5,5]^2, not certified constants; c1_emp
// and c2_emp are Gronwall-form gain diagnostics derived from them. None
// of these feed control logic.
struct ModelBounds {
  double k_lambda = 0;      // sup of max(lambda_u, lambda_v)
  double k_lambda_inv = 0;  // sup of 1 / min(lambda_u, lambda_v)
  double l_f = 0;           // state-Lipschitz estimate of (f_u, f_v)
  double l_g = 0;           // state-Lipschitz estimate of g
  double c1_emp = 0;        // prediction gain diagnostic
  double c2_emp = 0;        // convergence gain diagnostic
};

// Checks speed positivity and the equilibrium conditions on a sample
// lattice (plus any case() breakpoints) and estimates the bounds above.
// Throws ValidationError when an invariant fails. `samples` controls the
// x/t lattice resolution.
ModelBounds validate_model(const SystemModel& m, int samples = 512);

struct CharacteristicTimes {
  double tau_u;  // travel time of u from 0 to x
  double tau_v;  // travel time of v from 1 to x
};

// tau_u(x) = int_0^x 1/lambda_u, tau_v(x) = int_x^1 1/lambda_v, by
// composite Simpson with interval halving (successive estimates within
// 1e-9), split at piecewise breakpoints. Throws NumericsError if the
// quadrature does not settle, which signals a pathological coefficient.
CharacteristicTimes characteristic_times(const SystemModel& m, double x);

}  // namespace hyperctrl
