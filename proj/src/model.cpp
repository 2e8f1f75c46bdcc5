#include "hyperctrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

SystemModel SystemModel::parse(std::string_view lambda_u, std::string_view lambda_v,
                               std::string_view f_u, std::string_view f_v, std::string_view g) {
  SystemModel m;
  m.lambda_u = CoeffFn::parse(lambda_u, {"x"});
  m.lambda_v = CoeffFn::parse(lambda_v, {"x"});
  m.f_u = CoeffFn::parse(f_u, {"u", "v", "x"});
  m.f_v = CoeffFn::parse(f_v, {"u", "v", "x"});
  m.g = CoeffFn::parse(g, {"v", "t"});
  return m;
}

namespace {

constexpr double kEquilibriumTol = 1e-12;

std::vector<double> lattice(double lo, double hi, int n, const std::vector<double>& extra) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(n) + extra.size());
  for (int i = 0; i < n; ++i) {
    pts.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  }
  for (double e : extra) {
    if (e > lo && e < hi) pts.push_back(e);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double simpson(const CoeffFn& lambda, double a, double b, int n) {
  // n subintervals, n even; integrand 1/lambda. Pieces are cut at case()
  // thresholds, so the endpoints must use the one-sided limits: evaluate
  // them a hair inside the piece.
  double h = (b - a) / n;
  double nudge = 1e-13 * (b - a);
  double sum = 1.0 / lambda(a + nudge) + 1.0 / lambda(b - nudge);
  for (int i = 1; i < n; ++i) {
    double w = (i % 2 == 1) ? 4.0 : 2.0;
    sum += w / lambda(a + i * h);
  }
  return sum * h / 3.0;
}

double integrate_inverse_speed(const CoeffFn& lambda, double a, double b) {
  if (b <= a) return 0.0;
  std::vector<double> cuts = {a, b};
  for (double bp : lambda.breakpoints("x")) {
    if (bp > a && bp < b) cuts.push_back(bp);
  }
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double lo = cuts[k], hi = cuts[k + 1];
    int n = 8;
    double prev = simpson(lambda, lo, hi, n);
    bool converged = false;
    for (int iter = 0; iter < 22; ++iter) {
      n *= 2;
      double cur = simpson(lambda, lo, hi, n);
      if (!std::isfinite(cur)) break;
      if (std::fabs(cur - prev) <= 1e-9) {
        total += cur;
        converged = true;
        break;
      }
      prev = cur;
    }
    if (!converged) {
      throw NumericsError("travel-time quadrature did not converge on [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]; coefficient looks pathological");
    }
  }
  if (!std::isfinite(total)) {
    throw NumericsError("travel-time quadrature produced a non-finite value");
  }
  return total;
}

}  // namespace

CharacteristicTimes characteristic_times(const SystemModel& m, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("characteristic_times: x must lie in [0,1]");
  }
  CharacteristicTimes t;
  t.tau_u = integrate_inverse_speed(m.lambda_u, 0.0, x);
  t.tau_v = integrate_inverse_speed(m.lambda_v, x, 1.0);
  return t;
}

ModelBounds validate_model(const SystemModel& m, int samples) {
  if (samples < 2) throw ValidationError("validate_model: samples must be >= 2");

  std::vector<double> x_extra = m.lambda_u.breakpoints("x");
  for (double b : m.lambda_v.breakpoints("x")) x_extra.push_back(b);
  for (double b : m.f_u.breakpoints("x")) x_extra.push_back(b);
  for (double b : m.f_v.breakpoints("x")) x_extra.push_back(b);
  std::vector<double> xs = lattice(0.0, 1.0, samples, x_extra);

  ModelBounds out;
  out.k_lambda = 0.0;
  out.k_lambda_inv = 0.0;

  for (double x : xs) {
    double lu = m.lambda_u(x);
    double lv = m.lambda_v(x);
    if (!(lu > 0.0) || !std::isfinite(lu)) {
      throw ValidationError("lambda_u is not positive at x=" + std::to_string(x));
    }
    if (!(lv > 0.0) || !std::isfinite(lv)) {
      throw ValidationError("lambda_v is not positive at x=" + std::to_string(x));
    }
    out.k_lambda = std::max(out.k_lambda, std::max(lu, lv));
    out.k_lambda_inv = std::max(out.k_lambda_inv, 1.0 / std::min(lu, lv));

    double fu0 = m.f_u(0.0, 0.0, x);
    double fv0 = m.f_v(0.0, 0.0, x);
    if (!(std::fabs(fu0) <= kEquilibriumTol)) {
      throw ValidationError("f_u(0,0,x) != 0 at x=" + std::to_string(x) +
                            " (got " + std::to_string(fu0) + "); origin must be an equilibrium");
    }
    if (!(std::fabs(fv0) <= kEquilibriumTol)) {
      throw ValidationError("f_v(0,0,x) != 0 at x=" + std::to_string(x) +
                            " (got " + std::to_string(fv0) + "); origin must be an equilibrium");
    }
  }

  std::vector<double> ts = lattice(0.0, 10.0, std::min(samples, 256), m.g.breakpoints("t"));
  for (double t : ts) {
    double g0 = m.g(0.0, t);
    if (!(std::fabs(g0) <= kEquilibriumTol)) {
      throw ValidationError("g(0,t) != 0 at t=" + std::to_string(t) +
                            "; origin must be an equilibrium");
    }
  }

  // Lipschitz estimates by central differences over the state box [-5,5]^2.
  const double delta = 1e-4;
  std::vector<double> xs_lip = lattice(0.0, 1.0, std::min(samples, 65), x_extra);
  const int ns = 21;
  for (double x : xs_lip) {
    for (int iu = 0; iu < ns; ++iu) {
      double u = -5.0 + 10.0 * iu / (ns - 1);
      for (int iv = 0; iv < ns; ++iv) {
        double v = -5.0 + 10.0 * iv / (ns - 1);
        double du_fu = (m.f_u(u + delta, v, x) - m.f_u(u - delta, v, x)) / (2 * delta);
        double dv_fu = (m.f_u(u, v + delta, x) - m.f_u(u, v - delta, x)) / (2 * delta);
        double du_fv = (m.f_v(u + delta, v, x) - m.f_v(u - delta, v, x)) / (2 * delta);
        double dv_fv = (m.f_v(u, v + delta, x) - m.f_v(u, v - delta, x)) / (2 * delta);
        double grad = std::max(std::max(std::fabs(du_fu), std::fabs(dv_fu)),
                               std::max(std::fabs(du_fv), std::fabs(dv_fv)));
        if (!std::isfinite(grad)) {
          throw ValidationError("coupling derivative non-finite at x=" + std::to_string(x));
        }
        out.l_f = std::max(out.l_f, grad);
      }
    }
  }
  for (double t : ts) {
    for (int iv = 0; iv < 41; ++iv) {
      double v = -5.0 + 10.0 * iv / 40.0;
      double dg = (m.g(v + delta, t) - m.g(v - delta, t)) / (2 * delta);
      if (!std::isfinite(dg)) {
        throw ValidationError("boundary-map derivative non-finite at t=" + std::to_string(t));
      }
      out.l_g = std::max(out.l_g, std::fabs(dg));
    }
  }

  // Gronwall-form gain diagnostics: one boundary reflection plus source
  // growth over a horizon bounded by k_lambda_inv, for each direction.
  out.c1_emp = (1.0 + out.l_g) * std::exp(2.0 * out.l_f * out.k_lambda_inv);
  out.c2_emp = (1.0 + out.l_g) * std::exp(2.0 * out.l_f * out.k_lambda_inv);
  return out;
}

}  // namespace hyperctrl
