#include "hyperctrl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

using ordered_json = nlohmann::ordered_json;

void Scenario::validate() const {
  if (!(t_end > 0)) throw ValidationError("scenario: t_end must be positive");
  if (grid.n_cells < 1) throw ValidationError("scenario: n_cells must be at least 1");
  if (u0.arity() != 1 || v0.arity() != 1) {
    throw ValidationError("scenario: initial profiles must be functions of x");
  }
  if (controller == ControllerKind::EventTriggeredLinear && !linear) {
    throw ValidationError(
        "scenario: event_triggered_linear requires a linear model block (general nonlinear "
        "couplings have no closed-form kernels)");
  }
  if (controller == ControllerKind::EventTriggered ||
      controller == ControllerKind::EventTriggeredLinear) {
    policy.validate();
  }
  if (controller == ControllerKind::OpenLoop && open_loop_input.arity() != 1) {
    throw ValidationError("scenario: open-loop input must be a function of t");
  }
  (void)validate_model(model, 256);
}

// ---------------------------------------------------------------------------
// Built-in registry

namespace {

SystemModel example_model() {
  return SystemModel::parse("case(x<0.5, 0.2, 2-x)", "1+0.5*x", "sin(u+v)/(3-x)", "sin(v-u)",
                            "-v");
}

Scenario example_base() {
  Scenario s;
  s.model = example_model();
  s.u0 = CoeffFn::parse("1", {"x"});
  s.v0 = CoeffFn::parse("1", {"x"});
  s.grid = Grid{50};
  s.t_end = 10;
  return s;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"paper-example-open-loop",     "paper-example-continuous",
          "paper-example-event-triggered", "paper-example-tracking",
          "transport-smooth",            "linear-example-event-triggered"};
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
  if (name == "paper-example-open-loop") {
    Scenario s = example_base();
    s.name = name;
    s.controller = ControllerKind::OpenLoop;
    s.open_loop_input = CoeffFn::parse("0", {"t"});
    return s;
  }
  if (name == "paper-example-continuous") {
    Scenario s = example_base();
    s.name = name;
    s.controller = ControllerKind::Continuous;
    return s;
  }
  if (name == "paper-example-event-triggered") {
    Scenario s = example_base();
    s.name = name;
    s.controller = ControllerKind::EventTriggered;
    s.policy = TriggerPolicy::state_dependent(0.05, 0.25);
    s.input0 = 0;
    return s;
  }
  if (name == "paper-example-tracking") {
    Scenario s = example_base();
    s.name = name;
    s.controller = ControllerKind::EventTriggered;
    s.policy = TriggerPolicy::fixed(0.05);
    s.policy.reference = CoeffFn::parse("0.3*sin(t)", {"t"});
    s.input0 = 0;
    return s;
  }
  if (name == "transport-smooth") {
    Scenario s;
    s.name = name;
    s.model = SystemModel::parse("1", "1", "0", "0", "0");
    s.u0 = CoeffFn::parse("exp(-100*(x-0.5)^2)", {"x"});
    s.v0 = CoeffFn::parse("exp(-100*(x-0.5)^2)", {"x"});
    s.grid = Grid{50};
    s.controller = ControllerKind::OpenLoop;
    s.open_loop_input = CoeffFn::parse("0", {"t"});
    s.t_end = 0.4;
    return s;
  }
  if (name == "linear-example-event-triggered") {
    Scenario s;
    s.name = name;
    s.linear = LinearSystemSpec::parse("1", "1+0.25*x", "0.8", "0.6+0.4*x", 0.5);
    s.model = to_system_model(*s.linear);
    s.u0 = CoeffFn::parse("1", {"x"});
    s.v0 = CoeffFn::parse("1", {"x"});
    s.grid = Grid{50};
    s.controller = ControllerKind::EventTriggeredLinear;
    s.policy = TriggerPolicy::fixed(0.05);
    s.input0 = 0;
    s.t_end = 8;
    return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

const char* controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::OpenLoop: return "open_loop";
    case ControllerKind::Continuous: return "continuous";
    case ControllerKind::EventTriggered: return "event_triggered";
    case ControllerKind::EventTriggeredLinear: return "event_triggered_linear";
  }
  return "open_loop";
}

ControllerKind controller_from_name(const std::string& name) {
  if (name == "open_loop") return ControllerKind::OpenLoop;
  if (name == "continuous") return ControllerKind::Continuous;
  if (name == "event_triggered") return ControllerKind::EventTriggered;
  if (name == "event_triggered_linear") return ControllerKind::EventTriggeredLinear;
  throw ValidationError("scenario: unknown controller '" + name + "'");
}

CoeffFn field_expr(const ordered_json& j, const char* key, std::vector<std::string> sig,
                   const char* what) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ValidationError(std::string("scenario: ") + what + " needs string field '" + key + "'");
  }
  try {
    return CoeffFn::parse(j[key].get<std::string>(), std::move(sig));
  } catch (const ParseError& e) {
    throw ValidationError(std::string("scenario: field '") + key + "': " + e.what());
  }
}

double field_number(const ordered_json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ValidationError(std::string("scenario: ") + what + " needs numeric field '" + key +
                          "'");
  }
  return j[key].get<double>();
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }

  Scenario s;
  s.name = j.value("name", origin);

  if (j.contains("linear")) {
    const auto& lj = j["linear"];
    s.linear = LinearSystemSpec{};
    s.linear->eps1 = field_expr(lj, "eps1", {"x"}, "linear model");
    s.linear->eps2 = field_expr(lj, "eps2", {"x"}, "linear model");
    s.linear->c1 = field_expr(lj, "c1", {"x"}, "linear model");
    s.linear->c2 = field_expr(lj, "c2", {"x"}, "linear model");
    s.linear->q = field_number(lj, "q", "linear model");
    s.model = to_system_model(*s.linear);
  } else if (j.contains("model")) {
    const auto& mj = j["model"];
    s.model.lambda_u = field_expr(mj, "lambda_u", {"x"}, "model");
    s.model.lambda_v = field_expr(mj, "lambda_v", {"x"}, "model");
    s.model.f_u = field_expr(mj, "f_u", {"u", "v", "x"}, "model");
    s.model.f_v = field_expr(mj, "f_v", {"u", "v", "x"}, "model");
    s.model.g = field_expr(mj, "g", {"v", "t"}, "model");
  } else {
    throw ValidationError("scenario: needs a 'model' or 'linear' block");
  }

  if (!j.contains("initial")) throw ValidationError("scenario: needs an 'initial' block");
  s.u0 = field_expr(j["initial"], "u0", {"x"}, "initial data");
  s.v0 = field_expr(j["initial"], "v0", {"x"}, "initial data");

  if (j.contains("n_cells")) {
    if (!j["n_cells"].is_number_integer()) {
      throw ValidationError("scenario: n_cells must be an integer");
    }
    s.grid.n_cells = j["n_cells"].get<int>();
  }
  s.t_end = field_number(j, "t_end", "scenario");
  if (j.contains("controller")) {
    if (!j["controller"].is_string()) throw ValidationError("scenario: controller must be a string");
    s.controller = controller_from_name(j["controller"].get<std::string>());
  }
  if (j.contains("input")) s.open_loop_input = field_expr(j, "input", {"t"}, "open-loop input");
  if (j.contains("input0")) s.input0 = field_number(j, "input0", "scenario");

  if (j.contains("policy")) {
    const auto& pj = j["policy"];
    if (!pj.contains("kind") || !pj["kind"].is_string()) {
      throw ValidationError("scenario: policy needs a string field 'kind'");
    }
    std::string kind = pj["kind"].get<std::string>();
    if (kind == "fixed") {
      s.policy = TriggerPolicy::fixed(field_number(pj, "eps", "policy"));
    } else if (kind == "state_dependent") {
      s.policy = TriggerPolicy::state_dependent(field_number(pj, "eps_min", "policy"),
                                                field_number(pj, "gamma", "policy"));
    } else if (kind == "periodic") {
      s.policy = TriggerPolicy::periodic(field_number(pj, "eps", "policy"),
                                         field_number(pj, "period", "policy"));
    } else {
      throw ValidationError("scenario: unknown policy kind '" + kind + "'");
    }
  }
  if (j.contains("reference")) {
    s.policy.reference = field_expr(j, "reference", {"t"}, "reference");
  }
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  s.output_dir = j.value("output_dir", std::string());

  s.validate();
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  if (s.linear) {
    j["linear"] = {{"eps1", s.linear->eps1.to_string()},
                   {"eps2", s.linear->eps2.to_string()},
                   {"c1", s.linear->c1.to_string()},
                   {"c2", s.linear->c2.to_string()},
                   {"q", s.linear->q}};
  } else {
    j["model"] = {{"lambda_u", s.model.lambda_u.to_string()},
                  {"lambda_v", s.model.lambda_v.to_string()},
                  {"f_u", s.model.f_u.to_string()},
                  {"f_v", s.model.f_v.to_string()},
                  {"g", s.model.g.to_string()}};
  }
  j["initial"] = {{"u0", s.u0.to_string()}, {"v0", s.v0.to_string()}};
  j["n_cells"] = s.grid.n_cells;
  j["t_end"] = s.t_end;
  j["controller"] = controller_name(s.controller);
  if (s.controller == ControllerKind::OpenLoop) {
    j["input"] = s.open_loop_input.to_string();
  }
  if (s.controller == ControllerKind::EventTriggered ||
      s.controller == ControllerKind::EventTriggeredLinear) {
    j["input0"] = s.input0;
    switch (s.policy.kind) {
      case TriggerPolicy::Kind::Fixed:
        j["policy"] = {{"kind", "fixed"}, {"eps", s.policy.eps}};
        break;
      case TriggerPolicy::Kind::StateDependent:
        j["policy"] = {{"kind", "state_dependent"},
                       {"eps_min", s.policy.eps_min},
                       {"gamma", s.policy.gamma}};
        break;
      case TriggerPolicy::Kind::Periodic:
        j["policy"] = {{"kind", "periodic"}, {"eps", s.policy.eps}, {"period", s.policy.period}};
        break;
    }
  }
  if (!s.policy.reference.is_constant_zero()) {
    j["reference"] = s.policy.reference.to_string();
  }
  j["seed"] = s.seed;
  j["output_dir"] = s.output_dir;
  return j.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path_or_builtin) {
  if (auto builtin = builtin_scenario(path_or_builtin)) {
    builtin->validate();
    return *builtin;
  }
  std::ifstream in(path_or_builtin, std::ios::binary);
  if (!in) {
    throw ValidationError("'" + path_or_builtin +
                          "' is neither a built-in scenario nor a readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path_or_builtin);
}

// ---------------------------------------------------------------------------
// Execution

namespace {

RunSummary summarize(const Scenario& s, const ClosedLoopRecord& rec) {
  RunSummary out;
  out.event_count = rec.events.size();
  out.min_dwell = std::isfinite(rec.min_dwell) ? rec.min_dwell : 0.0;
  out.tau_v0 = rec.tau_v0;
  out.max_abs_v0_after_tau = rec.max_abs_v0_after_tau;
  for (const DiagnosticsSample& d : rec.diagnostics) {
    out.max_norm = std::max(out.max_norm, d.norm_w_inf);
  }
  if (!rec.diagnostics.empty()) {
    out.final_norm = rec.diagnostics.back().norm_w_inf;
    out.t_end_reached = rec.diagnostics.back().t;
  }
  if (rec.zeno_suspected) {
    out.exit_code = 4;
    out.status = "zeno-suspected";
  }
  (void)s;
  return out;
}

void write_panels(const std::filesystem::path& dir, const ClosedLoopRecord& rec,
                  const CoeffFn* reference) {
  {
    std::ofstream out(dir / "panel_norm.csv", std::ios::binary);
    out << "t,norm_w_inf\n";
    for (const DiagnosticsSample& d : rec.diagnostics) {
      out << format_double(d.t) << ',' << format_double(d.norm_w_inf) << '\n';
    }
  }
  {
    std::ofstream out(dir / "panel_input.csv", std::ios::binary);
    out << "t,U,event\n";
    std::size_t next_event = 0;
    for (const DiagnosticsSample& d : rec.diagnostics) {
      int is_event = 0;
      while (next_event < rec.events.size() && rec.events[next_event].t <= d.t) {
        is_event = 1;
        ++next_event;
      }
      out << format_double(d.t) << ',' << format_double(d.U) << ',' << is_event << '\n';
    }
  }
  {
    std::ofstream out(dir / "panel_boundary.csv", std::ios::binary);
    out << "t,v0,reference,eps_t\n";
    for (const DiagnosticsSample& d : rec.diagnostics) {
      double ref = reference ? (*reference)(d.t) : 0.0;
      out << format_double(d.t) << ',' << format_double(d.v0) << ',' << format_double(ref) << ','
          << format_double(d.eps_t) << '\n';
    }
  }
}

ordered_json summary_to_json(const RunSummary& s) {
  ordered_json j;
  j["status"] = s.status;
  j["exit_code"] = s.exit_code;
  j["t_end_reached"] = s.t_end_reached;
  j["event_count"] = s.event_count;
  j["min_dwell"] = s.min_dwell;
  j["max_norm"] = s.max_norm;
  j["final_norm"] = s.final_norm;
  j["max_abs_v0_after_tau"] = s.max_abs_v0_after_tau;
  j["tau_v0"] = s.tau_v0;
  return j;
}

}  // namespace

RunResult run_scenario(const Scenario& s) {
  s.validate();
  StateProfile w0 = make_profile(s.grid, s.u0, s.v0);

  RunResult result;
  switch (s.controller) {
    case ControllerKind::OpenLoop: {
      const CoeffFn input = s.open_loop_input;
      InputSignal sig = InputSignal::callback(
          [input](double t, const StateProfile&) { return input(t); });
      result.record = run_open_loop(s.model, s.grid, sig, w0, s.t_end);
      break;
    }
    case ControllerKind::Continuous:
      result.record = run_continuous_loop(s.model, s.grid, s.policy.reference, w0, s.t_end);
      break;
    case ControllerKind::EventTriggered:
      result.record = run_closed_loop(s.model, s.grid, s.policy, w0, s.input0, s.t_end);
      break;
    case ControllerKind::EventTriggeredLinear: {
      KernelVector kernels = extract_kernels(*s.linear, s.grid);
      result.record = run_closed_loop(s.model, s.grid, s.policy, w0, s.input0, s.t_end, &kernels);
      break;
    }
  }
  result.summary = summarize(s, result.record);
  return result;
}

RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunResult result;
  try {
    if (s.controller == ControllerKind::EventTriggeredLinear) {
      // Reuse a cached kernel extraction when one exists for this spec.
      s.validate();
      StateProfile w0 = make_profile(s.grid, s.u0, s.v0);
      KernelVector kernels = extract_kernels_cached(*s.linear, s.grid, out_dir);
      result.record = run_closed_loop(s.model, s.grid, s.policy, w0, s.input0, s.t_end, &kernels);
      result.summary = summarize(s, result.record);
    } else {
      result = run_scenario(s);
    }
  } catch (const BlowupError& e) {
    result.summary.exit_code = 3;
    result.summary.status = std::string("blow-up: ") + e.what();
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    out << summary_to_json(result.summary).dump(2) << "\n";
    return result;
  }

  write_trajectory_csv(out_dir / "trajectory.csv", result.record.trajectory, s.grid);
  write_boundary_csv(out_dir / "boundary.csv", result.record.trajectory);
  write_events_csv(out_dir / "events.csv", result.record.events);
  write_diagnostics_csv(out_dir / "diagnostics.csv", result.record.diagnostics);
  const CoeffFn* ref = s.controller == ControllerKind::OpenLoop ? nullptr : &s.policy.reference;
  write_panels(out_dir, result.record, ref);
  {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    out << summary_to_json(result.summary).dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "scenario.json", std::ios::binary);
    out << serialize_scenario(s);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Refinement study

namespace {

// Sup-norm distance between final profiles, finer level interpolated
// onto the coarser nodes.
double profile_deviation(const StateProfile& coarse, const StateProfile& fine) {
  const int nc = static_cast<int>(coarse.u.size()) - 1;
  const int nf = static_cast<int>(fine.u.size()) - 1;
  auto interp = [&](const std::vector<double>& vals, double x) {
    double pos = x * nf;
    int i = std::min(static_cast<int>(pos), nf - 1);
    double frac = pos - i;
    return vals[i] * (1.0 - frac) + vals[i + 1] * frac;
  };
  double dev = 0;
  for (int i = 0; i <= nc; ++i) {
    double x = static_cast<double>(i) / nc;
    dev = std::max(dev, std::fabs(coarse.u[i] - interp(fine.u, x)));
    dev = std::max(dev, std::fabs(coarse.v[i] - interp(fine.v, x)));
  }
  return dev;
}

}  // namespace

std::vector<RefinementRow> refinement_study(const Scenario& s, const std::vector<int>& levels) {
  if (levels.size() < 2) throw ValidationError("refinement study needs at least two levels");

  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());

  std::vector<StateProfile> finals;
  std::vector<std::size_t> counts;
  for (int n : sorted) {
    Scenario run = s;
    run.grid.n_cells = n;
    RunResult r = run_scenario(run);
    if (r.record.trajectory.profiles.empty()) {
      throw NumericsError("refinement level produced no profiles");
    }
    finals.push_back(r.record.trajectory.profiles.back());
    counts.push_back(r.summary.event_count);
  }

  std::vector<RefinementRow> rows(sorted.size());
  const StateProfile& finest = finals.back();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    rows[i].n_cells = sorted[i];
    rows[i].event_count = counts[i];
    rows[i].deviation_vs_finest =
        (i + 1 == sorted.size()) ? 0.0 : profile_deviation(finals[i], finest);
    rows[i].observed_order = std::numeric_limits<double>::quiet_NaN();
  }
  // Order from consecutive-level differences, which stays unbiased next
  // to the reference level.
  for (std::size_t i = 0; i + 2 < sorted.size(); ++i) {
    double d1 = profile_deviation(finals[i], finals[i + 1]);
    double d2 = profile_deviation(finals[i + 1], finals[i + 2]);
    double h_ratio = static_cast<double>(sorted[i + 1]) / sorted[i];
    if (d1 > 0 && d2 > 0 && h_ratio > 1) {
      rows[i].observed_order = std::log(d1 / d2) / std::log(h_ratio);
    }
  }
  return rows;
}

}  // namespace hyperctrl
