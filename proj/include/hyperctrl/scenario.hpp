#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hyperctrl/controller.hpp"
#include "hyperctrl/csv.hpp"

namespace hyperctrl {

enum class ControllerKind { OpenLoop, Continuous, EventTriggered, EventTriggeredLinear };

// One fully specified experiment. Scenarios come from JSON files (schema
// in docs/formats.md) or from the built-in registry, and serialize back
// to the identical document.
struct Scenario {
  std::string name;
  SystemModel model;
  std::optional<LinearSystemSpec> linear;  // when set, model is derived from it
  CoeffFn u0 = CoeffFn::parse("0", {"x"});
  CoeffFn v0 = CoeffFn::parse("0", {"x"});
  Grid grid{50};
  ControllerKind controller = ControllerKind::OpenLoop;
  CoeffFn open_loop_input = CoeffFn::parse("0", {"t"});
  TriggerPolicy policy = TriggerPolicy::state_dependent(0.05, 0.25);
  double input0 = 0;  // U(0) for the event-triggered controllers
  double t_end = 10;
  std::uint64_t seed = 0;
  std::string output_dir;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

std::vector<std::string> builtin_scenario_names();
std::optional<Scenario> builtin_scenario(const std::string& name);

// Resolves a built-in name first, then falls back to reading a file.
Scenario load_scenario(const std::string& path_or_builtin);
Scenario parse_scenario_text(const std::string& text, const std::string& origin);
std::string serialize_scenario(const Scenario& s);

struct RunSummary {
  int exit_code = 0;  // 0 ok, 3 blow-up, 4 Zeno suspicion
  std::string status = "ok";
  double t_end_reached = 0;
  std::size_t event_count = 0;
  double min_dwell = 0;
  double max_norm = 0;
  double final_norm = 0;
  double max_abs_v0_after_tau = 0;
  double tau_v0 = 0;
};

struct RunResult {
  RunSummary summary;
  ClosedLoopRecord record;
};

// Runs in memory. On blow-up the partial record is empty and the
// summary carries exit code 3.
RunResult run_scenario(const Scenario& s);
// Additionally writes trajectory/boundary/events/diagnostics CSVs, the
// per-panel plot data, and summary.json into out_dir.
RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

struct RefinementRow {
  int n_cells = 0;
  double deviation_vs_finest = 0;  // sup-norm of the final profile difference
  double observed_order = 0;       // from consecutive-level differences; NaN where undefined
  std::size_t event_count = 0;
};

// Reruns the scenario per level and compares final-time profiles
// (linear interpolation onto the coarser nodes).
std::vector<RefinementRow> refinement_study(const Scenario& s, const std::vector<int>& levels);

}  // namespace hyperctrl
