#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperctrl/scenario.hpp"

namespace fs = std::filesystem;
using namespace hyperctrl;

namespace {

fs::path resolve_out_dir(const Scenario& s, const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (!s.output_dir.empty()) return s.output_dir;
  const char* root = std::getenv("HYPERCTRL_OUT_ROOT");
  fs::path base = root && *root ? fs::path(root) : fs::path("out");
  return base / (s.name.empty() ? "scenario" : fs::path(s.name).stem().string());
}

Scenario load_with_overrides(const std::string& ref, int n_cells, double t_end) {
  Scenario s = load_scenario(ref);
  if (n_cells > 0) s.grid.n_cells = n_cells;
  if (t_end > 0) s.t_end = t_end;
  s.validate();
  return s;
}

int cmd_simulate(const std::string& ref, int n_cells, double t_end, const std::string& out) {
  Scenario s = load_with_overrides(ref, n_cells, t_end);
  fs::path dir = resolve_out_dir(s, out);
  RunResult r = run_scenario(s, dir);
  std::cout << "scenario:   " << s.name << "\n"
            << "output:     " << dir.string() << "\n"
            << "status:     " << r.summary.status << "\n"
            << "events:     " << r.summary.event_count << "\n"
            << "min dwell:  " << format_double(r.summary.min_dwell) << "\n"
            << "max |w|:    " << format_double(r.summary.max_norm) << "\n"
            << "final |w|:  " << format_double(r.summary.final_norm) << "\n";
  return r.summary.exit_code;
}

int cmd_kernels(const std::string& ref, const std::string& out_file) {
  Scenario s = load_scenario(ref);
  if (!s.linear) {
    std::cerr << "error: '" << ref << "' has no linear model block; kernels need one\n";
    return 2;
  }
  KernelVector k = extract_kernels(*s.linear, s.grid);
  save_kernels(out_file, k);
  std::cout << "wrote " << out_file << " (n_cells=" << k.n_cells << ")\n";
  return 0;
}

int cmd_refine(const std::string& ref, const std::vector<int>& levels, const std::string& out) {
  Scenario s = load_scenario(ref);
  auto rows = refinement_study(s, levels);
  std::printf("%8s  %14s  %10s  %8s\n", "n_cells", "dev_vs_finest", "order", "events");
  for (const auto& row : rows) {
    std::printf("%8d  %14.6e  %10.3f  %8zu\n", row.n_cells, row.deviation_vs_finest,
                row.observed_order, row.event_count);
  }
  if (!out.empty()) {
    fs::path file(out);
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream o(file, std::ios::binary);
    o << "n_cells,dev_vs_finest,order,events\n";
    for (const auto& row : rows) {
      o << row.n_cells << ',' << format_double(row.deviation_vs_finest) << ','
        << format_double(row.observed_order) << ',' << row.event_count << '\n';
    }
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulation and event-triggered boundary control of 2x2 semilinear "
      "transport systems"};
  app.require_subcommand(1);

  std::string scenario_ref, out_dir, out_file;
  int n_cells = 0;
  double t_end = 0;
  std::vector<int> levels;

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write CSV artifacts");
  sim->add_option("scenario", scenario_ref, "Scenario file or built-in name")->required();
  sim->add_option("--n-cells", n_cells, "Override the spatial resolution");
  sim->add_option("--t-end", t_end, "Override the simulation horizon");
  sim->add_option("--out", out_dir, "Output directory (default: $HYPERCTRL_OUT_ROOT/<name>)");

  auto* ker = app.add_subcommand("kernels", "Extract closed-form kernels for a linear scenario");
  ker->add_option("scenario", scenario_ref, "Linear scenario file or built-in name")->required();
  ker->add_option("--out", out_file, "Kernel CSV path")->required();

  auto* ref = app.add_subcommand("refine", "Grid refinement study");
  ref->add_option("scenario", scenario_ref, "Scenario file or built-in name")->required();
  ref->add_option("--levels", levels, "Cell counts, e.g. --levels 25,50,100")
      ->required()
      ->delimiter(',');
  ref->add_option("--out", out_file, "Write the table as CSV");

  std::string builtins;
  for (const auto& name : builtin_scenario_names()) builtins += "  " + name + "\n";
  app.footer("Built-in scenarios:\n" + builtins);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario_ref, n_cells, t_end, out_dir);
    if (ker->parsed()) return cmd_kernels(scenario_ref, out_file);
    if (ref->parsed()) return cmd_refine(scenario_ref, levels, out_file);
  } catch (const BlowupError& e) {
    std::cerr << "simulation blew up: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
