#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hyperctrl/controller.hpp"

namespace hyperctrl {

// %.17g, which strtod round-trips exactly. All CSV output goes through
// this so reruns are byte-identical.
std::string format_double(double v);

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj,
                          const Grid& grid);
void write_boundary_csv(const std::filesystem::path& file, const Trajectory& traj);
void write_events_csv(const std::filesystem::path& file, const std::vector<TriggerEvent>& events);
void write_diagnostics_csv(const std::filesystem::path& file,
                           const std::vector<DiagnosticsSample>& diagnostics);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& file);

}  // namespace hyperctrl
