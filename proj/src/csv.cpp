#include "hyperctrl/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file.string());
  return out;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj,
                          const Grid& grid) {
  auto out = open_out(file);
  out << "t,x,u,v\n";
  for (const StateProfile& p : traj.profiles) {
    for (int i = 0; i < grid.n_nodes(); ++i) {
      out << format_double(p.t) << ',' << format_double(grid.node(i)) << ','
          << format_double(p.u[i]) << ',' << format_double(p.v[i]) << '\n';
    }
  }
}

void write_boundary_csv(const std::filesystem::path& file, const Trajectory& traj) {
  auto out = open_out(file);
  out << "t,v0,u0,U\n";
  for (const BoundarySample& b : traj.boundary_trace) {
    out << format_double(b.t) << ',' << format_double(b.v0) << ',' << format_double(b.u0) << ','
        << format_double(b.U) << '\n';
  }
}

void write_events_csv(const std::filesystem::path& file, const std::vector<TriggerEvent>& events) {
  auto out = open_out(file);
  out << "k,t_k,U_old,U_new\n";
  for (std::size_t k = 0; k < events.size(); ++k) {
    out << k << ',' << format_double(events[k].t) << ',' << format_double(events[k].U_old) << ','
        << format_double(events[k].U_new) << '\n';
  }
}

void write_diagnostics_csv(const std::filesystem::path& file,
                           const std::vector<DiagnosticsSample>& diagnostics) {
  auto out = open_out(file);
  out << "t,norm_w_inf,v0,eps_t,U\n";
  for (const DiagnosticsSample& d : diagnostics) {
    out << format_double(d.t) << ',' << format_double(d.norm_w_inf) << ',' << format_double(d.v0)
        << ',' << format_double(d.eps_t) << ',' << format_double(d.U) << '\n';
  }
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV: " + file.string());
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    const char* p = line.c_str();
    for (;;) {
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p) {
        throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                              ": non-numeric cell '" + std::string(p) + "'");
      }
      row.push_back(v);
      p = end;
      if (*p == ',') {
        ++p;
      } else if (*p == '\0' || *p == '\r') {
        break;
      } else {
        throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                              ": malformed row near '" + std::string(p) + "'");
      }
    }
    if (row.size() != table.header.size()) {
      throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " +
                            std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace hyperctrl
