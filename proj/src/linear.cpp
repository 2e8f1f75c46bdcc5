#include "hyperctrl/linear.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hyperctrl/errors.hpp"

namespace hyperctrl {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> trapezoid_weights(const Grid& grid) {
  std::vector<double> w(grid.n_nodes(), grid.h());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

LinearSystemSpec LinearSystemSpec::parse(std::string_view eps1, std::string_view eps2,
                                         std::string_view c1, std::string_view c2, double q) {
  LinearSystemSpec s;
  s.eps1 = CoeffFn::parse(eps1, {"x"});
  s.eps2 = CoeffFn::parse(eps2, {"x"});
  s.c1 = CoeffFn::parse(c1, {"x"});
  s.c2 = CoeffFn::parse(c2, {"x"});
  s.q = q;
  return s;
}

SystemModel to_system_model(const LinearSystemSpec& spec) {
  SystemModel m;
  m.lambda_u = spec.eps1;
  m.lambda_v = spec.eps2;
  m.f_u = CoeffFn::parse("(" + spec.c1.to_string() + ")*v", {"u", "v", "x"});
  m.f_v = CoeffFn::parse("(" + spec.c2.to_string() + ")*u", {"u", "v", "x"});
  m.g = CoeffFn::parse("(" + fmt17(spec.q) + ")*v", {"v", "t"});
  return m;
}

std::uint64_t linear_spec_hash(const LinearSystemSpec& spec, const Grid& grid) {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(h, spec.eps1.to_string());
  h = fnv1a(h, spec.eps2.to_string());
  h = fnv1a(h, spec.c1.to_string());
  h = fnv1a(h, spec.c2.to_string());
  h = fnv1a(h, fmt17(spec.q));
  h = fnv1a(h, std::to_string(grid.n_cells));
  return h;
}

namespace detail {

KernelVector extract_kernels_from_model(const SystemModel& m, const Grid& grid,
                                        std::uint64_t spec_hash) {
  Predictor p(m, grid);
  const int nn = grid.n_nodes();
  const std::vector<double> w = trapezoid_weights(grid);

  StateProfile zero;
  zero.t = 0;
  zero.u.assign(nn, 0.0);
  zero.v.assign(nn, 0.0);

  auto response = [&](const StateProfile& s, double held) {
    return p.solve_downstream(p.predict(s), held)[0];
  };

  // The held-input direction must pass through with unit coefficient.
  double r_held = response(zero, 1.0);
  if (std::fabs(r_held - 1.0) > 1e-10) {
    throw NumericsError("held-input response is not 1; prediction operator is inconsistent");
  }

  std::vector<double> r_u(nn), r_v(nn);
  StateProfile basis = zero;
  for (int i = 0; i < nn; ++i) {
    basis.u[i] = 1.0;
    r_u[i] = response(basis, 0.0);
    basis.u[i] = 0.0;
  }
  for (int i = 0; i < nn; ++i) {
    basis.v[i] = 1.0;
    r_v[i] = response(basis, 0.0);
    basis.v[i] = 0.0;
  }

  // Superposition probes; a nonlinear coupling shows up here immediately.
  const int m1 = nn / 4, m2 = nn / 2, m3 = (3 * nn) / 4;
  const int probes[][2] = {{m1, m2}, {0, m3}, {m2, nn - 1}};
  for (auto [iu, iv] : probes) {
    StateProfile s = zero;
    s.u[iu] = 1.0;
    s.v[iv] = 1.0;
    double got = response(s, 0.0);
    if (std::fabs(got - (r_u[iu] + r_v[iv])) > 1e-8) {
      throw NumericsError("prediction pipeline responded nonlinearly; spec is not linear");
    }
  }
  {
    StateProfile s = zero;
    s.u[m2] = 2.0;
    s.v[m1] = -3.0;
    double got = response(s, 0.0);
    if (std::fabs(got - (2.0 * r_u[m2] - 3.0 * r_v[m1])) > 1e-8) {
      throw NumericsError("prediction pipeline responded nonlinearly; spec is not linear");
    }
  }

  KernelVector k;
  k.n_cells = grid.n_cells;
  k.spec_hash = spec_hash;
  k.k_vu.resize(nn);
  k.k_vv.resize(nn);
  for (int i = 0; i < nn; ++i) {
    k.k_vu[i] = -r_u[i] / w[i];
    k.k_vv[i] = r_v[i] / w[i];
  }
  return k;
}

}  // namespace detail

KernelVector extract_kernels(const LinearSystemSpec& spec, const Grid& grid) {
  return detail::extract_kernels_from_model(to_system_model(spec), grid,
                                            linear_spec_hash(spec, grid));
}

double closed_form_trigger(const KernelVector& k, const StateProfile& s, double U_bar) {
  if (static_cast<int>(s.u.size()) != k.n_cells + 1) {
    throw ValidationError("state grid does not match the kernel grid");
  }
  return U_bar - closed_form_update(k, s);
}

double closed_form_update(const KernelVector& k, const StateProfile& s) {
  const int nn = k.n_cells + 1;
  if (static_cast<int>(s.u.size()) != nn || static_cast<int>(s.v.size()) != nn) {
    throw ValidationError("state grid does not match the kernel grid");
  }
  const double h = 1.0 / k.n_cells;
  double acc = 0.0;
  for (int i = 0; i < nn; ++i) {
    double w = (i == 0 || i == nn - 1) ? 0.5 * h : h;
    acc += w * (k.k_vu[i] * s.u[i] - k.k_vv[i] * s.v[i]);
  }
  return acc;
}

void save_kernels(const std::filesystem::path& file, const KernelVector& k) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write kernel cache: " + file.string());
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(k.spec_hash));
  out << "# hyperctrl-kernels spec_hash=" << hash << " n_cells=" << k.n_cells << "\n";
  out << "x,k_vu,k_vv\n";
  for (int i = 0; i <= k.n_cells; ++i) {
    out << fmt17(static_cast<double>(i) / k.n_cells) << "," << fmt17(k.k_vu[i]) << ","
        << fmt17(k.k_vv[i]) << "\n";
  }
}

KernelVector load_kernels(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read kernel cache: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("kernel cache is empty: " + file.string());

  KernelVector k;
  unsigned long long hash = 0;
  int n_cells = -1;
  if (std::sscanf(line.c_str(), "# hyperctrl-kernels spec_hash=%llx n_cells=%d", &hash,
                  &n_cells) != 2 ||
      n_cells < 1) {
    throw ValidationError("kernel cache header is malformed: " + file.string());
  }
  k.spec_hash = hash;
  k.n_cells = n_cells;
  if (!std::getline(in, line) || line != "x,k_vu,k_vv") {
    throw ValidationError("kernel cache column header is malformed: " + file.string());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x, kvu, kvv;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &x, &kvu, &kvv) != 3) {
      throw ValidationError("kernel cache row is malformed: " + file.string());
    }
    k.k_vu.push_back(kvu);
    k.k_vv.push_back(kvv);
  }
  if (static_cast<int>(k.k_vu.size()) != k.n_cells + 1) {
    throw ValidationError("kernel cache row count does not match n_cells: " + file.string());
  }
  return k;
}

KernelVector extract_kernels_cached(const LinearSystemSpec& spec, const Grid& grid,
                                    const std::filesystem::path& cache_dir) {
  std::uint64_t hash = linear_spec_hash(spec, grid);
  char name[48];
  std::snprintf(name, sizeof(name), "kernels-%016llx.csv", static_cast<unsigned long long>(hash));
  std::filesystem::path file = cache_dir / name;
  if (std::filesystem::exists(file)) {
    KernelVector k = load_kernels(file);
    if (k.spec_hash == hash && k.n_cells == grid.n_cells) return k;
  }
  KernelVector k = extract_kernels(spec, grid);
  std::filesystem::create_directories(cache_dir);
  save_kernels(file, k);
  return k;
}

}  // namespace hyperctrl
