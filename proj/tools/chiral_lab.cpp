// chiral_lab: spectra, sweeps and dynamics of a two-level emitter coupled to
// counter-rotating cavity modes. Every run writes CSV tables plus manifest.json.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chiral/eigensolvers.hpp"
#include "chiral/io.hpp"

namespace {

struct Flags {
  std::string config;
  std::string sectors;
  std::string g_grid;
  std::string time_grid;
  std::optional<double> g, J, delta, omega0, omega_c, tmax, dt, eig_tol, krylov_tol;
  std::optional<int> L, n_max, levels, rwa_L, workers;
  std::string time_unit;
  std::string out;
  bool cross_check = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "config file; flags given here override it");
  sub->add_option("--l", f.sectors, "comma-separated sector labels");
  sub->add_option("--g-grid", f.g_grid, "coupling grid, start:stop:step or a,b,c");
  sub->add_option("--g", f.g, "single coupling value");
  sub->add_option("--J", f.J, "hopping");
  sub->add_option("--L", f.L, "number of lattice sites");
  sub->add_option("--delta", f.delta, "V-level detuning of |2>");
  sub->add_option("--omega0", f.omega0, "emitter frequency");
  sub->add_option("--omega-c", f.omega_c, "cavity frequency");
  sub->add_option("--nmax", f.n_max, "sector truncation");
  sub->add_option("--levels", f.levels, "eigenvalues reported per sector");
  sub->add_option("--rwa-L", f.rwa_L, "chain length of the finite rotating-wave oracle");
  sub->add_option("--time-grid", f.time_grid, "time grid, start:stop:step or a,b,c");
  sub->add_option("--tmax", f.tmax, "shorthand for a time grid 0:tmax:dt");
  sub->add_option("--dt", f.dt, "step used with --tmax (default 0.05)");
  sub->add_option("--time-unit", f.time_unit, "t, g_t or g_t_over_2pi");
  sub->add_option("--eig-tol", f.eig_tol, "eigenvalue convergence tolerance");
  sub->add_option("--krylov-tol", f.krylov_tol, "Krylov error tolerance per output interval");
  sub->add_flag("--cross-check", f.cross_check, "single dynamics: also propagate with Krylov");
  sub->add_option("-o,--out", f.out, "output directory (default $CHIRAL_LAB_OUT or ./chiral_out)");
  sub->add_option("--workers", f.workers, "OpenMP threads");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flags are rendered as config text so that they go through the same parser and diagnostics.
chiral::RunConfig build_config(const std::string& model, const std::string& command, const Flags& f) {
  chiral::RunConfig c = f.config.empty() ? chiral::RunConfig{} : chiral::RunConfig::load(f.config);
  c.model = model;
  c.command = command;
  std::ostringstream extra;
  extra << c.to_text();
  std::string text = extra.str();
  auto set = [&](const std::string& section, const std::string& key, const std::string& value) {
    const std::string header = "[" + section + "]\n";
    const auto sec = text.find(header);
    auto line = text.find("\n" + key + " = ", sec);
    const auto next_sec = text.find("\n[", sec + 1);
    if (line != std::string::npos && (next_sec == std::string::npos || line < next_sec)) {
      const auto end = text.find('\n', line + 1);
      text.replace(line + 1, end - line - 1, key + " = " + value);
    } else {
      text.insert(sec + header.size(), key + " = " + value + "\n");
    }
  };
  if (!f.sectors.empty()) set("basis", "sectors", f.sectors);
  if (!f.g_grid.empty()) set("grids", "g", f.g_grid);
  if (f.g) set("params", "g", fmt(*f.g));
  if (f.J) set("params", "J", fmt(*f.J));
  if (f.L) set("params", "L", std::to_string(*f.L));
  if (f.delta) set("params", "delta", fmt(*f.delta));
  if (f.omega0) set("params", "omega0", fmt(*f.omega0));
  if (f.omega_c) set("params", "omega_c", fmt(*f.omega_c));
  if (f.n_max) set("basis", "n_max", std::to_string(*f.n_max));
  if (f.levels) set("basis", "levels", std::to_string(*f.levels));
  if (f.rwa_L) set("basis", "rwa_L", std::to_string(*f.rwa_L));
  if (!f.time_grid.empty()) set("grids", "time", f.time_grid);
  if (f.tmax) set("grids", "time", "0:" + fmt(*f.tmax) + ":" + fmt(f.dt.value_or(0.05)));
  if (!f.time_unit.empty()) set("grids", "time_unit", f.time_unit);
  if (f.eig_tol) set("solver", "eig_tol", fmt(*f.eig_tol));
  if (f.krylov_tol) set("solver", "krylov_tol", fmt(*f.krylov_tol));
  if (f.cross_check) set("solver", "cross_check", "true");
  if (!f.out.empty()) set("run", "output_dir", f.out);
  if (f.workers) set("run", "workers", std::to_string(*f.workers));
  return chiral::RunConfig::parse(text);
}

}  // namespace

int main(int argc, char** argv) {
  chiral::ensure_dense_backend(argv);
  CLI::App app{"chiral_lab: two-level emitter in counter-rotating cavity modes"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"single", {"eig", "dynamics", "sweep"}},
      {"vlevel", {"eig"}},
      {"lattice", {"ground", "quench"}},
      {"rwa", {"bound", "oracle"}},
  };
  Flags flags;
  std::string chosen_model, chosen_command;
  for (const auto& [model, subs] : commands) {
    auto* m = app.add_subcommand(model, model + " model");
    m->require_subcommand(1);
    for (const auto& cmd : subs) {
      auto* s = m->add_subcommand(cmd, model + " " + cmd);
      add_common(s, flags);
      s->callback([&, model = model, cmd = cmd] {
        chosen_model = model;
        chosen_command = cmd;
      });
    }
  }
  auto* selftest = app.add_subcommand("selftest", "oracle-equivalence checks at small sizes");
  auto* from_config = app.add_subcommand("run", "run the command named in a config file");
  std::string config_path;
  from_config->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (selftest->parsed()) return chiral::run_selftest(std::cout);

  try {
    const chiral::RunConfig config =
        from_config->parsed() ? chiral::RunConfig::load(config_path) : build_config(chosen_model, chosen_command, flags);
    const auto report = chiral::run(config, std::cerr);
    std::cout << "output: " << report.output_dir << "\n";
    for (const auto& f : report.files) std::cout << "  " << f.name << "  " << f.rows << " rows  " << f.sha256 << "\n";
    for (const auto& [k, v] : report.metrics) std::cout << "  " << k << " = " << fmt(v) << "\n";
    if (!report.failures.empty()) std::cout << report.failures.size() << " failed points (see manifest.json)\n";
    return report.exit_status;
  } catch (const chiral::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
