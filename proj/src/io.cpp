#include "chiral/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "chiral/kernels.hpp"
#include "chiral/krylov.hpp"
#include "chiral/lattice.hpp"
#include "chiral/oracle.hpp"
#include "chiral/rwa.hpp"
#include "chiral/single_cavity.hpp"
#include "chiral/vlevel.hpp"

namespace chiral {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + s + "'");
  }
  if (trim(s.substr(pos)).size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const double v = parse_double(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument("not an integer: '" + s + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("not a boolean: '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(trim(item)));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid Grid::parse(const std::string& raw) {
  Grid g;
  g.text = trim(raw);
  if (g.text.empty()) return g;
  if (g.text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(g.text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw InvalidArgument("range grid must be start:stop:step");
    const double start = parse_double(parts[0]);
    const double stop = parse_double(parts[1]);
    const double step = parse_double(parts[2]);
    if (!(step > 0)) throw InvalidArgument("grid step must be positive");
    if (stop < start) throw InvalidArgument("grid stop is below start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 10'000'000) throw InvalidArgument("grid has too many points");
    for (std::size_t i = 0; i < count; ++i) g.values.push_back(start + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(g.text);
    std::string item;
    while (std::getline(ss, item, ',')) g.values.push_back(parse_double(trim(item)));
  }
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (!std::isfinite(g.values[i])) throw InvalidArgument("grid values must be finite");
    if (i && !(g.values[i] > g.values[i - 1])) throw InvalidArgument("grid must be strictly increasing");
  }
  return g;
}

// ---------------------------------------------------------------------------
// RunConfig

namespace {

const std::vector<std::string> kModels = {"single", "vlevel", "lattice", "rwa"};

bool valid_command(const std::string& model, const std::string& command) {
  if (model == "single") return command == "eig" || command == "sweep" || command == "dynamics";
  if (model == "vlevel") return command == "eig";
  if (model == "lattice") return command == "ground" || command == "quench";
  if (model == "rwa") return command == "bound" || command == "oracle";
  return false;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(0, key + ": " + msg); };
  if (std::find(kModels.begin(), kModels.end(), model) == kModels.end()) fail("model", "unknown model '" + model + "'");
  if (!valid_command(model, command)) fail("command", "'" + command + "' is not a " + model + " command");
  try {
    params.validate();
  } catch (const InvalidArgument& e) {
    fail("params", e.what());
  }
  if (sectors.empty()) fail("sectors", "at least one sector is required");
  if (n_max < 0) fail("n_max", "must be >= 0");
  if (levels < 1) fail("levels", "must be >= 1");
  if (rwa_L < 2) fail("rwa_L", "must be >= 2");
  if (!(eig_tol > 0)) fail("eig_tol", "must be > 0");
  if (!(krylov_tol > 0)) fail("krylov_tol", "must be > 0");
  if (workers < 0) fail("workers", "must be >= 0");
  if (time_unit != "t" && time_unit != "g_t" && time_unit != "g_t_over_2pi") {
    fail("time_unit", "must be t, g_t or g_t_over_2pi");
  }
  for (double g : g_grid.values) {
    if (g < 0) fail("g", "coupling values must be >= 0");
  }
  const bool dynamics = command == "dynamics" || command == "quench";
  if (dynamics) {
    if (time_grid.empty()) fail("time", "a time grid is required");
    if (time_grid.values.front() != 0.0) fail("time", "the time grid must start at 0");
    if (time_unit != "t") {
      for (double g : g_values()) {
        if (g == 0) fail("time_unit", "g-scaled time needs g > 0; use time_unit = t");
      }
    }
  }
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "[run]\nmodel = " << model << "\ncommand = " << command << "\n";
  if (!output_dir.empty()) o << "output_dir = " << output_dir << "\n";
  o << "workers = " << workers << "\n";
  o << "\n[params]\nomega0 = " << fmt(params.omega0) << "\nomega_c = " << fmt(params.omega_c)
    << "\ng = " << fmt(params.g) << "\nJ = " << fmt(params.J) << "\ndelta = " << fmt(params.delta)
    << "\nL = " << params.L << "\n";
  o << "\n[basis]\nsectors = " << join_ints(sectors) << "\nn_max = " << n_max << "\nlevels = " << levels
    << "\nrwa_L = " << rwa_L << "\n";
  o << "\n[grids]\n";
  if (!g_grid.empty()) o << "g = " << g_grid.text << "\n";
  if (!time_grid.empty()) o << "time = " << time_grid.text << "\n";
  o << "time_unit = " << time_unit << "\n";
  o << "\n[solver]\neig_tol = " << fmt(eig_tol) << "\nkrylov_tol = " << fmt(krylov_tol)
    << "\ncross_check = " << (cross_check ? "true" : "false") << "\n";
  return o.str();
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::map<std::string, std::size_t> seen;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "params" && section != "basis" && section != "grids" && section != "solver") {
        throw ConfigError(lineno, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected key = value");
    if (section.empty()) throw ConfigError(lineno, "key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    if (seen.count(full)) throw ConfigError(lineno, "duplicate key '" + key + "' (first on line " + std::to_string(seen[full]) + ")");
    seen[full] = lineno;
    try {
      if (full == "run.model") c.model = value;
      else if (full == "run.command") c.command = value;
      else if (full == "run.output_dir") c.output_dir = value;
      else if (full == "run.workers") c.workers = parse_int(value);
      else if (full == "params.omega0") c.params.omega0 = parse_double(value);
      else if (full == "params.omega_c") c.params.omega_c = parse_double(value);
      else if (full == "params.g") c.params.g = parse_double(value);
      else if (full == "params.J") c.params.J = parse_double(value);
      else if (full == "params.delta") c.params.delta = parse_double(value);
      else if (full == "params.L") c.params.L = parse_int(value);
      else if (full == "basis.sectors") c.sectors = parse_int_list(value);
      else if (full == "basis.n_max") c.n_max = parse_int(value);
      else if (full == "basis.levels") c.levels = parse_int(value);
      else if (full == "basis.rwa_L") c.rwa_L = parse_int(value);
      else if (full == "grids.g") c.g_grid = Grid::parse(value);
      else if (full == "grids.time") c.time_grid = Grid::parse(value);
      else if (full == "grids.time_unit") c.time_unit = value;
      else if (full == "solver.eig_tol") c.eig_tol = parse_double(value);
      else if (full == "solver.krylov_tol") c.krylov_tol = parse_double(value);
      else if (full == "solver.cross_check") c.cross_check = parse_bool(value);
      else throw ConfigError(lineno, "unknown key '" + key + "' in [" + section + "]");
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(lineno, key + ": " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Point at the line that set the offending key when there is one.
    const std::string msg = e.what();
    const std::string key = msg.substr(0, msg.find(':'));
    for (const auto& [full, line] : seen) {
      if (full.substr(full.find('.') + 1) == key || (key == "params" && full.rfind("params.", 0) == 0)) {
        throw ConfigError(line, msg);
      }
    }
    throw;
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<double> RunConfig::g_values() const {
  if (g_grid.empty()) return {params.g};
  return g_grid.values;
}

std::vector<double> RunConfig::physical_times(double g) const {
  std::vector<double> t = time_grid.values;
  if (time_unit == "t") return t;
  const double scale = time_unit == "g_t" ? 1.0 / g : 2.0 * std::numbers::pi / g;
  for (double& x : t) x *= scale;
  return t;
}

std::string RunConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv("CHIRAL_LAB_OUT"); env && *env) return env;
  return "chiral_out";
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto p = [](const ModelParams& m) { return std::tie(m.omega0, m.omega_c, m.g, m.J, m.delta, m.L); };
  return a.model == b.model && a.command == b.command && p(a.params) == p(b.params) && a.sectors == b.sectors &&
         a.n_max == b.n_max && a.levels == b.levels && a.rwa_L == b.rwa_L && a.g_grid.values == b.g_grid.values &&
         a.time_grid.values == b.time_grid.values && a.time_unit == b.time_unit && a.eig_tol == b.eig_tol &&
         a.krylov_tol == b.krylov_tol && a.cross_check == b.cross_check && a.output_dir == b.output_dir &&
         a.workers == b.workers;
}

// ---------------------------------------------------------------------------
// SweepTable

SweepTable::SweepTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw InvalidArgument("a table needs at least one column");
}

bool SweepTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) throw InvalidArgument("row width does not match the table header");
  for (const auto& c : row) {
    if (c && !std::isfinite(*c)) {
      ++dropped_;
      return false;
    }
  }
  rows_.push_back(std::move(row));
  return true;
}

void SweepTable::set_provenance(std::string key, std::string value) {
  for (auto& kv : provenance_) {
    if (kv.first == key) {
      kv.second = std::move(value);
      return;
    }
  }
  provenance_.emplace_back(std::move(key), std::move(value));
}

void SweepTable::write_csv(std::ostream& out) const {
  for (const auto& [k, v] : provenance_) out << "# " << k << ": " << v << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      if (row[i]) out << fmt(*row[i]);
    }
    out << "\n";
  }
}

std::string SweepTable::to_csv() const {
  std::ostringstream o;
  write_csv(o);
  return o.str();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return o.str();
}

// ---------------------------------------------------------------------------
// run

namespace {

using Clock = std::chrono::steady_clock;
using Row = std::vector<SweepTable::Cell>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class Runner {
 public:
  Runner(const RunConfig& c, std::ostream& log) : cfg_(c), log_(log) {
    report_.output_dir = c.resolved_output_dir();
    // Neither the thread count nor the destination changes any result.
    RunConfig content = c;
    content.workers = 0;
    content.output_dir.clear();
    config_hash_ = sha256_hex(content.to_text());
  }

  SweepTable table(std::vector<std::string> cols) const {
    SweepTable t(std::move(cols));
    t.set_provenance("config_sha256", config_hash_);
    t.set_provenance("code_version", kCodeVersion);
    t.set_provenance("command", cfg_.model + " " + cfg_.command);
    t.set_provenance("tolerances", "eig_tol=" + fmt(cfg_.eig_tol) + " krylov_tol=" + fmt(cfg_.krylov_tol));
    t.set_provenance("units", "energies in omega0, t in 1/omega0");
    return t;
  }

  void emit(const std::string& name, const SweepTable& t) {
    std::filesystem::create_directories(report_.output_dir);
    const std::string body = t.to_csv();
    std::ofstream out(std::filesystem::path(report_.output_dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + name);
    out << body;
    report_.files.push_back({name, sha256_hex(body), t.rows()});
    if (t.dropped()) fail(name + ": dropped " + std::to_string(t.dropped()) + " non-finite rows");
    log_ << "wrote " << name << " (" << t.rows() << " rows)\n";
  }

  void fail(const std::string& msg) {
    report_.failures.push_back(msg);
    log_ << "failure: " << msg << "\n";
  }

  ModelParams params_at(double g) const {
    ModelParams p = cfg_.params;
    p.g = g;
    return p;
  }

  template <typename Fn>
  void parallel_points(std::size_t count, Fn&& fn) {
    std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (!errors[i].empty()) fail("point " + std::to_string(i) + ": " + errors[i]);
    }
  }

  void single_spectra(bool ground_only);
  void single_dynamics();
  void vlevel_eig();
  void lattice_ground();
  void lattice_quench_cmd();
  void rwa_bound();
  void rwa_oracle();

  RunReport finish() {
    std::filesystem::create_directories(report_.output_dir);
    nlohmann::ordered_json j;
    j["code_version"] = kCodeVersion;
    j["config"] = cfg_.to_text();
    j["config_sha256"] = config_hash_;
    j["files"] = nlohmann::json::array();
    for (const auto& f : report_.files) j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"rows", f.rows}});
    j["failures"] = report_.failures;
    j["wall_seconds"] = report_.wall_seconds;
    j["metrics"] = report_.metrics;
    j["workers"] = worker_count();
    std::ofstream out(std::filesystem::path(report_.output_dir) / "manifest.json");
    out << j.dump(2) << "\n";
    report_.exit_status = report_.failures.empty() ? 0 : 3;
    return report_;
  }

  RunReport report_;

 private:
  const RunConfig& cfg_;
  std::ostream& log_;
  std::string config_hash_;
};

void Runner::single_spectra(bool ground_only) {
  const auto gs = cfg_.g_values();
  const auto& ls = cfg_.sectors;
  const std::size_t levels = ground_only ? 1 : static_cast<std::size_t>(cfg_.levels);
  struct Point {
    bool ok = false;
    std::vector<double> energies;
    std::vector<ObservableRecord> obs;
    double drift = 0;
    int n_max = 0;
  };
  std::vector<Point> pts(gs.size() * ls.size());
  parallel_points(pts.size(), [&](std::size_t i) {
    const double g = gs[i / ls.size()];
    const int l = ls[i % ls.size()];
    SectorSpectrumOptions opt;
    opt.tol = cfg_.eig_tol;
    opt.track = std::max<std::size_t>(levels, 1);
    opt.n_max_ceiling = std::max(400, cfg_.n_max + 10);
    const auto s = sector_spectrum(params_at(g), l, cfg_.n_max, opt);
    Point& p = pts[i];
    const std::size_t k = std::min(levels, s.solution.count());
    p.energies.assign(s.solution.energies.begin(), s.solution.energies.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t m = 0; m < k; ++m) p.obs.push_back(observables(s.eigenstate(m)));
    p.drift = s.truncation_drift;
    p.n_max = s.solution.n_max;
    p.ok = true;
  });
  if (!ground_only) {
    auto t = table({"g", "l", "level", "energy", "truncation_drift", "n_max"});
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!pts[i].ok) continue;
      for (std::size_t m = 0; m < pts[i].energies.size(); ++m) {
        t.add_row({gs[i / ls.size()], double(ls[i % ls.size()]), double(m), pts[i].energies[m], pts[i].drift,
                   double(pts[i].n_max)});
      }
    }
    emit("single_eig.csv", t);
  }
  auto t = table({"g", "l", "level", "energy", "pop_e", "n_a", "n_b", "re_m_ab", "covar_xx", "var_sum", "var_diff",
                  "var_p_sum", "var_p_diff", "entropy", "cumulant3", "truncation_drift"});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) continue;
    for (std::size_t m = 0; m < pts[i].energies.size(); ++m) {
      const auto& o = pts[i].obs[m];
      t.add_row({gs[i / ls.size()], double(ls[i % ls.size()]), double(m), pts[i].energies[m], o.pop_e, o.n_a, o.n_b,
                 o.m_ab.real(), o.covar_xx, o.var_sum, o.var_diff, o.var_p_sum, o.var_p_diff, o.entropy, o.cumulant3,
                 pts[i].drift});
    }
  }
  emit(ground_only ? "single_sweep.csv" : "single_eig_observables.csv", t);
}

void Runner::single_dynamics() {
  auto t = table({"g", "t", "g_t", "omega0_t", "pop_e", "sigma_z", "n_a", "n_b", "n_total", "var_sum", "var_diff",
                  "entropy", "cumulant3", "norm", "lz", "energy"});
  for (double g : cfg_.g_values()) {
    const auto times = cfg_.physical_times(g);
    const ModelParams p = params_at(g);
    const FockState initial{{1, 0, 0, cplx(1.0)}};
    SpectralOptions so;
    so.n_max = cfg_.n_max;
    TimeSeries ts;
    try {
      ts = spectral_evolve(p, initial, times, so);
    } catch (const std::exception& e) {
      fail("g=" + fmt(g) + ": " + e.what());
      continue;
    }
    report_.metrics["truncation_drift_g=" + fmt(g)] = ts.truncation_drift;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto& o = ts.records[i];
      t.add_row({g, times[i], g * times[i], p.omega0 * times[i], o.pop_e, o.sigma_z, o.n_a, o.n_b, o.n_a + o.n_b,
                 o.var_sum, o.var_diff, o.entropy, o.cumulant3, o.norm, o.lz, ts.energy[i]});
    }
    if (cfg_.cross_check) {
      const auto basis = build_single_sector_basis(1, cfg_.n_max);
      const auto h = assemble_single_hamiltonian(p, basis);
      SectorState s{basis, std::vector<cplx>(basis.size()), 0.0};
      s.amplitudes[*basis.index_of(Branch::E, 0)] = 1.0;
      double dev = 0;
      KrylovOptions ko;
      ko.err_tol = cfg_.krylov_tol;
      for (std::size_t i = 1; i < times.size(); ++i) {
        krylov_propagate(h, s.amplitudes, times[i] - times[i - 1], ko);
        const auto o = observables(s);
        const auto& r = ts.records[i];
        dev = std::max({dev, std::abs(o.pop_e - r.pop_e), std::abs(o.n_a - r.n_a), std::abs(o.n_b - r.n_b),
                        std::abs(o.var_sum - r.var_sum), std::abs(o.cumulant3 - r.cumulant3)});
      }
      report_.metrics["krylov_max_deviation_g=" + fmt(g)] = dev;
    }
  }
  emit("single_dynamics.csv", t);
}

void Runner::vlevel_eig() {
  const auto gs = cfg_.g_values();
  const auto& ls = cfg_.sectors;
  struct Point {
    bool ok = false;
    std::vector<double> e;
    double drift = 0;
    int n_max = 0;
  };
  std::vector<Point> pts(gs.size() * ls.size());
  parallel_points(pts.size(), [&](std::size_t i) {
    SectorSpectrumOptions opt;
    opt.tol = cfg_.eig_tol;
    opt.track = static_cast<std::size_t>(cfg_.levels);
    opt.n_max_ceiling = std::max(400, cfg_.n_max + 10);
    const auto s = v_sector_spectrum(params_at(gs[i / ls.size()]), ls[i % ls.size()], cfg_.n_max, opt);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.levels), s.solution.count());
    pts[i].e.assign(s.solution.energies.begin(), s.solution.energies.begin() + static_cast<std::ptrdiff_t>(k));
    pts[i].drift = s.truncation_drift;
    pts[i].n_max = s.solution.n_max;
    pts[i].ok = true;
  });
  auto t = table({"g", "delta", "l", "level", "energy", "truncation_drift", "n_max"});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].ok) continue;
    for (std::size_t m = 0; m < pts[i].e.size(); ++m) {
      t.add_row({gs[i / ls.size()], cfg_.params.delta, double(ls[i % ls.size()]), double(m), pts[i].e[m],
                 pts[i].drift, double(pts[i].n_max)});
    }
  }
  emit("vlevel_eig.csv", t);
}

void Runner::lattice_ground() {
  const auto gs = cfg_.g_values();
  auto t = table({"g", "l", "energy", "residual", "pop_e", "total_n_a", "total_n_b", "n_a_site0", "n_b_site0",
                  "boundary_contaminated"});
  auto sites = table({"g", "l", "site", "n_a", "n_b"});
  std::map<std::pair<int, std::size_t>, double> energy;
  for (int l : cfg_.sectors) {
    LanczosOptions lo;
    for (std::size_t i = 0; i < gs.size(); ++i) {
      try {
        const auto r = lattice_ground_state(params_at(gs[i]), l, cfg_.n_max, lo);
        lo.start.assign(r.solution.vector(0).begin(), r.solution.vector(0).end());
        const auto& o = r.observables;
        energy[{l, i}] = r.solution.energies[0];
        t.add_row({gs[i], double(l), r.solution.energies[0], r.solution.residuals[0], o.pop_e, o.total_n_a,
                   o.total_n_b, o.n_a[0], o.n_b[0], r.boundary_contaminated ? 1.0 : 0.0});
        for (std::size_t s = 0; s < o.n_a.size(); ++s) sites.add_row({gs[i], double(l), double(s), o.n_a[s], o.n_b[s]});
      } catch (const std::exception& e) {
        fail("g=" + fmt(gs[i]) + " l=" + std::to_string(l) + ": " + e.what());
      }
    }
  }
  emit("lattice_ground.csv", t);
  emit("lattice_ground_sites.csv", sites);
  const bool have01 = std::count(cfg_.sectors.begin(), cfg_.sectors.end(), 0) &&
                      std::count(cfg_.sectors.begin(), cfg_.sectors.end(), 1);
  if (!have01 || cfg_.params.J <= 0) return;
  auto ph = table({"g", "phase", "binding", "lower_threshold", "resolution", "upper_estimate", "band_top"});
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (!energy.count({0, i}) || !energy.count({1, i})) continue;
    try {
      PhaseDiagnostics d;
      d.e0_ground = energy[{0, i}];
      d.e1_ground = energy[{1, i}];
      const auto single = sector_spectrum(params_at(gs[i]), 1, 40);
      d.single_upper = single.solution.energies.at(1);
      const auto label = classify_phase(params_at(gs[i]), d);
      const double code = label.phase == Phase::I ? 1 : label.phase == Phase::II ? 2 : label.phase == Phase::III ? 3 : 0;
      ph.add_row({gs[i], code, label.binding, label.lower_threshold, label.resolution, label.upper_estimate,
                  label.band_top});
    } catch (const std::exception& e) {
      fail("phase at g=" + fmt(gs[i]) + ": " + e.what());
    }
  }
  emit("lattice_phase.csv", ph);
}

void Runner::lattice_quench_cmd() {
  auto t = table({"g", "t", "g_t", "omega0_t", "pop_e", "total_n_a", "total_n_b", "n_a_site0", "n_b_site0", "norm",
                  "lz", "energy"});
  auto sites = table({"g", "t", "g_t", "site", "n_a", "n_b"});
  for (double g : cfg_.g_values()) {
    const auto times = cfg_.physical_times(g);
    QuenchOptions qo;
    qo.krylov.err_tol = cfg_.krylov_tol;
    QuenchResult r;
    try {
      r = lattice_quench(params_at(g), cfg_.n_max, times, qo);
    } catch (const std::exception& e) {
      fail("g=" + fmt(g) + ": " + e.what());
      continue;
    }
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      t.add_row({g, r.times[i], r.g_times[i], cfg_.params.omega0 * r.times[i], r.pop_e[i], r.total_n_a[i],
                 r.total_n_b[i], r.n_a_site0[i], r.n_b_site0[i], r.norm[i], r.lz[i], r.energy[i]});
      for (std::size_t s = 0; s < r.n_a[i].size(); ++s) {
        sites.add_row({g, r.times[i], r.g_times[i], double(s), r.n_a[i][s], r.n_b[i][s]});
      }
    }
    const std::string tag = "_g=" + fmt(g);
    report_.metrics["overlap_with_ground" + tag] = r.overlap_with_ground;
    report_.metrics["final_overlap_with_ground" + tag] = r.final_overlap_with_ground;
    report_.metrics["ground_energy" + tag] = r.ground_energy;
    report_.metrics["krylov_error_bound" + tag] = r.krylov.error_bound;
    report_.metrics["krylov_matvecs" + tag] = double(r.krylov.matvecs);
  }
  emit("lattice_quench.csv", t);
  emit("lattice_quench_sites.csv", sites);
}

void Runner::rwa_bound() {
  auto t = table({"g", "J", "e_minus", "e_plus", "band_bottom", "band_top"});
  for (double g : cfg_.g_values()) {
    const ModelParams p = params_at(g);
    try {
      const auto e = rwa_bound_state_energies(p);
      const double bottom = 0.5 * p.omega0 - 2 * p.J, top = 0.5 * p.omega0 + 2 * p.J;
      t.add_row({g, p.J, e ? SweepTable::Cell(e->first) : std::nullopt, e ? SweepTable::Cell(e->second) : std::nullopt,
                 bottom, top});
    } catch (const std::exception& ex) {
      fail("g=" + fmt(g) + ": " + ex.what());
    }
  }
  emit("rwa_bound.csv", t);
}

void Runner::rwa_oracle() {
  const auto gs = cfg_.g_values();
  auto summary = table({"g", "L", "n_below", "n_above", "lowest", "highest", "e_minus_formula", "e_plus_formula"});
  auto levels = table({"g", "k", "energy", "region"});
  std::vector<RwaSpectrum> spec(gs.size());
  parallel_points(gs.size(), [&](std::size_t i) { spec[i] = rwa_finite_oracle(params_at(gs[i]), cfg_.rwa_L); });
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const auto& s = spec[i];
    if (s.energies.empty()) continue;
    std::optional<std::pair<double, double>> f;
    try {
      f = rwa_bound_state_energies(params_at(gs[i]));
    } catch (const InvalidArgument&) {
    }
    summary.add_row({gs[i], double(cfg_.rwa_L), double(s.below.size()), double(s.above.size()), s.energies.front(),
                     s.energies.back(), f ? SweepTable::Cell(f->first) : std::nullopt,
                     f ? SweepTable::Cell(f->second) : std::nullopt});
    for (std::size_t k = 0; k < s.energies.size(); ++k) {
      const double e = s.energies[k];
      const double region = e < s.band_bottom - s.spacing ? -1 : e > s.band_top + s.spacing ? 1 : 0;
      levels.add_row({gs[i], double(k), e, region});
    }
  }
  emit("rwa_oracle.csv", summary);
  emit("rwa_oracle_levels.csv", levels);
}

}  // namespace

RunReport run(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.workers > 0) set_worker_count(config.workers);
  Runner r(config, log);
  const auto t0 = Clock::now();
  const std::string key = config.model + " " + config.command;
  if (key == "single eig") r.single_spectra(false);
  else if (key == "single sweep") r.single_spectra(true);
  else if (key == "single dynamics") r.single_dynamics();
  else if (key == "vlevel eig") r.vlevel_eig();
  else if (key == "lattice ground") r.lattice_ground();
  else if (key == "lattice quench") r.lattice_quench_cmd();
  else if (key == "rwa bound") r.rwa_bound();
  else if (key == "rwa oracle") r.rwa_oracle();
  r.report_.wall_seconds[key] = seconds_since(t0);
  return r.finish();
}

// ---------------------------------------------------------------------------
// selftest

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<double> eigenvalues(const SparseOperator& h) {
  DenseOptions o;
  o.want_vectors = false;
  return dense_eigensolve(h, o).energies;
}

}  // namespace

int run_selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](const std::string& name, double value, double tol) {
    const bool ok = value <= tol;
    if (!ok) ++failures;
    out << (ok ? "PASS " : "FAIL ") << name << "  (" << value << " <= " << tol << ")\n";
  };

  ModelParams p;
  p.g = 0.7;
  const int cap = 12;
  const auto oracle = brute_force_two_mode_oracle(p, cap);
  check("two-mode oracle block structure", offblock_norm(oracle.hamiltonian, oracle.lz_diagonal), 0.0);
  for (int l = -1; l <= 2; ++l) {
    const auto basis = build_single_sector_basis(l, cap);
    std::vector<std::size_t> keep, full;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].n_a <= cap) {
        keep.push_back(i);
        full.push_back(two_mode_index(basis[i].branch == Branch::E, basis[i].n_a, basis[i].n_b, cap));
      }
    }
    const auto hs = assemble_single_hamiltonian(p, basis).restrict_to(keep);
    const auto ho = oracle.hamiltonian.restrict_to(full);
    check("single-cavity sector l=" + std::to_string(l) + " matrix equals oracle block",
          max_abs_diff(hs.to_dense(), ho.to_dense()), 0.0);
    check("single-cavity sector l=" + std::to_string(l) + " spectrum",
          max_abs_diff(eigenvalues(hs), oracle.sector_energies(l)), 1e-10);
  }

  ModelParams v = p;
  v.delta = 0.3;
  const auto voracle = brute_force_vlevel_oracle(v, 10);
  for (int l = -1; l <= 1; ++l) {
    const VSectorBasis basis(l, 10);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].n_a <= 10 && basis[i].n_b <= 10) keep.push_back(i);
    }
    const auto hs = assemble_v_hamiltonian(v, basis).restrict_to(keep);
    check("V-level sector l=" + std::to_string(l) + " spectrum",
          max_abs_diff(eigenvalues(hs), voracle.sector_energies(l)), 1e-10);
  }

  ModelParams lp;
  lp.g = 0.5;
  lp.J = 0.2;
  lp.L = 3;
  const int site_cap = 2;
  const auto loracle = brute_force_lattice_oracle(lp, site_cap);
  for (int l = 0; l <= 1; ++l) {
    const auto basis = build_lattice_sector_basis(lp, l, lp.L * site_cap);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const auto a = basis.a_occ(i), b = basis.b_occ(i);
      if (*std::max_element(a.begin(), a.end()) <= site_cap && *std::max_element(b.begin(), b.end()) <= site_cap) {
        keep.push_back(i);
      }
    }
    const auto hs = assemble_lattice_hamiltonian(lp, basis).restrict_to(keep);
    check("lattice L=3 sector l=" + std::to_string(l) + " spectrum",
          max_abs_diff(eigenvalues(hs), loracle.sector_energies(l)), 1e-10);
  }

  ModelParams kp;
  kp.g = 1.0;
  const std::vector<double> times{0.0, 0.5, 1.0, 1.5};
  const auto ts = spectral_evolve(kp, FockState{{1, 0, 0, cplx(1.0)}}, times, {40, false, 1e-6});
  const auto basis = build_single_sector_basis(1, 40);
  const auto h = assemble_single_hamiltonian(kp, basis);
  std::vector<cplx> psi(basis.size());
  psi[*basis.index_of(Branch::E, 0)] = 1.0;
  double dev = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    krylov_propagate(h, psi, times[i] - times[i - 1], {1e-12, 40, 100000});
    const auto o = observables(SectorState{basis, psi, times[i]});
    dev = std::max({dev, std::abs(o.pop_e - ts.records[i].pop_e), std::abs(o.n_a - ts.records[i].n_a)});
  }
  check("spectral vs Krylov propagation", dev, 1e-8);

  out << (failures ? "selftest FAILED (" + std::to_string(failures) + ")" : std::string("selftest passed")) << "\n";
  return failures ? 1 : 0;
}

}  // namespace chiral
