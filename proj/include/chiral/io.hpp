#pragma once

// Run configuration, tabular output and the command dispatcher behind chiral_lab.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chiral/errors.hpp"
#include "chiral/hilbert.hpp"

namespace chiral {

/// Configuration error with the 1-based line it refers to (0 for flags).
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : InvalidArgument(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A grid written either as start:stop:step or as a comma-separated list.
struct Grid {
  std::string text;
  std::vector<double> values;

  static Grid parse(const std::string& text);
  bool empty() const noexcept { return values.empty(); }
};

struct RunConfig {
  std::string model = "single";  ///< single | vlevel | lattice | rwa
  std::string command = "eig";   ///< eig | sweep | dynamics | ground | quench | bound | oracle
  ModelParams params;
  std::vector<int> sectors{0, 1};
  int n_max = 150;
  int levels = 4;                ///< eigenvalues reported per sector
  int rwa_L = 400;
  Grid g_grid;                   ///< empty means the single value params.g
  Grid time_grid;
  std::string time_unit = "g_t"; ///< t | g_t | g_t_over_2pi
  double eig_tol = 1e-10;
  double krylov_tol = 1e-9;
  bool cross_check = false;      ///< single dynamics: compare against Krylov propagation
  std::string output_dir;        ///< empty: $CHIRAL_LAB_OUT, then ./chiral_out
  int workers = 0;               ///< 0 keeps the OpenMP default

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Flat key = value text with [sections]; parse(to_text()) reproduces the config.
  std::string to_text() const;
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  std::vector<double> g_values() const;
  /// Physical times from time_grid and time_unit at coupling g.
  std::vector<double> physical_times(double g) const;
  std::string resolved_output_dir() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Rectangular table; empty optionals are written as empty cells.
class SweepTable {
 public:
  using Cell = std::optional<double>;

  explicit SweepTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<Cell>& row(std::size_t i) const { return rows_[i]; }

  /// Rows containing NaN or Inf are dropped and counted; returns false then.
  bool add_row(std::vector<Cell> row);
  std::size_t dropped() const noexcept { return dropped_; }

  void set_provenance(std::string key, std::string value);

  /// '#'-prefixed provenance lines, header row, then rows at 17 significant digits.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::string>> provenance_;
  std::size_t dropped_ = 0;
};

std::string sha256_hex(std::string_view data);

struct EmittedFile {
  std::string name;
  std::string sha256;
  std::size_t rows = 0;
};

struct RunReport {
  int exit_status = 0;
  std::string output_dir;
  std::vector<EmittedFile> files;
  std::vector<std::string> failures;          ///< per-row solver failures
  std::map<std::string, double> wall_seconds;
  std::map<std::string, double> metrics;      ///< scalar results (overlaps, cross-check deviations)
};

/// Runs one configured command, writing CSV tables and manifest.json into the
/// output directory. Identical configs give byte-identical CSV files.
RunReport run(const RunConfig& config, std::ostream& log);

/// Oracle-equivalence checks at small sizes; one PASS/FAIL line per check.
int run_selftest(std::ostream& out);

inline constexpr const char* kCodeVersion = "0.1.0";

}  // namespace chiral
