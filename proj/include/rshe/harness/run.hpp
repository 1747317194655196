#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rshe/harness/config.hpp"
#include "rshe/stats.hpp"

namespace rshe::harness {

// A generic tidy table: fixed column names, rows of cells already formatted
// with full double round-trip precision where numeric.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct RunResult {
  RunConfig config;
  std::map<std::string, Table> tables;  // name -> tidy table
  int blow_up_count = 0;
  int replicas_used = 0;
  double wall_seconds = 0.0;  // diagnostic only, never part of hashed output
  bool reused_existing = false;
};

// Executes the configured experiment. Deterministic in the canonical config;
// the worker count changes nothing but the wall time. Replica blow-ups are
// excluded and counted; more than 1% of them aborts with
// BlowUpBudgetExceeded.
RunResult run_experiment(const RunConfig& config);

class BlowUpBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ToleranceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output directory for a config: <output_dir>/<experiment>-<hash16>.
std::filesystem::path result_dir(const RunConfig& config);

// Writes config echo, results.csv (generic estimator schema) and the tidy
// per-experiment tables. Rerunning an already-complete directory is a no-op.
// Returns true if the directory was freshly written.
bool write_result(const RunResult& result);

// Derives plot-ready CSVs from a written result directory.
void emit_plotdata(const std::filesystem::path& result_directory);

// Kernel verification sweep (the `verify-kernels` surface): one row per
// (quantity, parameters) with closed form, oracle, relative error and the
// tolerance after overrides (name -> tolerance). The caller decides what a
// failed row means (the CLI exits 3 via ToleranceFailure).
Table kernel_verification_table(const std::map<std::string, double>& tol_overrides = {});
bool kernel_table_all_pass(const Table& table);

}  // namespace rshe::harness
