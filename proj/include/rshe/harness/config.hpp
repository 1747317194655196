#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rshe/estimators.hpp"
#include "rshe/grid.hpp"
#include "rshe/sigma.hpp"
#include "rshe/solver.hpp"

namespace rshe::harness {

enum class Experiment {
  kKernelVerify,
  kAlphaToOne,
  kAlphaContinuity,
  kHolder,
  kTightness,
};

std::string experiment_name(Experiment e);

struct HolderConfig {
  std::vector<int> spatial_lag_cells;
  std::vector<int> temporal_lag_steps;
  int base_time_stride = 16;
};

struct TightnessConfig {
  double a = 0.49;
  std::vector<double> delta_grid;
  double epsilon_iqr_factor = 0.5;
  int offset_time_stride = 4;
  int offset_space_stride = 1;
  int base_time_stride = 16;
  int base_space_stride = 1;
  int value_sample_stride = 64;  // field-value subsampling for the IQR
};

// One experiment run, fully specified. The canonical JSON form (sorted keys,
// all defaults materialized) is what gets echoed, hashed and used for
// idempotence; two configs are the same run iff their canonical forms match.
struct RunConfig {
  Experiment experiment = Experiment::kKernelVerify;
  std::uint64_t seed = 20260810;
  int replicas = 2000;
  int workers = 0;  // 0 = min(8, hardware)
  double gamma = 1.0;
  std::vector<int> k_list{2};
  std::vector<double> alphas;
  std::optional<double> alpha0;  // alpha-continuity reference
  GridSpec grid;
  SigmaSpec sigma = SigmaSpec::tanh(1.0);
  solver::InitialProfile init = solver::InitialProfile::constant_one();
  std::string output_dir = "out";
  std::vector<std::pair<double, double>> fdd_points;  // (t, x); default (T, 0)
  HolderConfig holder;
  TightnessConfig tightness;

  // Parses strictly: unknown keys anywhere are a ConfigError, as is a missing
  // or unsupported schema_version.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);

  nlohmann::json canonical_json() const;
  std::uint64_t config_hash() const;
  void validate() const;  // throws ConfigError
  int effective_workers() const;
};

}  // namespace rshe::harness
