#include "rshe/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "rshe/errors.hpp"
#include "rshe/rng.hpp"

namespace rshe::harness {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return it.key() == k;
        }) == allowed.end()) {
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

template <typename T>
T fetch(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
  }
}

Experiment parse_experiment(const std::string& name) {
  if (name == "kernel-verify") return Experiment::kKernelVerify;
  if (name == "alpha-to-one") return Experiment::kAlphaToOne;
  if (name == "alpha-continuity") return Experiment::kAlphaContinuity;
  if (name == "holder") return Experiment::kHolder;
  if (name == "tightness") return Experiment::kTightness;
  throw ConfigError("unknown experiment \"" + name + "\"");
}

SigmaSpec parse_sigma(const json& j) {
  check_keys(j, {"kind", "lambda"}, "sigma");
  const auto kind = fetch<std::string>(j, "kind", "tanh");
  const double lambda = fetch<double>(j, "lambda", 1.0);
  if (kind == "constant") return SigmaSpec::constant(lambda);
  if (kind == "linear") return SigmaSpec::linear(lambda);
  if (kind == "tanh") return SigmaSpec::tanh(lambda);
  throw ConfigError("unknown sigma kind \"" + kind + "\"");
}

GridSpec parse_grid(const json& j) {
  check_keys(j,
             {"horizon", "time_steps", "half_width", "space_points", "kappa",
              "obs_half_width"},
             "grid");
  GridSpec g;
  g.horizon = fetch<double>(j, "horizon", g.horizon);
  g.n_time = fetch<int>(j, "time_steps", g.n_time);
  g.half_width = fetch<double>(j, "half_width", g.half_width);
  g.n_space = fetch<int>(j, "space_points", g.n_space);
  g.kappa = fetch<double>(j, "kappa", g.kappa);
  g.obs_half_width = fetch<double>(j, "obs_half_width", g.obs_half_width);
  return g;
}

solver::InitialProfile parse_init(const json& j) {
  const auto name = j.get<std::string>();
  if (name == "constant_one") return solver::InitialProfile::constant_one();
  if (name == "bump") return solver::InitialProfile::bump();
  throw ConfigError("unknown init \"" + name + "\" (custom profiles are API-only)");
}

}  // namespace

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kKernelVerify:
      return "kernel-verify";
    case Experiment::kAlphaToOne:
      return "alpha-to-one";
    case Experiment::kAlphaContinuity:
      return "alpha-continuity";
    case Experiment::kHolder:
      return "holder";
    case Experiment::kTightness:
      return "tightness";
  }
  throw std::logic_error("bad experiment enum");
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(j,
             {"schema_version", "experiment", "seed", "replicas", "workers",
              "gamma", "k_list", "alphas", "alpha0", "grid", "sigma", "init",
              "output_dir", "fdd_points", "holder", "tightness"},
             "config root");
  const int version = fetch<int>(j, "schema_version", -1);
  if (version != 1) {
    throw ConfigError("schema_version must be present and equal to 1");
  }
  if (!j.contains("experiment")) throw ConfigError("missing \"experiment\"");

  RunConfig c;
  c.experiment = parse_experiment(j.at("experiment").get<std::string>());
  c.seed = fetch<std::uint64_t>(j, "seed", c.seed);
  c.replicas = fetch<int>(j, "replicas", c.replicas);
  c.workers = fetch<int>(j, "workers", c.workers);
  c.gamma = fetch<double>(j, "gamma", c.gamma);
  c.k_list = fetch<std::vector<int>>(j, "k_list", c.k_list);
  c.alphas = fetch<std::vector<double>>(j, "alphas", c.alphas);
  if (j.contains("alpha0")) c.alpha0 = fetch<double>(j, "alpha0", 0.5);
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  if (j.contains("sigma")) c.sigma = parse_sigma(j.at("sigma"));
  if (j.contains("init")) c.init = parse_init(j.at("init"));
  c.output_dir = fetch<std::string>(j, "output_dir", c.output_dir);
  c.fdd_points = {{c.grid.horizon, 0.0}};  // default marginal: (T, 0)
  if (j.contains("fdd_points")) {
    c.fdd_points.clear();
    for (const auto& p : j.at("fdd_points")) {
      if (!p.is_array() || p.size() != 2) {
        throw ConfigError("fdd_points entries must be [t, x] pairs");
      }
      c.fdd_points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }
  if (j.contains("holder")) {
    const auto& h = j.at("holder");
    check_keys(h, {"spatial_lag_cells", "temporal_lag_steps", "base_time_stride"},
               "holder");
    c.holder.spatial_lag_cells =
        fetch<std::vector<int>>(h, "spatial_lag_cells", {});
    c.holder.temporal_lag_steps =
        fetch<std::vector<int>>(h, "temporal_lag_steps", {});
    c.holder.base_time_stride = fetch<int>(h, "base_time_stride", 16);
  }
  if (j.contains("tightness")) {
    const auto& t = j.at("tightness");
    check_keys(t,
               {"a", "delta_grid", "epsilon_iqr_factor", "offset_time_stride",
                "offset_space_stride", "base_time_stride", "base_space_stride",
                "value_sample_stride"},
               "tightness");
    c.tightness.a = fetch<double>(t, "a", c.tightness.a);
    c.tightness.delta_grid = fetch<std::vector<double>>(t, "delta_grid", {});
    c.tightness.epsilon_iqr_factor =
        fetch<double>(t, "epsilon_iqr_factor", c.tightness.epsilon_iqr_factor);
    c.tightness.offset_time_stride =
        fetch<int>(t, "offset_time_stride", c.tightness.offset_time_stride);
    c.tightness.offset_space_stride =
        fetch<int>(t, "offset_space_stride", c.tightness.offset_space_stride);
    c.tightness.base_time_stride =
        fetch<int>(t, "base_time_stride", c.tightness.base_time_stride);
    c.tightness.base_space_stride =
        fetch<int>(t, "base_space_stride", c.tightness.base_space_stride);
    c.tightness.value_sample_stride =
        fetch<int>(t, "value_sample_stride", c.tightness.value_sample_stride);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

void RunConfig::validate() const {
  try {
    grid.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (replicas < 1) throw ConfigError("replicas must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (!(gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
  if (k_list.empty()) throw ConfigError("k_list must not be empty");
  for (int k : k_list) {
    if (k < 2 || k % 2 != 0) throw ConfigError("k_list entries must be even and >= 2");
  }
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alphas must lie in (0, 1]");
  }
  const bool needs_mc = experiment != Experiment::kKernelVerify;
  if (needs_mc && replicas < 40) {
    throw ConfigError("Monte Carlo experiments need replicas >= 40 for batching");
  }
  switch (experiment) {
    case Experiment::kKernelVerify:
      break;
    case Experiment::kAlphaToOne:
      if (alphas.empty()) throw ConfigError("alpha-to-one: alphas must not be empty");
      for (double a : alphas) {
        if (a >= 1.0) throw ConfigError("alpha-to-one: alphas must lie in (0,1)");
      }
      break;
    case Experiment::kAlphaContinuity:
      if (!alpha0 || !(*alpha0 > 0.0 && *alpha0 < 1.0)) {
        throw ConfigError("alpha-continuity: alpha0 in (0,1) is required");
      }
      if (alphas.empty()) throw ConfigError("alpha-continuity: alphas must not be empty");
      for (double a : alphas) {
        if (a >= 1.0) throw ConfigError("alpha-continuity: alphas must lie in (0,1)");
      }
      break;
    case Experiment::kHolder:
      if (alphas.empty()) throw ConfigError("holder: alphas must not be empty");
      if (holder.spatial_lag_cells.empty() || holder.temporal_lag_steps.empty()) {
        throw ConfigError("holder: lag lists must not be empty");
      }
      if (holder.base_time_stride < 1) throw ConfigError("holder: base_time_stride >= 1");
      break;
    case Experiment::kTightness:
      if (alphas.empty()) throw ConfigError("tightness: alphas must not be empty");
      if (tightness.delta_grid.empty()) throw ConfigError("tightness: delta_grid required");
      if (!(tightness.a > 0.0 && tightness.a < 0.5)) {
        throw ConfigError("tightness: a must lie in (0, 1/2)");
      }
      if (!(tightness.epsilon_iqr_factor > 0.0)) {
        throw ConfigError("tightness: epsilon_iqr_factor must be > 0");
      }
      break;
  }
  for (const auto& [t, x] : fdd_points) {
    if (!(t >= 0.0 && t <= grid.horizon) || std::abs(x) > grid.obs_half_width) {
      throw ConfigError("fdd_points must lie in [0,T] x observation window");
    }
  }
}

nlohmann::json RunConfig::canonical_json() const {
  json j;
  j["schema_version"] = 1;
  j["experiment"] = experiment_name(experiment);
  j["seed"] = seed;
  j["replicas"] = replicas;
  // workers intentionally excluded: they may never change any output.
  j["gamma"] = gamma;
  j["k_list"] = k_list;
  j["alphas"] = alphas;
  if (alpha0) j["alpha0"] = *alpha0;
  j["grid"] = {{"horizon", grid.horizon},
               {"time_steps", grid.n_time},
               {"half_width", grid.half_width},
               {"space_points", grid.n_space},
               {"kappa", grid.kappa},
               {"obs_half_width", grid.obs_half_width}};
  j["sigma"] = {{"kind", sigma.name()}, {"lambda", sigma.lambda}};
  j["init"] = init.name();
  json points = json::array();
  for (const auto& [t, x] : fdd_points) points.push_back({t, x});
  j["fdd_points"] = points;
  if (experiment == Experiment::kHolder) {
    j["holder"] = {{"spatial_lag_cells", holder.spatial_lag_cells},
                   {"temporal_lag_steps", holder.temporal_lag_steps},
                   {"base_time_stride", holder.base_time_stride}};
  }
  if (experiment == Experiment::kTightness) {
    j["tightness"] = {{"a", tightness.a},
                      {"delta_grid", tightness.delta_grid},
                      {"epsilon_iqr_factor", tightness.epsilon_iqr_factor},
                      {"offset_time_stride", tightness.offset_time_stride},
                      {"offset_space_stride", tightness.offset_space_stride},
                      {"base_time_stride", tightness.base_time_stride},
                      {"base_space_stride", tightness.base_space_stride},
                      {"value_sample_stride", tightness.value_sample_stride}};
  }
  return j;
}

std::uint64_t RunConfig::config_hash() const {
  return rng::fnv1a64(canonical_json().dump());
}

int RunConfig::effective_workers() const {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(8u, hw == 0 ? 1u : hw));
}

}  // namespace rshe::harness
