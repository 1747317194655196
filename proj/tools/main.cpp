#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rshe/build_info_fwd.hpp"
#include "rshe/errors.hpp"
#include "rshe/harness/config.hpp"
#include "rshe/harness/csv.hpp"
#include "rshe/harness/run.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitToleranceFailure = 3;
constexpr int kExitBlowUpBudget = 4;

void apply_env_seed(rshe::harness::RunConfig& config) {
  const char* env = std::getenv("RIESZ_SHE_SEED");
  if (env == nullptr) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw rshe::ConfigError("RIESZ_SHE_SEED is not an integer");
  }
  std::fprintf(stderr,
               "WARNING: RIESZ_SHE_SEED=%llu overrides the config seed %llu\n",
               v, static_cast<unsigned long long>(config.seed));
  config.seed = v;
}

std::map<std::string, double> parse_tol_overrides(
    const std::vector<std::string>& items) {
  std::map<std::string, double> overrides;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw rshe::ConfigError("--tol-overrides entries must look like name=tol");
    }
    overrides[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return overrides;
}

int run_command(const std::string& config_path, int workers_override,
                const std::string& output_override) {
  auto config = rshe::harness::RunConfig::from_file(config_path);
  apply_env_seed(config);
  if (workers_override > 0) config.workers = workers_override;
  if (!output_override.empty()) config.output_dir = output_override;

  const auto dir = rshe::harness::result_dir(config);
  if (std::filesystem::exists(dir / "_complete")) {
    std::cout << "result already complete, nothing to do: " << dir.string()
              << "\n";
    return 0;
  }
  const auto result = rshe::harness::run_experiment(config);
  rshe::harness::write_result(result);
  std::cout << "wrote " << dir.string() << " (" << result.replicas_used
            << " replicas, " << result.blow_up_count << " blow-ups, "
            << result.wall_seconds << " s)\n";
  if (config.experiment == rshe::harness::Experiment::kKernelVerify &&
      !rshe::harness::kernel_table_all_pass(result.tables.at("kernels"))) {
    throw rshe::harness::ToleranceFailure("kernel verification has failing rows");
  }
  return 0;
}

int verify_kernels_command(const std::vector<std::string>& tol_items,
                           const std::string& output) {
  const auto overrides = parse_tol_overrides(tol_items);
  const auto table = rshe::harness::kernel_verification_table(overrides);
  if (!output.empty()) {
    rshe::harness::write_table_csv(table, output);
    std::cout << "wrote " << output << "\n";
  } else {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      std::cout << (i ? "," : "") << table.columns[i];
    }
    std::cout << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        std::cout << (i ? "," : "") << rshe::harness::csv_escape(row[i]);
      }
      std::cout << "\n";
    }
  }
  if (!rshe::harness::kernel_table_all_pass(table)) {
    throw rshe::harness::ToleranceFailure("kernel verification has failing rows");
  }
  std::cout << "all kernel checks within tolerance\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riesz-she: simulation laboratory for the 1-D stochastic heat "
               "equation with Riesz-kernel colored noise"};
  app.set_version_flag("--version", std::string(rshe::version_string()) + " (" +
                                        rshe::build_describe() + ")");
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config JSON file")->required();
  run->add_option("--workers", workers, "worker threads (overrides config)");
  run->add_option("--output", output_dir, "output directory (overrides config)");

  std::vector<std::string> tol_items;
  std::string verify_output;
  auto* verify = app.add_subcommand("verify-kernels",
                                    "run the kernel verification sweep");
  verify->add_option("--tol-overrides", tol_items,
                     "per-quantity tolerance overrides, name=tol");
  verify->add_option("--output", verify_output, "write CSV here instead of stdout");

  std::string plot_dir;
  auto* plots = app.add_subcommand("emit-plots",
                                   "derive plot-ready CSVs from a result dir");
  plots->add_option("result_dir", plot_dir, "result directory")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return run_command(config_path, workers, output_dir);
    if (verify->parsed()) return verify_kernels_command(tol_items, verify_output);
    if (plots->parsed()) {
      rshe::harness::emit_plotdata(plot_dir);
      std::cout << "wrote plot CSVs in " << plot_dir << "\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rshe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const rshe::harness::ToleranceFailure& e) {
    std::cerr << "tolerance failure: " << e.what() << "\n";
    return kExitToleranceFailure;
  } catch (const rshe::harness::BlowUpBudgetExceeded& e) {
    std::cerr << "blow-up budget exceeded: " << e.what() << "\n";
    return kExitBlowUpBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
