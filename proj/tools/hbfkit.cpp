// SPDX-License-Identifier: Apache-2.0
//
// hbfkit: generate datasets, train the networks, evaluate against baselines,
// run sweeps and the selftest.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hbf/config.hpp"
#include "hbf/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIntegrity = 3, kDependency = 4 };

std::filesystem::path resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("HBF_DATA_ROOT"); env && *env) return env;
  throw hbf::ConfigError("no output directory: pass --out or set HBF_DATA_ROOT");
}

hbf::ExperimentConfig load_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed) {
  if (path.empty()) throw hbf::ConfigError("--config is required");
  hbf::ExperimentConfig cfg = hbf::load_config(path);
  std::cerr << "config: " << path << '\n';
  if (seed) {
    cfg.system.seed = *seed;
    cfg.training.seed = *seed;
    std::cerr << "config: system.seed=" << *seed << " (from --seed)\n";
  } else {
    std::cerr << "config: system.seed=" << cfg.system.seed << " (from config)\n";
  }
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid beamforming toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool deterministic = false;
  bool force = false;
  std::string variant = "afp_net";
  std::optional<int> epochs;
  std::string methods;
  std::string n_b;
  std::string results;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML configuration file");
    sub->add_option("--out", out_dir, "dataset / output directory (default: $HBF_DATA_ROOT)");
    sub->add_option("--seed", seed, "root seed, overrides system.seed");
    sub->add_option("--jobs", jobs, "parallel sweep points")->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", deterministic, "sequential reductions (always on in this build)");
    sub->add_flag("--force", force, "overwrite existing outputs");
  };

  auto* gen = app.add_subcommand("gen", "build the core and DNN datasets, burst and codebook");
  add_common(gen);
  auto* train = app.add_subcommand("train", "train a network on a generated dataset");
  add_common(train);
  train->add_option("--variant", variant, "afp_net or hbf_net")->check(CLI::IsMember({"afp_net", "hbf_net"}));
  train->add_option("--epochs", epochs, "override training.epochs");
  auto* eval = app.add_subcommand("eval", "evaluate methods on the test split");
  add_common(eval);
  eval->add_option("--methods", methods, "comma-separated methods (default: eval.methods)");
  eval->add_option("--n-b", n_b, "RSSI bits for network inputs (integer or 'full')");
  eval->add_option("--results", results, "results CSV path (default: <out>/results.csv)");
  auto* sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
  add_common(sweep);
  auto* selftest = app.add_subcommand("selftest", "run the invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*selftest) {
      const int failures = hbf::run_selftest(std::cout);
      return failures == 0 ? kOk : kFailure;
    }
    if (*gen) {
      const auto cfg = load_with_overrides(config_path, seed);
      hbf::cmd_gen(cfg, resolve_out(out_dir), force, std::cout);
      return kOk;
    }
    if (*train) {
      if (!config_path.empty()) std::cerr << "config: training uses the dataset's config snapshot\n";
      hbf::TrainRequest req{hbf::nn::variant_from_string(variant), epochs, deterministic};
      hbf::cmd_train(resolve_out(out_dir), req, std::cout);
      return kOk;
    }
    if (*eval) {
      const auto dir = resolve_out(out_dir);
      hbf::EvalRequest req;
      if (!methods.empty()) {
        req.methods = split_list(methods);
      } else {
        req.methods = hbf::EvalConfig{}.methods;
      }
      if (!n_b.empty()) req.n_b = hbf::parse_bits(n_b);
      req.results_csv = results.empty() ? dir / "results.csv" : std::filesystem::path(results);
      hbf::cmd_eval(dir, req, std::cout);
      return kOk;
    }
    if (*sweep) {
      const auto cfg = load_with_overrides(config_path, seed);
      hbf::cmd_sweep(cfg, resolve_out(out_dir), jobs, force, std::cout);
      return kOk;
    }
  } catch (const hbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const hbf::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kIntegrity;
  } catch (const hbf::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << '\n';
    return kDependency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
