// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "hbf/config.hpp"
#include "hbf/experiment.hpp"
#include "hbf/nn/checkpoint.hpp"

using namespace hbf;
namespace fs = std::filesystem;

namespace {

const fs::path kSmokeConfig = fs::path(HBF_SOURCE_DIR) / "configs" / "smoke.yaml";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HBFKIT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

const fs::path& smoke_dataset() {
  static const fs::path dir = [] {
    auto d = fresh_dir("hbf_cli_smoke");
    std::ostringstream log;
    cmd_gen(load_config(kSmokeConfig), d, false, log);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("missing required key is named") {
  try {
    parse_config("system:\n  n_rf: 2\n  n_u: 2\n  k_ss: 4\n");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("system.n_t") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("system: [1, 2"), ConfigError);
  CHECK_THROWS_AS(parse_bits("zero"), ConfigError);
  CHECK(parse_bits("full") == std::nullopt);
  CHECK(parse_bits("8") == 8);
}

TEST_CASE("feedback bit accounting") {
  CHECK(rssi_feedback_bits(32, 4, 8) == 1024);
  CHECK(rssi_feedback_bits(8, 2, std::nullopt) == 8 * 2 * 32);
  CHECK(csi_feedback_bits(128, 4, 4) == 4 * rssi_feedback_bits(32, 4, 8));
  CHECK(is_csi_method("fdp"));
  CHECK(is_csi_method("hsho"));
  CHECK_FALSE(is_csi_method("afp_net"));
  CHECK_FALSE(is_known_method("magic"));
}

TEST_CASE("gen refuses to overwrite without --force") {
  auto d = fresh_dir("hbf_cli_gen");
  const std::string base = "gen --config " + kSmokeConfig.string() + " --out " + d.string();
  CHECK(run_cli(base) == 0);
  CHECK(fs::exists(d / "manifest.json"));
  CHECK(run_cli(base) == 2);
  CHECK(run_cli(base + " --force") == 0);
  fs::remove_all(d);
}

TEST_CASE("exit codes") {
  CHECK(run_cli("gen --config /nonexistent.yaml --out /tmp/hbf_cli_never") == 2);
  CHECK(run_cli("bogus") == 2);
  const auto& d = smoke_dataset();
  CHECK(run_cli("train --out " + d.string() + " --epochs 0") == 2);
  CHECK(run_cli("eval --out " + d.string() + " --methods magic") == 2);

  auto bare = fresh_dir("hbf_cli_bare");
  std::ostringstream log;
  cmd_gen(load_config(kSmokeConfig), bare, false, log);
  CHECK(run_cli("eval --out " + bare.string() + " --methods afp_net") == 4);
  {
    std::ofstream(bare / "dnn" / "rssi.bin", std::ios::app) << 'x';
  }
  CHECK(run_cli("eval --out " + bare.string() + " --methods fdp") == 3);
  fs::remove_all(bare);
}

TEST_CASE("train writes a loadable checkpoint and per-epoch log") {
  const auto& d = smoke_dataset();
  std::ostringstream log;
  auto a = cmd_train(d, {nn::Variant::kAfpNet, 3, true}, log);
  CHECK(fs::exists(a.checkpoint));
  CHECK(count_lines(a.log_csv) == 1 + 3);
  CHECK(std::isfinite(a.test_sum_rate));
  const std::string first = slurp(a.checkpoint);
  auto b = cmd_train(d, {nn::Variant::kAfpNet, 3, true}, log);
  CHECK(slurp(b.checkpoint) == first);
  CHECK_NOTHROW(nn::load_checkpoint(a.checkpoint));
}

TEST_CASE("eval produces rows with fdp above zf") {
  const auto& d = smoke_dataset();
  std::ostringstream log;
  auto csv = d / "fz.csv";
  auto rows = cmd_eval(d, {{"fdp", "zf"}, std::nullopt, csv}, log);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "fdp");
  CHECK(rows[0].mean >= rows[1].mean);
  CHECK(rows[0].n == 30);
  CHECK(rows[0].feedback_bits == csi_feedback_bits(8, 2, 4));
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,mean,std,n,feedback_bits");
  CHECK(count_lines(csv) == 3);

  cmd_train(d, {nn::Variant::kAfpNet, 2, true}, log);
  auto nets = cmd_eval(d, {{"afp_net", "random_ap"}, std::optional<std::optional<int>>(4), std::nullopt}, log);
  REQUIRE(nets.size() == 2);
  CHECK(nets[0].feedback_bits == rssi_feedback_bits(4, 2, 4));
}

TEST_CASE("n_b sweep covers every precision") {
  ExperimentConfig cfg = load_config(kSmokeConfig);
  cfg.sweep.variable = "n_b";
  cfg.sweep.values = {"2", "4", "8", "full"};
  cfg.sweep.methods = {"afp_net", "fdp"};
  auto out = fresh_dir("hbf_cli_sweep_nb");
  std::ostringstream log;
  auto rows = cmd_sweep(cfg, out, 1, false, log);
  CHECK(rows.size() == 8);
  bool full = false;
  for (const auto& r : rows) full |= (r.sweep_value == "full");
  CHECK(full);
  CHECK(count_lines(out / "sweep.csv") == 9);
  CHECK(fs::exists(out / "sweep.gp"));
  CHECK_THROWS_AS(cmd_sweep(cfg, out, 1, false, log), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("noise sweep raises every rate as noise falls; infeasible points skip") {
  ExperimentConfig cfg = load_config(kSmokeConfig);
  cfg.sweep.variable = "noise_power";
  cfg.sweep.values = {"-120", "-130", "-140"};
  cfg.sweep.methods = {"fdp", "zf", "pzf", "omp"};
  auto out = fresh_dir("hbf_cli_sweep_noise");
  std::ostringstream log;
  auto rows = cmd_sweep(cfg, out, 1, false, log);
  REQUIRE(rows.size() == 12);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(rows[4 + m].result.mean > rows[m].result.mean);
    CHECK(rows[8 + m].result.mean > rows[4 + m].result.mean);
  }

  cfg.sweep.variable = "n_u";
  cfg.sweep.values = {"2", "3"};  // n_rf = 2
  cfg.sweep.methods = {"fdp"};
  std::ostringstream log2;
  auto nu = cmd_sweep(cfg, out, 1, true, log2);
  CHECK(nu.size() == 1);
  CHECK(log2.str().find("skipping n_u=3") != std::string::npos);
  fs::remove_all(out);
}
