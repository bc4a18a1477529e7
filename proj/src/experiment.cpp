// SPDX-License-Identifier: Apache-2.0
#include "hbf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "hbf/fdp_design.hpp"
#include "hbf/hashing.hpp"
#include "hbf/hbf_design.hpp"
#include "hbf/nn/checkpoint.hpp"
#include "hbf/rate_metrics.hpp"

namespace hbf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethods = {"afp_net", "hbf_net", "hsho", "fdp",
                                           "zf",      "pzf",     "omp",  "random_ap"};

MethodResult summarize(const std::string& method, const std::vector<double>& v, std::uint64_t bits) {
  MethodResult r;
  r.method = method;
  r.n = v.size();
  r.feedback_bits = bits;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return r;
}

SplitIndices dataset_split(const DatasetBundle& b) {
  return split(b.dnn.records.size(), SplitSpec{b.config.dataset.train_fraction, b.config.system.seed});
}

fs::path meta_path(const fs::path& data_dir, nn::Variant v) {
  return data_dir / "models" / (nn::to_string(v) + "_meta.json");
}

nn::TrainState load_model(const fs::path& data_dir, nn::Variant v, const DatasetBundle& b) {
  const fs::path ckpt = checkpoint_path(data_dir, v);
  if (!fs::exists(ckpt)) {
    throw DependencyError("method needs a trained " + nn::to_string(v) + " checkpoint at " + ckpt.string());
  }
  std::ifstream in(meta_path(data_dir, v));
  if (!in) throw IntegrityError("checkpoint sidecar missing for " + ckpt.string());
  const json meta = json::parse(in);
  if (meta.at("config_sha256").get<std::string>() != b.config_hash) {
    throw IntegrityError("checkpoint " + ckpt.string() + " was trained on a different dataset config");
  }
  if (meta.at("checkpoint_sha256").get<std::string>() != sha256_file(ckpt)) {
    throw IntegrityError("checkpoint hash mismatch for " + ckpt.string());
  }
  nn::TrainState st = nn::load_checkpoint(ckpt);
  if (static_cast<std::size_t>(st.net.spec().classes) != b.core.codebook.size()) {
    throw IntegrityError("checkpoint classifier does not match the codebook");
  }
  return st;
}

}  // namespace

bool is_csi_method(const std::string& m) {
  return m == "hsho" || m == "fdp" || m == "zf" || m == "pzf" || m == "omp";
}

bool is_known_method(const std::string& m) {
  return std::find(kMethods.begin(), kMethods.end(), m) != kMethods.end();
}

std::uint64_t rssi_feedback_bits(int k, int n_u, std::optional<int> n_b) {
  return static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n_u) *
         static_cast<std::uint64_t>(n_b.value_or(32));
}

std::uint64_t csi_feedback_bits(int n_t, int n_u, int bits) {
  return static_cast<std::uint64_t>(n_t) * static_cast<std::uint64_t>(n_u) * 2u *
         static_cast<std::uint64_t>(bits);
}

void write_results_csv(const fs::path& path, const std::vector<MethodResult>& rows) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out.precision(10);
  out << "method,mean,std,n,feedback_bits\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.mean << ',' << r.std << ',' << r.n << ',' << r.feedback_bits << '\n';
  }
}

GenSummary cmd_gen(const ExperimentConfig& cfg, const fs::path& out, bool force, std::ostream& log) {
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw ConfigError("output directory " + out.string() + " is not empty; pass --force to overwrite");
    fs::remove_all(out);
  }
  fs::create_directories(out);
  DatasetBundle b;
  b.config = cfg;
  b.config_hash = sha256_hex(dump_config(cfg));
  log << "generating core dataset (" << cfg.dataset.n_core << " records)\n";
  b.core = build_core_dataset(cfg, cfg.dataset.n_core, [&](const std::string& m) { log << "  " << m << '\n'; });
  log << "generating DNN dataset (" << cfg.dataset.n_dnn << " records)\n";
  b.dnn = build_dnn_dataset(cfg, b.core.burst, cfg.dataset.n_dnn);
  write_dataset(out, b);
  GenSummary s{b.core.records.size(), b.dnn.records.size(), b.core.codebook.size(),
               b.core.ss_info.mutual_information_bits};
  log << "core records " << s.n_core << ", DNN records " << s.n_dnn << ", codebook L " << s.codebook_size
      << ", burst MI " << s.mutual_information_bits << " bits\n";
  return s;
}

fs::path checkpoint_path(const fs::path& data_dir, nn::Variant v) {
  return data_dir / "models" / (nn::to_string(v) + ".ckpt");
}

TrainOutcome cmd_train(const fs::path& data_dir, const TrainRequest& req, std::ostream& log) {
  if (req.epochs && *req.epochs < 1) throw ConfigError("--epochs must be >= 1 (nothing to train)");
  DatasetBundle b = read_dataset(data_dir);
  const ExperimentConfig& cfg = b.config;
  const SplitIndices sp = dataset_split(b);
  nn::TrainData train{rssi_inputs(b.dnn, sp.train), channels_of(b.dnn, sp.train)};
  nn::TrainData test{rssi_inputs(b.dnn, sp.test), channels_of(b.dnn, sp.test)};
  nn::TrainConfig tc = cfg.training;
  if (req.epochs) tc.epochs = *req.epochs;
  tc.seed = derive_key(cfg.system.seed, "train", {static_cast<std::uint64_t>(req.variant)});
  tc.on_epoch = [&](const nn::EpochLog& e) {
    log << "  epoch " << e.epoch << " loss " << e.train_loss << " lr " << e.lr << '\n';
  };
  const nn::NetworkSpec spec = cfg.network_spec(req.variant, b.core.codebook.size());
  log << "training " << nn::to_string(req.variant) << " on " << train.size() << " samples, "
      << tc.epochs << " epochs\n";
  nn::TrainState st = nn::train_network(spec, train, b.core.codebook, cfg.system.sigma2(), tc);

  fs::create_directories(data_dir / "models");
  TrainOutcome out;
  out.checkpoint = checkpoint_path(data_dir, req.variant);
  out.log_csv = data_dir / "models" / (nn::to_string(req.variant) + "_log.csv");
  nn::save_checkpoint(out.checkpoint, st);
  const nn::CodebookCache cache = nn::CodebookCache::build(b.core.codebook);
  auto preds = nn::predict_hbf(st.net, test.inputs, b.core.codebook, cache);
  auto rates = nn::prediction_rates(preds, test.channels, cfg.system.sigma2());
  out.test_sum_rate = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
  st.history.back().eval_sum_rate = out.test_sum_rate;
  nn::write_training_log(out.log_csv, st.history);
  out.history = st.history;
  json meta = {{"variant", nn::to_string(req.variant)},
               {"config_sha256", b.config_hash},
               {"checkpoint_sha256", sha256_file(out.checkpoint)},
               {"epochs", st.epoch}};
  std::ofstream(meta_path(data_dir, req.variant)) << meta.dump(2) << '\n';
  log << "test-split mean sum-rate " << out.test_sum_rate << " bit/s/Hz\n";
  return out;
}

std::vector<MethodResult> cmd_eval(const fs::path& data_dir, const EvalRequest& req, std::ostream& log) {
  if (req.methods.empty()) throw ConfigError("no evaluation methods given");
  for (const auto& m : req.methods) {
    if (!is_known_method(m)) throw ConfigError("unknown method '" + m + "'");
  }
  DatasetBundle b = read_dataset(data_dir);
  const ExperimentConfig& cfg = b.config;
  const SystemConfig& sys = cfg.system;
  const double sigma2 = sys.sigma2();
  const SplitIndices sp = dataset_split(b);
  const std::vector<CMatrix> h = channels_of(b.dnn, sp.test);
  const Codebook& cb = b.core.codebook;
  const std::optional<int> n_b = req.n_b ? *req.n_b : b.dnn.n_b;
  RMatrix inputs;
  auto network_inputs = [&]() -> const RMatrix& {
    if (inputs.size() == 0) {
      inputs = req.n_b ? rssi_inputs_at(b.dnn, sp.test, b.core.burst, sigma2, *req.n_b)
                       : rssi_inputs(b.dnn, sp.test);
    }
    return inputs;
  };
  const std::uint64_t rssi_bits = rssi_feedback_bits(sys.k_ss, sys.n_u, n_b);
  const std::uint64_t csi_bits = csi_feedback_bits(sys.n_t, sys.n_u, cfg.eval.csi_bits);
  std::optional<nn::CodebookCache> cache;
  auto get_cache = [&]() -> const nn::CodebookCache& {
    if (!cache) cache = nn::CodebookCache::build(cb);
    return *cache;
  };

  std::vector<MethodResult> rows;
  for (const auto& m : req.methods) {
    std::vector<double> rates;
    if (m == "fdp") {
      for (const auto& hh : h) rates.push_back(fdp_enumerate(hh, sigma2).sum_rate);
    } else if (m == "zf") {
      for (const auto& hh : h) rates.push_back(sum_rate_fdp(hh, zf_precoder(hh, sigma2), sigma2));
    } else if (m == "pzf") {
      for (const auto& hh : h) rates.push_back(pzf_hybrid(hh, sigma2, sys.n_rf).sum_rate);
    } else if (m == "omp") {
      if (cb.empty()) throw DependencyError("omp needs a codebook");
      for (const auto& hh : h) {
        rates.push_back(omp_hybrid(hh, fdp_enumerate(hh, sigma2).precoder, cb, sigma2).sum_rate);
      }
    } else if (m == "hsho") {
      const GaParams ga = cfg.hsho_ga.resolve(sys.n_t, sys.n_rf);
      std::size_t count = h.size();
      if (cfg.eval.hsho_limit > 0) count = std::min(count, cfg.eval.hsho_limit);
      for (std::size_t i = 0; i < count; ++i) {
        Rng rng = Rng::stream(sys.seed, "eval.hsho", {b.dnn.records[sp.test[i]].id});
        rates.push_back(hsho_design(h[i], sigma2, sys.n_rf, ga, rng).sum_rate);
      }
    } else if (m == "afp_net" || m == "hbf_net") {
      const nn::Variant v = nn::variant_from_string(m);
      nn::TrainState st = load_model(data_dir, v, b);
      rates = nn::prediction_rates(nn::predict_hbf(st.net, network_inputs(), cb, get_cache()), h, sigma2);
    } else if (m == "random_ap") {
      nn::TrainState st = load_model(data_dir, nn::Variant::kAfpNet, b);
      Rng rng = Rng::stream(sys.seed, "eval.random_ap");
      rates = nn::prediction_rates(nn::predict_random_ap(st.net, network_inputs(), cb, get_cache(), rng),
                                   h, sigma2);
    }
    rows.push_back(summarize(m, rates, is_csi_method(m) ? csi_bits : rssi_bits));
    log << m << ": mean " << rows.back().mean << " std " << rows.back().std << " n " << rows.back().n
        << " feedback_bits " << rows.back().feedback_bits << '\n';
  }
  if (req.results_csv) write_results_csv(*req.results_csv, rows);
  return rows;
}

namespace {

std::optional<std::string> apply_sweep_value(ExperimentConfig& c, const std::string& var,
                                             const std::string& value) {
  try {
    if (var == "noise_power") {
      c.system.noise_power_dbw = std::stod(value);
    } else if (var == "k_ss") {
      c.system.k_ss = std::stoi(value);
    } else if (var == "n_b") {
      c.system.n_b = parse_bits(value);
    } else if (var == "n_u") {
      c.system.n_u = std::stoi(value);
    } else if (var == "n_t") {
      c.system.n_t = std::stoi(value);
    } else {
      throw ConfigError("unknown sweep variable '" + var + "'");
    }
    c.validate();
  } catch (const ConfigError& e) {
    if (std::string(e.what()).find("unknown sweep variable") != std::string::npos) throw;
    return std::string(e.what());
  } catch (const std::invalid_argument&) {
    return "value '" + value + "' is not numeric";
  }
  return std::nullopt;
}

bool needs(const std::vector<std::string>& methods, const std::string& m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

void train_required(const fs::path& dir, const std::vector<std::string>& methods, std::ostream& log) {
  if (needs(methods, "afp_net") || needs(methods, "random_ap")) {
    cmd_train(dir, {nn::Variant::kAfpNet, std::nullopt, true}, log);
  }
  if (needs(methods, "hbf_net")) cmd_train(dir, {nn::Variant::kHbfNet, std::nullopt, true}, log);
}

void write_gnuplot(const fs::path& dir, const std::string& var, const std::vector<std::string>& methods) {
  std::ofstream gp(dir / "sweep.gp");
  gp << "# plot with: gnuplot -p sweep.gp\n";
  gp << "set datafile separator ','\n";
  gp << "set xlabel '" << var << "'\n";
  gp << "set ylabel 'sum-rate (bit/s/Hz)'\n";
  gp << "plot ";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (i) gp << ", \\\n     ";
    gp << "'sweep.csv' using 1:(strcol(2) eq '" << methods[i] << "' ? $3 : 1/0) with linespoints title '"
       << methods[i] << "'";
  }
  gp << '\n';
}

}  // namespace

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const fs::path& out, int jobs, bool force,
                                std::ostream& log) {
  const SweepConfig& sw = cfg.sweep;
  if (sw.values.empty()) throw ConfigError("sweep.values must be non-empty");
  const std::vector<std::string> methods = sw.methods.empty() ? cfg.eval.methods : sw.methods;
  if (methods.empty()) throw ConfigError("sweep.methods must be non-empty");
  for (const auto& m : methods) {
    if (!is_known_method(m)) throw ConfigError("unknown method '" + m + "'");
  }
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw ConfigError("output directory " + out.string() + " is not empty; pass --force to overwrite");
    fs::remove_all(out);
  }
  fs::create_directories(out);
  jobs = std::max(1, jobs);

  std::vector<SweepRow> rows;
  if (sw.variable == "n_b") {
    // RSSI precision only changes the network inputs: one dataset, one model,
    // requantized evaluations.
    const fs::path base = out / "base";
    ExperimentConfig c = cfg;
    c.system.n_b = std::nullopt;
    cmd_gen(c, base, true, log);
    train_required(base, methods, log);
    for (const auto& v : sw.values) {
      std::optional<int> bits;
      try {
        bits = parse_bits(v);
      } catch (const ConfigError& e) {
        log << "skipping n_b=" << v << ": " << e.what() << '\n';
        continue;
      }
      EvalRequest req{methods, std::optional<std::optional<int>>(bits), out / ("results_n_b_" + v + ".csv")};
      for (auto& r : cmd_eval(base, req, log)) rows.push_back({v, r});
    }
  } else {
    struct Point {
      std::string value;
      ExperimentConfig cfg;
      fs::path dir;
    };
    std::vector<Point> points;
    for (const auto& v : sw.values) {
      ExperimentConfig c = cfg;
      if (auto why = apply_sweep_value(c, sw.variable, v)) {
        log << "skipping " << sw.variable << "=" << v << ": " << *why << '\n';
        continue;
      }
      points.push_back({v, c, out / ("point_" + sw.variable + "_" + v)});
    }
    auto run_point = [&methods](const Point& p) {
      std::ofstream plog(p.dir.string() + ".log");
      cmd_gen(p.cfg, p.dir, true, plog);
      train_required(p.dir, methods, plog);
      return cmd_eval(p.dir, {methods, std::nullopt, p.dir / "results.csv"}, plog);
    };
    for (std::size_t start = 0; start < points.size(); start += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<std::vector<MethodResult>>> futs;
      const std::size_t end = std::min(points.size(), start + static_cast<std::size_t>(jobs));
      for (std::size_t i = start; i < end; ++i) {
        futs.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_point,
                                  std::cref(points[i])));
      }
      for (std::size_t i = start; i < end; ++i) {
        for (auto& r : futs[i - start].get()) rows.push_back({points[i].value, r});
        log << "finished " << sw.variable << "=" << points[i].value << '\n';
      }
    }
  }

  std::ofstream csv(out / "sweep.csv");
  csv.precision(10);
  csv << "sweep_value,method,mean,std,n\n";
  for (const auto& r : rows) {
    csv << r.sweep_value << ',' << r.result.method << ',' << r.result.mean << ',' << r.result.std << ','
        << r.result.n << '\n';
  }
  write_gnuplot(out, sw.variable, methods);
  return rows;
}

}  // namespace hbf
