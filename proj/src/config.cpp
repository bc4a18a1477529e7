// SPDX-License-Identifier: Apache-2.0
#include "hbf/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace hbf {

namespace {

std::string where(const YAML::Node& n) {
  if (n.Mark().is_null()) return {};
  return " (line " + std::to_string(n.Mark().line + 1) + ")";
}

// Undefined (falsy) when the section or key is absent.
YAML::Node child(const YAML::Node& root, const std::string& section, const std::string& key) {
  const YAML::Node sec = root[section];
  if (!sec || !sec.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
  return sec[key];
}

template <typename T>
T as(const YAML::Node& n, const std::string& name) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config key " + name + " has an invalid value" + where(n));
  }
}

template <typename T>
void read(const YAML::Node& root, const std::string& section, const std::string& key, T& out) {
  const YAML::Node n = child(root, section, key);
  if (n) out = as<T>(n, section + "." + key);
}

template <typename T>
void read_opt(const YAML::Node& root, const std::string& section, const std::string& key,
              std::optional<T>& out) {
  const YAML::Node n = child(root, section, key);
  if (n && !n.IsNull()) out = as<T>(n, section + "." + key);
}

template <typename T>
T require(const YAML::Node& root, const std::string& section, const std::string& key) {
  const YAML::Node n = child(root, section, key);
  if (!n) throw ConfigError("missing required config key " + section + "." + key);
  return as<T>(n, section + "." + key);
}

void read_ga(const YAML::Node& root, const std::string& section, GaOverrides& g) {
  read_opt(root, section, "population", g.population);
  read_opt(root, section, "elites", g.elites);
  read_opt(root, section, "crossover_fraction", g.crossover_fraction);
  read_opt(root, section, "max_generations", g.max_generations);
  read_opt(root, section, "stall_generations", g.stall_generations);
}

void emit_ga(YAML::Emitter& e, const std::string& name, const GaOverrides& g) {
  e << YAML::Key << name << YAML::Value << YAML::BeginMap;
  auto opt = [&](const char* k, const auto& v) {
    e << YAML::Key << k << YAML::Value;
    if (v) e << *v; else e << YAML::Null;
  };
  opt("population", g.population);
  opt("elites", g.elites);
  opt("crossover_fraction", g.crossover_fraction);
  opt("max_generations", g.max_generations);
  opt("stall_generations", g.stall_generations);
  e << YAML::EndMap;
}

}  // namespace

std::optional<int> parse_bits(const std::string& text) {
  if (text == "full") return std::nullopt;
  try {
    std::size_t used = 0;
    int v = std::stoi(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("quantization bits must be a positive integer or 'full', got '" + text + "'");
}

std::string bits_to_string(std::optional<int> n_b) { return n_b ? std::to_string(*n_b) : "full"; }

GaParams GaOverrides::resolve(int n_t, int chains) const {
  GaParams p = population ? GaParams::with_population(*population, n_t) : GaParams::defaults(n_t, chains);
  if (elites) p.elites = *elites;
  if (crossover_fraction) p.crossover_fraction = *crossover_fraction;
  if (max_generations) p.max_generations = *max_generations;
  if (stall_generations) p.stall_generations = *stall_generations;
  p.validate();
  return p;
}

nn::NetworkSpec ExperimentConfig::network_spec(nn::Variant v, std::size_t codebook_size) const {
  nn::NetworkSpec s = network;
  s.variant = v;
  s.n_t = system.n_t;
  s.n_rf = system.n_rf;
  s.n_u = system.n_u;
  s.k = system.k_ss;
  s.classes = static_cast<int>(codebook_size);
  s.validate();
  return s;
}

void ExperimentConfig::validate() const {
  try {
    system.validate();
    scenario().validate();
    geometry().validate();
    codebook.validate();
    training.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(e.what());
  }
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");
  }
  if (dataset.n_core < 1 || dataset.n_dnn < 2) throw ConfigError("dataset sizes are too small");
  if (dataset.calibration_samples < 1) throw ConfigError("dataset.calibration_samples must be >= 1");
  if (eval.csi_bits < 1) throw ConfigError("eval.csi_bits must be >= 1");
  if (!(network.keep_prob > 0.0 && network.keep_prob <= 1.0)) {
    throw ConfigError("network.keep_prob must lie in (0, 1]");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("config root must be a mapping");
  ExperimentConfig c;
  SystemConfig& s = c.system;
  s.n_t = require<int>(root, "system", "n_t");
  s.n_rf = require<int>(root, "system", "n_rf");
  s.n_u = require<int>(root, "system", "n_u");
  s.k_ss = require<int>(root, "system", "k_ss");
  read(root, "system", "noise_power_dbw", s.noise_power_dbw);
  read(root, "system", "p_max", s.p_max);
  read(root, "system", "seed", s.seed);
  if (auto n = child(root, "system", "n_b"); n && !n.IsNull()) s.n_b = parse_bits(as<std::string>(n, "system.n_b"));

  read(root, "scenario", "area", c.area);
  read(root, "scenario", "antenna_spacing", c.antenna_spacing);

  read_ga(root, "hsho_ga", c.hsho_ga);
  read_ga(root, "ss_ga", c.ss_ga);

  read(root, "codebook", "xi", c.codebook.xi);
  read(root, "codebook", "cap", c.codebook.cap);
  read(root, "codebook", "retention", c.codebook.retention);

  nn::NetworkSpec& n = c.network;
  read(root, "network", "trunk_widths", n.trunk_widths);
  read(root, "network", "leaky_slope", n.leaky_slope);
  read(root, "network", "bn_eps", n.bn_eps);
  read(root, "network", "bn_momentum", n.bn_momentum);
  read(root, "network", "keep_prob", n.keep_prob);
  read(root, "network", "use_conv", n.use_conv);
  read(root, "network", "conv_channels", n.conv_channels);

  nn::TrainConfig& t = c.training;
  read(root, "training", "epochs", t.epochs);
  read(root, "training", "batch_size", t.batch_size);
  read(root, "training", "lr", t.lr);
  read(root, "training", "weight_decay", t.weight_decay);
  read(root, "training", "plateau_factor", t.plateau_factor);
  read(root, "training", "plateau_patience", t.plateau_patience);
  read(root, "training", "shuffle", t.shuffle);
  read(root, "training", "ap_grad_to_fdp", t.afp.ap_grad_to_fdp);
  t.seed = s.seed;

  DatasetConfig& d = c.dataset;
  read(root, "dataset", "n_core", d.n_core);
  read(root, "dataset", "n_dnn", d.n_dnn);
  read(root, "dataset", "train_fraction", d.train_fraction);
  read(root, "dataset", "calibration_samples", d.calibration_samples);
  if (auto nb = child(root, "dataset", "ss_design_n_b"); nb && !nb.IsNull()) {
    d.ss_design_n_b = parse_bits(as<std::string>(nb, "dataset.ss_design_n_b"));
    d.ss_design_full = !d.ss_design_n_b;
  }

  read(root, "eval", "methods", c.eval.methods);
  read(root, "eval", "csi_bits", c.eval.csi_bits);
  read(root, "eval", "hsho_limit", c.eval.hsho_limit);

  read(root, "sweep", "variable", c.sweep.variable);
  read(root, "sweep", "values", c.sweep.values);
  read(root, "sweep", "methods", c.sweep.methods);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n_t" << YAML::Value << c.system.n_t;
  e << YAML::Key << "n_rf" << YAML::Value << c.system.n_rf;
  e << YAML::Key << "n_u" << YAML::Value << c.system.n_u;
  e << YAML::Key << "k_ss" << YAML::Value << c.system.k_ss;
  e << YAML::Key << "noise_power_dbw" << YAML::Value << c.system.noise_power_dbw;
  e << YAML::Key << "p_max" << YAML::Value << c.system.p_max;
  e << YAML::Key << "n_b" << YAML::Value << bits_to_string(c.system.n_b);
  e << YAML::Key << "seed" << YAML::Value << c.system.seed;
  e << YAML::EndMap;

  e << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "area" << YAML::Value << c.area;
  e << YAML::Key << "antenna_spacing" << YAML::Value << c.antenna_spacing;
  e << YAML::EndMap;

  emit_ga(e, "hsho_ga", c.hsho_ga);
  emit_ga(e, "ss_ga", c.ss_ga);

  e << YAML::Key << "codebook" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "xi" << YAML::Value << c.codebook.xi;
  e << YAML::Key << "cap" << YAML::Value << c.codebook.cap;
  e << YAML::Key << "retention" << YAML::Value << c.codebook.retention;
  e << YAML::EndMap;

  e << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "trunk_widths" << YAML::Value << YAML::Flow << c.network.trunk_widths;
  e << YAML::Key << "leaky_slope" << YAML::Value << c.network.leaky_slope;
  e << YAML::Key << "bn_eps" << YAML::Value << c.network.bn_eps;
  e << YAML::Key << "bn_momentum" << YAML::Value << c.network.bn_momentum;
  e << YAML::Key << "keep_prob" << YAML::Value << c.network.keep_prob;
  e << YAML::Key << "use_conv" << YAML::Value << c.network.use_conv;
  e << YAML::Key << "conv_channels" << YAML::Value << c.network.conv_channels;
  e << YAML::EndMap;

  e << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "epochs" << YAML::Value << c.training.epochs;
  e << YAML::Key << "batch_size" << YAML::Value << c.training.batch_size;
  e << YAML::Key << "lr" << YAML::Value << c.training.lr;
  e << YAML::Key << "weight_decay" << YAML::Value << c.training.weight_decay;
  e << YAML::Key << "plateau_factor" << YAML::Value << c.training.plateau_factor;
  e << YAML::Key << "plateau_patience" << YAML::Value << c.training.plateau_patience;
  e << YAML::Key << "shuffle" << YAML::Value << c.training.shuffle;
  e << YAML::Key << "ap_grad_to_fdp" << YAML::Value << c.training.afp.ap_grad_to_fdp;
  e << YAML::EndMap;

  e << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "n_core" << YAML::Value << c.dataset.n_core;
  e << YAML::Key << "n_dnn" << YAML::Value << c.dataset.n_dnn;
  e << YAML::Key << "train_fraction" << YAML::Value << c.dataset.train_fraction;
  e << YAML::Key << "calibration_samples" << YAML::Value << c.dataset.calibration_samples;
  e << YAML::Key << "ss_design_n_b" << YAML::Value;
  if (c.dataset.ss_design_n_b || c.dataset.ss_design_full) {
    e << bits_to_string(c.dataset.ss_design_n_b);
  } else {
    e << YAML::Null;
  }
  e << YAML::EndMap;

  e << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "methods" << YAML::Value << YAML::Flow << c.eval.methods;
  e << YAML::Key << "csi_bits" << YAML::Value << c.eval.csi_bits;
  e << YAML::Key << "hsho_limit" << YAML::Value << c.eval.hsho_limit;
  e << YAML::EndMap;

  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "variable" << YAML::Value << c.sweep.variable;
  e << YAML::Key << "values" << YAML::Value << YAML::Flow << c.sweep.values;
  e << YAML::Key << "methods" << YAML::Value << YAML::Flow << c.sweep.methods;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace hbf
