// SPDX-License-Identifier: Apache-2.0
#include "hbf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "hbf/fdp_design.hpp"
#include "hbf/hashing.hpp"
#include "hbf/matrix_io.hpp"
#include "hbf/rate_metrics.hpp"

namespace hbf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

void note(const ProgressFn& p, const std::string& msg) {
  if (p) p(msg);
}

std::optional<int> design_bits(const ExperimentConfig& cfg) {
  if (cfg.dataset.ss_design_full) return std::nullopt;
  if (cfg.dataset.ss_design_n_b) return cfg.dataset.ss_design_n_b;
  return cfg.system.n_b;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IntegrityError("cannot write " + p.string());
  out.precision(17);
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DependencyError("missing dataset file " + p.string());
  return in;
}

const std::vector<std::string> kFiles = {
    "core/channels.bin", "core/dp.bin",    "core/fdp.bin",     "core/records.csv",
    "core/positions.csv", "codebook.bin",  "codebook.csv",     "ss_burst.csv",
    "dnn/channels.bin",  "dnn/rssi.bin",   "dnn/positions.csv"};

}  // namespace

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train fraction must lie in (0, 1)");
  }
}

CoreDataset build_core_dataset(const ExperimentConfig& cfg, std::size_t n_core,
                               const ProgressFn& progress) {
  cfg.validate();
  if (n_core == 0) throw InvalidArgument("core dataset needs at least one record");
  const SystemConfig& sys = cfg.system;
  const ScenarioArea area = cfg.scenario();
  const ArrayGeometry geom = cfg.geometry();
  const double sigma2 = sys.sigma2();
  CoreDataset core;

  Rng cal_rng = Rng::stream(sys.seed, "ss.calibration");
  const CalibrationSample sample =
      draw_calibration_sample(sys, area, geom, cfg.dataset.calibration_samples, cal_rng);
  Rng ss_rng = Rng::stream(sys.seed, "ss.design");
  SsDesignResult ss = design_ss_bursts(sys, sample, cfg.ss_ga.resolve(sys.n_t, sys.k_ss),
                                       design_bits(cfg), ss_rng);
  core.burst = ss.burst;
  core.ss_info = ss.info;
  note(progress, "burst designed: MI " + std::to_string(ss.info.mutual_information_bits) + " bits");

  std::vector<CMatrix> channels;
  core.records.resize(n_core);
  for (std::size_t i = 0; i < n_core; ++i) {
    Rng pos_rng = Rng::stream(sys.seed, "core.users", {i});
    CoreRecord& r = core.records[i];
    r.id = i;
    r.channel = generate_channel(sys, area, geom, sample_user_set(area, sys.n_u, pos_rng));
    channels.push_back(r.channel.h);
  }

  const GaParams ga = cfg.hsho_ga.resolve(sys.n_t, sys.n_rf);
  Step1Result s1 = build_codebook_step1(channels, sigma2, sys.n_rf, ga, cfg.codebook,
                                        derive_key(sys.seed, "core.codebook"));
  core.step1_size = s1.codebook.size();
  note(progress, "codebook step 1: " + std::to_string(s1.codebook.size()) + " codewords");
  LabeledCore relabeled = reassign_labels(s1.codebook, channels, sigma2, std::move(s1.labeled));
  PruneResult pruned = prune_codebook(s1.codebook, relabeled, cfg.codebook);
  core.codebook = pruned.codebook;
  core.pre_prune_average = pruned.initial_average;
  core.post_prune_average = pruned.final_average;
  note(progress, "codebook pruned to " + std::to_string(core.codebook.size()) + " codewords");

  for (std::size_t i = 0; i < n_core; ++i) {
    CoreRecord& r = core.records[i];
    r.ap_index = pruned.labeled.labels[i];
    r.dp = pruned.labeled.dps[i][r.ap_index];
    r.codebook_rate = pruned.labeled.rates[i][r.ap_index];
    r.hsho_rate = s1.hsho_rates[i];
    FdpResult f = fdp_enumerate(r.channel.h, sigma2);
    r.fdp = f.precoder;
    r.fdp_rate = f.sum_rate;
  }
  return core;
}

DnnDataset build_dnn_dataset(const ExperimentConfig& cfg, const SsBurst& burst, std::size_t n) {
  cfg.validate();
  const SystemConfig& sys = cfg.system;
  if (burst.k() != sys.k_ss || burst.n_t() != sys.n_t) {
    throw ShapeError("burst dimensions do not match the system configuration");
  }
  const ScenarioArea area = cfg.scenario();
  const ArrayGeometry geom = cfg.geometry();
  const double sigma2 = sys.sigma2();
  DnnDataset d;
  d.n_b = sys.n_b;
  d.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng pos_rng = Rng::stream(sys.seed, "dnn.users", {i});
    DnnRecord& r = d.records[i];
    r.id = i;
    r.channel = generate_channel(sys, area, geom, sample_user_set(area, sys.n_u, pos_rng));
    r.rssi.resize(sys.n_u, sys.k_ss);
    for (int u = 0; u < sys.n_u; ++u) {
      RssiVector v = rssi_feedback(r.channel.h.col(u), burst, sigma2, sys.n_b, &d.clamped);
      for (int k = 0; k < sys.k_ss; ++k) r.rssi(u, k) = v.values[static_cast<std::size_t>(k)];
    }
  }
  return d;
}

SplitIndices split(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n == 0) throw InvalidArgument("cannot split an empty dataset");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(spec.seed, "dataset.split");
  std::shuffle(order.begin(), order.end(), rng.engine());
  auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  if (n >= 2) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

RMatrix rssi_inputs(const DnnDataset& d, std::span<const std::size_t> rows) {
  if (d.records.empty()) throw InvalidArgument("empty DNN dataset");
  const Eigen::Index n_u = d.records.front().rssi.rows();
  const Eigen::Index k = d.records.front().rssi.cols();
  RMatrix x(n_u * k, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const RMatrix& r = d.records[rows[j]].rssi;
    for (Eigen::Index u = 0; u < n_u; ++u) {
      x.block(u * k, static_cast<Eigen::Index>(j), k, 1) = r.row(u).transpose();
    }
  }
  return x;
}

RMatrix rssi_inputs_at(const DnnDataset& d, std::span<const std::size_t> rows, const SsBurst& burst,
                       double sigma2, std::optional<int> n_b, std::size_t* clamped) {
  const int k = burst.k();
  const auto n_u = d.records.empty() ? 0 : d.records.front().channel.h.cols();
  RMatrix x(n_u * k, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const CMatrix& h = d.records[rows[j]].channel.h;
    for (Eigen::Index u = 0; u < n_u; ++u) {
      RssiVector v = rssi_feedback(h.col(u), burst, sigma2, n_b, clamped);
      for (int kk = 0; kk < k; ++kk) x(u * k + kk, static_cast<Eigen::Index>(j)) = v.values[static_cast<std::size_t>(kk)];
    }
  }
  return x;
}

std::vector<CMatrix> channels_of(const DnnDataset& d, std::span<const std::size_t> rows) {
  std::vector<CMatrix> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(d.records[r].channel.h);
  return out;
}

void write_positions_csv(const fs::path& path, const std::vector<std::uint64_t>& ids,
                         const std::vector<ChannelRealization>& channels) {
  auto out = open_out(path);
  out << "record_id,user_slot,grid_x,grid_y,area_id\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& pos = channels[i].positions;
    for (std::size_t u = 0; u < pos.size(); ++u) {
      out << ids[i] << ',' << u << ',' << pos[u].grid_x << ',' << pos[u].grid_y << ',' << pos[u].area_id
          << '\n';
    }
  }
}

std::vector<std::pair<std::uint64_t, std::vector<UserPosition>>> read_positions_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line != "record_id,user_slot,grid_x,grid_y,area_id") throw IntegrityError("bad positions header");
  std::vector<std::pair<std::uint64_t, std::vector<UserPosition>>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split_csv(line);
    if (c.size() != 5) throw IntegrityError("malformed positions row: " + line);
    const std::uint64_t id = std::stoull(c[0]);
    const std::size_t slot = std::stoul(c[1]);
    if (out.empty() || out.back().first != id) {
      if (slot != 0) throw IntegrityError("positions rows out of order");
      out.emplace_back(id, std::vector<UserPosition>{});
    }
    if (slot != out.back().second.size()) throw IntegrityError("positions rows out of order");
    out.back().second.push_back({std::stoi(c[2]), std::stoi(c[3]), std::stoi(c[4])});
  }
  return out;
}

void write_dataset(const fs::path& dir, const DatasetBundle& b) {
  fs::create_directories(dir / "core");
  fs::create_directories(dir / "dnn");
  const CoreDataset& core = b.core;
  const DnnDataset& dnn = b.dnn;

  std::vector<CMatrix> ch, dp, fdp;
  std::vector<std::uint64_t> ids;
  std::vector<ChannelRealization> reals;
  for (const auto& r : core.records) {
    ch.push_back(r.channel.h);
    dp.push_back(r.dp.w);
    fdp.push_back(r.fdp.u);
    ids.push_back(r.id);
    reals.push_back(r.channel);
  }
  save_matrices(dir / "core/channels.bin", ch);
  save_matrices(dir / "core/dp.bin", dp);
  save_matrices(dir / "core/fdp.bin", fdp);
  write_positions_csv(dir / "core/positions.csv", ids, reals);
  {
    auto out = open_out(dir / "core/records.csv");
    out << "record_id,ap_index,codebook_rate,hsho_rate,fdp_rate\n";
    for (const auto& r : core.records) {
      out << r.id << ',' << r.ap_index << ',' << r.codebook_rate << ',' << r.hsho_rate << ','
          << r.fdp_rate << '\n';
    }
  }
  save_codebook(dir / "codebook.bin",
                CodebookFile{core.codebook, b.config.codebook, sha256_file(dir / "core/channels.bin")});
  export_codebook_csv(dir / "codebook.csv", core.codebook);
  save_burst_csv(dir / "ss_burst.csv", core.burst);

  std::vector<CMatrix> dch, rssi;
  ids.clear();
  reals.clear();
  for (const auto& r : dnn.records) {
    dch.push_back(r.channel.h);
    rssi.push_back(r.rssi.cast<Complex>());
    ids.push_back(r.id);
    reals.push_back(r.channel);
  }
  save_matrices(dir / "dnn/channels.bin", dch);
  save_matrices(dir / "dnn/rssi.bin", rssi);
  write_positions_csv(dir / "dnn/positions.csv", ids, reals);

  json m;
  m["format_version"] = kManifestVersion;
  m["config_sha256"] = b.config_hash;
  m["config"] = dump_config(b.config);
  json files = json::array();
  for (const auto& f : kFiles) {
    files.push_back({{"path", f}, {"sha256", sha256_file(dir / f)}, {"bytes", fs::file_size(dir / f)}});
  }
  m["files"] = files;
  m["summary"] = {
      {"n_core", core.records.size()},
      {"n_dnn", dnn.records.size()},
      {"codebook_size", core.codebook.size()},
      {"codebook_step1_size", core.step1_size},
      {"pre_prune_average", core.pre_prune_average},
      {"post_prune_average", core.post_prune_average},
      {"ss_mutual_information_bits", core.ss_info.mutual_information_bits},
      {"ss_entropy_position_bits", core.ss_info.entropy_position_bits},
      {"dnn_n_b", bits_to_string(dnn.n_b)},
      {"dnn_clamped", dnn.clamped},
  };
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

void verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DependencyError("no manifest.json under " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("unreadable manifest: ") + e.what());
  }
  if (m.value("format_version", 0) != kManifestVersion) throw IntegrityError("unsupported manifest version");
  for (const auto& f : m.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    if (!fs::exists(p)) throw IntegrityError("manifest lists missing file " + p.string());
    if (sha256_file(p) != f.at("sha256").get<std::string>()) {
      throw IntegrityError("hash mismatch for " + p.string());
    }
  }
  const std::string cfg_text = m.at("config").get<std::string>();
  if (sha256_hex(cfg_text) != m.at("config_sha256").get<std::string>()) {
    throw IntegrityError("config snapshot hash mismatch");
  }
}

DatasetBundle read_dataset(const fs::path& dir) {
  verify_manifest(dir);
  std::ifstream in(dir / "manifest.json");
  const json m = json::parse(in);
  DatasetBundle b;
  const std::string cfg_text = m.at("config").get<std::string>();
  b.config = parse_config(cfg_text);
  b.config_hash = m.at("config_sha256").get<std::string>();
  const auto& summary = m.at("summary");

  CoreDataset& core = b.core;
  const auto ch = load_matrices(dir / "core/channels.bin");
  const auto dp = load_matrices(dir / "core/dp.bin");
  const auto fdp = load_matrices(dir / "core/fdp.bin");
  const auto pos = read_positions_csv(dir / "core/positions.csv");
  if (dp.size() != ch.size() || fdp.size() != ch.size() || pos.size() != ch.size()) {
    throw IntegrityError("core dataset files disagree in record count");
  }
  auto rec_in = open_in(dir / "core/records.csv");
  std::string line;
  std::getline(rec_in, line);
  core.records.resize(ch.size());
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (!std::getline(rec_in, line)) throw IntegrityError("core records truncated");
    auto c = split_csv(line);
    if (c.size() != 5) throw IntegrityError("malformed core record: " + line);
    CoreRecord& r = core.records[i];
    r.id = std::stoull(c[0]);
    r.ap_index = std::stoul(c[1]);
    r.codebook_rate = std::stod(c[2]);
    r.hsho_rate = std::stod(c[3]);
    r.fdp_rate = std::stod(c[4]);
    r.channel = {ch[i], pos[i].second};
    r.dp.w = dp[i];
    r.fdp.u = fdp[i];
  }
  CodebookFile cbf = load_codebook(dir / "codebook.bin");
  if (cbf.core_hash != sha256_file(dir / "core/channels.bin")) {
    throw IntegrityError("codebook was built from a different core dataset");
  }
  core.codebook = cbf.codebook;
  core.burst = load_burst_csv(dir / "ss_burst.csv");
  core.step1_size = summary.at("codebook_step1_size").get<std::size_t>();
  core.pre_prune_average = summary.at("pre_prune_average").get<double>();
  core.post_prune_average = summary.at("post_prune_average").get<double>();
  core.ss_info.mutual_information_bits = summary.at("ss_mutual_information_bits").get<double>();
  core.ss_info.entropy_position_bits = summary.at("ss_entropy_position_bits").get<double>();

  DnnDataset& dnn = b.dnn;
  const auto dch = load_matrices(dir / "dnn/channels.bin");
  const auto rssi = load_matrices(dir / "dnn/rssi.bin");
  const auto dpos = read_positions_csv(dir / "dnn/positions.csv");
  if (rssi.size() != dch.size() || dpos.size() != dch.size()) {
    throw IntegrityError("DNN dataset files disagree in record count");
  }
  dnn.n_b = parse_bits(summary.at("dnn_n_b").get<std::string>());
  dnn.clamped = summary.at("dnn_clamped").get<std::size_t>();
  dnn.records.resize(dch.size());
  for (std::size_t i = 0; i < dch.size(); ++i) {
    dnn.records[i].id = dpos[i].first;
    dnn.records[i].channel = {dch[i], dpos[i].second};
    dnn.records[i].rssi = rssi[i].real();
  }
  return b;
}

}  // namespace hbf
