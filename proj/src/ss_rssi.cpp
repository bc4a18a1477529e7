// SPDX-License-Identifier: Apache-2.0
#include "hbf/ss_rssi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "hbf/hashing.hpp"

namespace hbf {

namespace {

double levels(int n_b) { return std::ldexp(1.0, n_b) - 1.0; }

struct VecHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x);
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

template <typename Map>
double entropy_of_counts(const Map& counts, double total) {
  double h = 0.0;
  for (const auto& [key, c] : counts) {
    double p = static_cast<double>(c) / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

// RSSI of every distinct calibration position (rows) for every beam (cols).
RMatrix raw_rssi_table(const SsBurst& ss, const CMatrix& channels, double sigma2) {
  const CMatrix g = channels.adjoint() * ss.beams.matrix();
  return g.cwiseAbs2().array() + sigma2;
}

InfoEstimate info_from_table(const RMatrix& raw, const CalibrationSample& sample, double beta,
                             std::optional<int> n_b) {
  std::unordered_map<std::vector<std::int64_t>, std::size_t, VecHash> rssi_counts;
  std::unordered_map<std::vector<std::int64_t>, std::size_t, VecHash> joint_counts;
  std::map<std::size_t, std::size_t> pos_counts;
  RssiVector r;
  r.beta = beta;
  r.n_b = n_b;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const auto c = sample.counts[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    RssiVector rv;
    rv.values.resize(static_cast<std::size_t>(raw.cols()));
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
      rv.values[static_cast<std::size_t>(k)] = std::clamp(raw(i, k) / beta, 0.0, 1.0);
    }
    if (n_b) rv = quantize_rssi(rv, *n_b);
    rv.n_b = n_b;
    auto sym = rssi_symbols(rv);
    rssi_counts[sym] += c;
    sym.push_back(-1 - static_cast<std::int64_t>(i));
    joint_counts[sym] += c;
    pos_counts[static_cast<std::size_t>(i)] += c;
  }
  const auto total = static_cast<double>(sample.total);
  InfoEstimate e;
  e.entropy_position_bits = entropy_of_counts(pos_counts, total);
  e.entropy_rssi_bits = entropy_of_counts(rssi_counts, total);
  e.joint_entropy_bits = entropy_of_counts(joint_counts, total);
  e.mutual_information_bits =
      std::max(0.0, e.entropy_position_bits + e.entropy_rssi_bits - e.joint_entropy_bits);
  e.position_support = pos_counts.size();
  e.rssi_support = rssi_counts.size();
  e.joint_support = joint_counts.size();
  return e;
}

}  // namespace

RssiVector measure_rssi(const CVector& h_u, const SsBurst& ss, double sigma2) {
  if (h_u.size() != ss.n_t()) throw ShapeError("channel length must equal N_T of the burst");
  RssiVector out;
  out.values.resize(static_cast<std::size_t>(ss.k()));
  for (int k = 0; k < ss.k(); ++k) {
    Complex g = h_u.adjoint() * ss.beams.matrix().col(k);
    out.values[static_cast<std::size_t>(k)] = std::norm(g) + sigma2;
  }
  return out;
}

RssiVector quantize_rssi(const RssiVector& scaled, int n_b) {
  if (n_b < 1) throw InvalidArgument("quantization needs n_b >= 1");
  const double q = levels(n_b);
  RssiVector out = scaled;
  out.n_b = n_b;
  for (double& v : out.values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("RSSI value " + std::to_string(v) + " violates the [0, 1] scaling");
    }
    v = std::round(v * q) / q;
  }
  return out;
}

double scale_factor(std::span<const double> rssi_values) {
  if (rssi_values.empty()) throw InvalidArgument("scale factor needs a non-empty sample");
  return *std::max_element(rssi_values.begin(), rssi_values.end());
}

RssiVector scale_rssi(const RssiVector& raw, double beta, std::size_t* clamped) {
  if (!(beta > 0.0)) throw InvalidArgument("RSSI scale factor must be positive");
  RssiVector out = raw;
  out.beta = beta;
  for (double& v : out.values) {
    v /= beta;
    if (v > 1.0 || v < 0.0) {
      v = std::clamp(v, 0.0, 1.0);
      if (clamped) ++*clamped;
    }
  }
  return out;
}

RssiVector rssi_feedback(const CVector& h_u, const SsBurst& ss, double sigma2,
                         std::optional<int> n_b, std::size_t* clamped) {
  RssiVector r = scale_rssi(measure_rssi(h_u, ss, sigma2), ss.beta, clamped);
  if (n_b) return quantize_rssi(r, *n_b);
  return r;
}

double empirical_entropy(std::span<const std::vector<std::int64_t>> samples) {
  if (samples.empty()) throw InvalidArgument("entropy needs at least one sample");
  std::unordered_map<std::vector<std::int64_t>, std::size_t, VecHash> counts;
  for (const auto& s : samples) ++counts[s];
  return entropy_of_counts(counts, static_cast<double>(samples.size()));
}

std::vector<std::int64_t> rssi_symbols(const RssiVector& r) {
  std::vector<std::int64_t> out;
  out.reserve(r.values.size());
  if (r.n_b) {
    const double q = levels(*r.n_b);
    for (double v : r.values) out.push_back(std::llround(v * q));
  } else {
    for (double v : r.values) out.push_back(std::bit_cast<std::int64_t>(v));
  }
  return out;
}

std::uint64_t CalibrationSample::hash() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    os << positions[i].area_id << ':' << positions[i].grid_x << ':' << positions[i].grid_y << ':'
       << counts[i] << ';';
  }
  return hash64(os.str());
}

CalibrationSample draw_calibration_sample(const SystemConfig& cfg, const ScenarioArea& area,
                                          const ArrayGeometry& geom, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("calibration sample must be non-empty");
  std::vector<std::size_t> counts(static_cast<std::size_t>(area.p_u()), 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(rng.uniform_int(0, area.p_u() - 1))];
  }
  CalibrationSample s;
  s.total = n;
  std::vector<CVector> cols;
  for (int i = 0; i < area.p_u(); ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) continue;
    UserPosition p = area.position_at(i);
    s.positions.push_back(p);
    s.counts.push_back(counts[static_cast<std::size_t>(i)]);
    cols.push_back(channel_column(geom, user_paths(cfg.seed, area, p)));
  }
  s.channels.resize(geom.n_t(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) s.channels.col(static_cast<Eigen::Index>(i)) = cols[i];
  return s;
}

InfoEstimate mutual_information_position_rssi(const SsBurst& ss, const CalibrationSample& sample,
                                              double sigma2, std::optional<int> n_b) {
  const RMatrix raw = raw_rssi_table(ss, sample.channels, sigma2);
  return info_from_table(raw, sample, raw.maxCoeff(), n_b);
}

InfoEstimate mutual_information_position_rssi(const SsBurst& ss, const CalibrationSample& sample,
                                              double sigma2, std::optional<int> n_b, double beta) {
  const RMatrix raw = raw_rssi_table(ss, sample.channels, sigma2);
  return info_from_table(raw, sample, beta, n_b);
}

SsBurst random_burst(int n_t, int k, Rng& rng) {
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_t) * static_cast<std::size_t>(k));
  for (auto& c : codes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  return SsBurst{AnalogPrecoder(n_t, k, std::move(codes)), 1.0, 0};
}

SsDesignResult design_ss_bursts(const SystemConfig& cfg, const CalibrationSample& sample,
                                const GaParams& ga, std::optional<int> design_n_b, Rng& rng) {
  cfg.validate();
  if (sample.total == 0) throw InvalidArgument("SS design needs a calibration sample");
  const double sigma2 = cfg.sigma2();
  const int n_t = cfg.n_t;
  const int k = cfg.k_ss;
  auto fitness = [&](std::span<const std::uint8_t> g) {
    SsBurst b{AnalogPrecoder(n_t, k, std::vector<std::uint8_t>(g.begin(), g.end())), 1.0, 0};
    return mutual_information_position_rssi(b, sample, sigma2, design_n_b).mutual_information_bits;
  };
  GaResult res = ga_optimize(fitness, n_t * k, ga, rng);
  SsDesignResult out;
  out.burst.beams = AnalogPrecoder(n_t, k, res.best);
  out.burst.beta = raw_rssi_table(out.burst, sample.channels, sigma2).maxCoeff();
  out.burst.calibration_hash = sample.hash();
  out.info = mutual_information_position_rssi(out.burst, sample, sigma2, design_n_b);
  out.history = std::move(res.history);
  return out;
}

void save_burst_csv(const std::filesystem::path& path, const SsBurst& ss) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out.precision(17);
  out << "# beta=" << ss.beta << ",calibration_hash=" << std::hex << ss.calibration_hash << std::dec
      << ",k=" << ss.k() << ",n_t=" << ss.n_t() << '\n';
  for (int k = 0; k < ss.k(); ++k) {
    for (int n = 0; n < ss.n_t(); ++n) {
      if (n) out << ',';
      out << static_cast<int>(encode(ss.beams.at(n, k)));
    }
    out << '\n';
  }
}

SsBurst load_burst_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("# beta=", 0) != 0) throw IntegrityError("burst file lacks its header line");
  SsBurst ss;
  int k = 0;
  int n_t = 0;
  {
    std::string body = header.substr(2);
    std::stringstream fields(body);
    std::string field;
    while (std::getline(fields, field, ',')) {
      auto eq = field.find('=');
      if (eq == std::string::npos) throw IntegrityError("malformed burst header");
      std::string key = field.substr(0, eq);
      std::string val = field.substr(eq + 1);
      if (key == "beta") ss.beta = std::stod(val);
      else if (key == "calibration_hash") ss.calibration_hash = std::stoull(val, nullptr, 16);
      else if (key == "k") k = std::stoi(val);
      else if (key == "n_t") n_t = std::stoi(val);
    }
  }
  if (k < 1 || n_t < 1) throw IntegrityError("burst header missing k or n_t");
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(k) * static_cast<std::size_t>(n_t));
  std::string line;
  for (int row = 0; row < k; ++row) {
    if (!std::getline(in, line)) throw IntegrityError("burst file truncated");
    std::stringstream ls(line);
    std::string cell;
    for (int n = 0; n < n_t; ++n) {
      if (!std::getline(ls, cell, ',')) throw IntegrityError("burst row too short");
      int c = std::stoi(cell);
      if (c < 0 || c > 3) throw IntegrityError("burst code out of range");
      codes[static_cast<std::size_t>(row) * n_t + n] = static_cast<std::uint8_t>(c);
    }
  }
  ss.beams = AnalogPrecoder(n_t, k, std::move(codes));
  return ss;
}

}  // namespace hbf
