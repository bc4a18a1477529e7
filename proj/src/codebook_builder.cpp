// SPDX-License-Identifier: Apache-2.0
#include "hbf/codebook_builder.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "hbf/matrix_io.hpp"

namespace hbf {

namespace {

constexpr std::uint32_t kCodebookMagic = 0x43464248;  // "HBFC"
constexpr std::uint32_t kCodebookVersion = 1;

std::size_t argmax_lowest(const std::vector<double>& row, const std::vector<bool>* alive = nullptr) {
  std::size_t best = row.size();
  for (std::size_t l = 0; l < row.size(); ++l) {
    if (alive && !(*alive)[l]) continue;
    if (best == row.size() || row[l] > row[best]) best = l;
  }
  return best;
}

}  // namespace

void CodebookBuildParams::validate() const {
  if (!(xi > 1.0)) throw InvalidArgument("codebook append threshold xi must be > 1");
  if (cap < 1 || cap > Codebook::kMaxSize) throw InvalidArgument("codebook cap must be in [1, 1000]");
  if (!(retention > 0.0 && retention <= 1.0) && retention != 0.0) {
    throw InvalidArgument("codebook retention must be in (0, 1]");
  }
}

double LabeledCore::average_rate() const {
  if (labels.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) s += rate(r);
  return s / static_cast<double>(labels.size());
}

std::vector<std::size_t> LabeledCore::usage(std::size_t l) const {
  std::vector<std::size_t> out(l, 0);
  for (auto lab : labels) ++out.at(lab);
  return out;
}

bool LabeledCore::argmax_consistent() const {
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (argmax_lowest(rates[r]) != labels[r]) return false;
  }
  return true;
}

void fill_cache(const Codebook& cb, const std::vector<CMatrix>& channels, double sigma2,
                LabeledCore& core) {
  core.rates.resize(channels.size());
  core.dps.resize(channels.size());
  for (std::size_t r = 0; r < channels.size(); ++r) {
    for (std::size_t l = core.rates[r].size(); l < cb.size(); ++l) {
      HybridSolution s = hybrid_for_analog(channels[r], cb[l], sigma2);
      core.rates[r].push_back(s.sum_rate);
      core.dps[r].push_back(std::move(s.w));
    }
  }
}

Step1Result build_codebook_step1(const std::vector<CMatrix>& channels, double sigma2, int n_rf,
                                 const GaParams& ga, const CodebookBuildParams& params,
                                 std::uint64_t seed) {
  if (channels.empty()) throw InvalidArgument("codebook build needs a non-empty core dataset");
  params.validate();
  Step1Result out;
  LabeledCore& lc = out.labeled;
  lc.labels.resize(channels.size());
  lc.rates.resize(channels.size());
  lc.dps.resize(channels.size());
  out.appended.assign(channels.size(), false);
  out.hsho_rates.resize(channels.size());
  for (std::size_t n = 0; n < channels.size(); ++n) {
    const CMatrix& h = channels[n];
    Rng rng = Rng::stream(seed, "codebook.hsho", {n});
    HshoResult hs = hsho_design(h, sigma2, n_rf, ga, rng);
    out.hsho_rates[n] = hs.sum_rate;
    for (std::size_t l = 0; l < out.codebook.size(); ++l) {
      HybridSolution s = hybrid_for_analog(h, out.codebook[l], sigma2);
      lc.rates[n].push_back(s.sum_rate);
      lc.dps[n].push_back(std::move(s.w));
    }
    double best = 0.0;
    if (!lc.rates[n].empty()) best = *std::max_element(lc.rates[n].begin(), lc.rates[n].end());
    if (out.codebook.size() < params.cap && hs.sum_rate > params.xi * best &&
        out.codebook.add(hs.a)) {
      out.appended[n] = true;
      lc.rates[n].push_back(hs.sum_rate);
      lc.dps[n].push_back(hs.w);
      lc.labels[n] = out.codebook.size() - 1;
    } else {
      lc.labels[n] = argmax_lowest(lc.rates[n]);
    }
  }
  fill_cache(out.codebook, channels, sigma2, lc);
  return out;
}

LabeledCore reassign_labels(const Codebook& cb, const std::vector<CMatrix>& channels, double sigma2,
                            LabeledCore cache) {
  if (cb.empty()) throw InvalidArgument("relabeling needs a non-empty codebook");
  fill_cache(cb, channels, sigma2, cache);
  cache.labels.resize(channels.size());
  for (std::size_t r = 0; r < channels.size(); ++r) cache.labels[r] = argmax_lowest(cache.rates[r]);
  return cache;
}

PruneResult prune_codebook(const Codebook& cb, const LabeledCore& labeled,
                           const CodebookBuildParams& params) {
  if (cb.empty()) throw InvalidArgument("pruning needs a non-empty codebook");
  params.validate();
  const std::size_t l0 = cb.size();
  for (const auto& row : labeled.rates) {
    if (row.size() != l0) throw ShapeError("rate cache does not cover the codebook");
  }
  PruneResult out;
  out.initial_average = labeled.average_rate();
  const double floor = params.retention * out.initial_average;
  const auto n_rec = static_cast<double>(labeled.records());

  std::vector<bool> alive(l0, true);
  std::vector<std::size_t> labels = labeled.labels;
  std::vector<std::size_t> count = labeled.usage(l0);
  double total = out.initial_average * n_rec;
  std::size_t remaining = l0;

  while (remaining > 1) {
    std::size_t victim = l0;
    for (std::size_t l = 0; l < l0; ++l) {
      if (alive[l] && (victim == l0 || count[l] < count[victim])) victim = l;
    }
    alive[victim] = false;
    double next_total = total;
    std::vector<std::pair<std::size_t, std::size_t>> moves;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (labels[r] != victim) continue;
      std::size_t to = argmax_lowest(labeled.rates[r], &alive);
      next_total += labeled.rates[r][to] - labeled.rates[r][victim];
      moves.emplace_back(r, to);
    }
    if (next_total / n_rec < floor) {
      alive[victim] = true;
      break;
    }
    for (auto [r, to] : moves) {
      labels[r] = to;
      ++count[to];
    }
    count[victim] = 0;
    total = next_total;
    out.removed.push_back(victim);
    --remaining;
  }

  std::vector<std::size_t> new_index(l0, l0);
  std::vector<AnalogPrecoder> kept;
  for (std::size_t l = 0; l < l0; ++l) {
    if (!alive[l]) continue;
    new_index[l] = kept.size();
    kept.push_back(cb[l]);
  }
  out.codebook = Codebook(std::move(kept));
  LabeledCore& lc = out.labeled;
  lc.labels.resize(labels.size());
  lc.rates.resize(labels.size());
  lc.dps.resize(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    lc.labels[r] = new_index[labels[r]];
    for (std::size_t l = 0; l < l0; ++l) {
      if (!alive[l]) continue;
      lc.rates[r].push_back(labeled.rates[r][l]);
      if (r < labeled.dps.size() && l < labeled.dps[r].size()) lc.dps[r].push_back(labeled.dps[r][l]);
    }
  }
  out.final_average = lc.average_rate();
  if (out.final_average < floor) {
    throw NumericalError("pruned codebook violates the retention floor");
  }
  return out;
}

void save_codebook(const std::filesystem::path& path, const CodebookFile& file) {
  const Codebook& cb = file.codebook;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IntegrityError("cannot write " + path.string());
  put_u32(out, kCodebookMagic);
  put_u32(out, kCodebookVersion);
  put_u32(out, static_cast<std::uint32_t>(cb.size()));
  put_u32(out, static_cast<std::uint32_t>(cb.n_t()));
  put_u32(out, static_cast<std::uint32_t>(cb.n_rf()));
  put_f64(out, file.params.xi);
  put_u64(out, file.params.cap);
  put_f64(out, file.params.retention);
  put_u32(out, static_cast<std::uint32_t>(file.core_hash.size()));
  out.write(file.core_hash.data(), static_cast<std::streamsize>(file.core_hash.size()));
  for (const auto& a : cb.codewords()) {
    auto codes = a.codes();
    std::vector<char> packed((codes.size() + 3) / 4, 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      packed[i / 4] = static_cast<char>(packed[i / 4] | (codes[i] << (2 * (i % 4))));
    }
    out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  }
  if (!out) throw IntegrityError("write failed for " + path.string());
}

CodebookFile load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  if (get_u32(in) != kCodebookMagic) throw IntegrityError("not a codebook file: " + path.string());
  if (get_u32(in) != kCodebookVersion) throw IntegrityError("unsupported codebook version");
  CodebookFile f;
  const std::uint32_t l = get_u32(in);
  const auto n_t = static_cast<int>(get_u32(in));
  const auto n_rf = static_cast<int>(get_u32(in));
  f.params.xi = get_f64(in);
  f.params.cap = get_u64(in);
  f.params.retention = get_f64(in);
  const std::uint32_t hlen = get_u32(in);
  if (hlen > 1024) throw IntegrityError("corrupt codebook header");
  f.core_hash.resize(hlen);
  in.read(f.core_hash.data(), hlen);
  const std::size_t len = static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_rf);
  std::vector<AnalogPrecoder> cws;
  for (std::uint32_t k = 0; k < l; ++k) {
    std::vector<char> packed((len + 3) / 4);
    in.read(packed.data(), static_cast<std::streamsize>(packed.size()));
    if (!in) throw IntegrityError("codebook file truncated");
    std::vector<std::uint8_t> codes(len);
    for (std::size_t i = 0; i < len; ++i) {
      codes[i] = static_cast<std::uint8_t>((static_cast<unsigned char>(packed[i / 4]) >> (2 * (i % 4))) & 3u);
    }
    cws.emplace_back(n_t, n_rf, std::move(codes));
  }
  f.codebook = Codebook(std::move(cws));
  return f;
}

void export_codebook_csv(const std::filesystem::path& path, const Codebook& cb) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out << "index";
  const std::size_t len = static_cast<std::size_t>(cb.n_t()) * static_cast<std::size_t>(cb.n_rf());
  for (std::size_t i = 0; i < len; ++i) out << ",c" << i;
  out << '\n';
  for (std::size_t l = 0; l < cb.size(); ++l) {
    out << l;
    for (auto c : cb[l].codes()) out << ',' << static_cast<int>(c);
    out << '\n';
  }
}

}  // namespace hbf
