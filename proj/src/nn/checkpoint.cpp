// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/checkpoint.hpp"

#include <fstream>

#include "hbf/hashing.hpp"
#include "hbf/matrix_io.hpp"

namespace hbf::nn {

namespace {

constexpr std::uint32_t kMagic = 0x4e464248;  // "HBFN"
constexpr std::uint32_t kVersion = 1;

void put_matrix(std::ostream& out, const RMatrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

void get_matrix_into(std::istream& in, RMatrix& m, const std::string& what) {
  const auto rows = static_cast<Eigen::Index>(get_u32(in));
  const auto cols = static_cast<Eigen::Index>(get_u32(in));
  if (rows != m.rows() || cols != m.cols()) throw IntegrityError("checkpoint shape mismatch for " + what);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 20)) throw IntegrityError("corrupt checkpoint string");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw IntegrityError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, TrainState& st) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IntegrityError("cannot write " + path.string());
  const NetworkSpec& s = st.net.spec();
  put_u32(out, kMagic);
  put_u32(out, kVersion);
  put_u64(out, hash64(s.describe()));
  put_u32(out, static_cast<std::uint32_t>(s.variant));
  for (int v : {s.n_t, s.n_rf, s.n_u, s.k, s.classes}) put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(s.trunk_widths.size()));
  for (int w : s.trunk_widths) put_u32(out, static_cast<std::uint32_t>(w));
  for (double d : {s.leaky_slope, s.bn_eps, s.bn_momentum, s.keep_prob}) put_f64(out, d);
  put_u32(out, s.use_conv ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(s.conv_channels));

  auto params = st.net.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(out, p.name);
    put_matrix(out, *p.value);
  }
  auto buffers = st.net.buffers();
  put_u32(out, static_cast<std::uint32_t>(buffers.size()));
  for (auto* b : buffers) put_matrix(out, *b);

  const AdamState& a = st.adam;
  for (double d : {a.lr, a.beta1, a.beta2, a.eps, a.weight_decay}) put_f64(out, d);
  put_u64(out, static_cast<std::uint64_t>(a.step));
  put_u32(out, static_cast<std::uint32_t>(a.m.size()));
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    put_matrix(out, a.m[i]);
    put_matrix(out, a.v[i]);
  }
  const PlateauState& p = st.plateau;
  for (double d : {p.factor, p.threshold, p.min_lr, p.best}) put_f64(out, d);
  put_u32(out, static_cast<std::uint32_t>(p.patience));
  put_u32(out, static_cast<std::uint32_t>(p.bad_epochs));
  put_u32(out, static_cast<std::uint32_t>(p.reductions));
  put_u32(out, static_cast<std::uint32_t>(st.epoch));
  if (!out) throw IntegrityError("write failed for " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  if (get_u32(in) != kMagic) throw IntegrityError("not a checkpoint: " + path.string());
  if (get_u32(in) != kVersion) throw IntegrityError("unsupported checkpoint version");
  const std::uint64_t spec_hash = get_u64(in);
  NetworkSpec s;
  const std::uint32_t variant = get_u32(in);
  if (variant > 1) throw IntegrityError("unknown network variant in checkpoint");
  s.variant = static_cast<Variant>(variant);
  s.n_t = static_cast<int>(get_u32(in));
  s.n_rf = static_cast<int>(get_u32(in));
  s.n_u = static_cast<int>(get_u32(in));
  s.k = static_cast<int>(get_u32(in));
  s.classes = static_cast<int>(get_u32(in));
  const std::uint32_t depth = get_u32(in);
  if (depth > 64) throw IntegrityError("corrupt checkpoint trunk");
  s.trunk_widths.resize(depth);
  for (auto& w : s.trunk_widths) w = static_cast<int>(get_u32(in));
  s.leaky_slope = get_f64(in);
  s.bn_eps = get_f64(in);
  s.bn_momentum = get_f64(in);
  s.keep_prob = get_f64(in);
  s.use_conv = get_u32(in) != 0;
  s.conv_channels = static_cast<int>(get_u32(in));
  if (hash64(s.describe()) != spec_hash) throw IntegrityError("checkpoint spec hash mismatch");

  TrainState st;
  st.net = Network(s, 0);
  auto params = st.net.params();
  if (get_u32(in) != params.size()) throw IntegrityError("checkpoint parameter count mismatch");
  for (auto& p : params) {
    if (get_string(in) != p.name) throw IntegrityError("checkpoint parameter order mismatch at " + p.name);
    get_matrix_into(in, *p.value, p.name);
  }
  auto buffers = st.net.buffers();
  if (get_u32(in) != buffers.size()) throw IntegrityError("checkpoint buffer count mismatch");
  for (auto* b : buffers) get_matrix_into(in, *b, "batchnorm statistics");

  AdamState& a = st.adam;
  a.lr = get_f64(in);
  a.beta1 = get_f64(in);
  a.beta2 = get_f64(in);
  a.eps = get_f64(in);
  a.weight_decay = get_f64(in);
  a.step = static_cast<long>(get_u64(in));
  const std::uint32_t moments = get_u32(in);
  if (moments != 0 && moments != params.size()) throw IntegrityError("checkpoint optimizer state mismatch");
  for (std::uint32_t i = 0; i < moments; ++i) {
    a.m.emplace_back(params[i].value->rows(), params[i].value->cols());
    a.v.emplace_back(params[i].value->rows(), params[i].value->cols());
    get_matrix_into(in, a.m.back(), "adam moment");
    get_matrix_into(in, a.v.back(), "adam moment");
  }
  PlateauState& p = st.plateau;
  p.factor = get_f64(in);
  p.threshold = get_f64(in);
  p.min_lr = get_f64(in);
  p.best = get_f64(in);
  p.patience = static_cast<int>(get_u32(in));
  p.bad_epochs = static_cast<int>(get_u32(in));
  p.reductions = static_cast<int>(get_u32(in));
  st.epoch = static_cast<int>(get_u32(in));
  return st;
}

}  // namespace hbf::nn
