// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hbf/rate_metrics.hpp"

namespace hbf::nn {

namespace {

constexpr Eigen::Index kEvalChunk = 2048;

HeadOutputs eval_forward(Network& net, const RMatrix& inputs) {
  HeadOutputs all;
  for (Eigen::Index start = 0; start < inputs.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, inputs.cols() - start);
    HeadOutputs part = net.forward(inputs.middleCols(start, n), false);
    if (start == 0) {
      all.logits.resize(part.logits.rows(), inputs.cols());
      all.p.resize(part.p.rows(), inputs.cols());
      all.regression.resize(part.regression.rows(), inputs.cols());
    }
    all.logits.middleCols(start, n) = part.logits;
    all.p.middleCols(start, n) = part.p;
    all.regression.middleCols(start, n) = part.regression;
  }
  return all;
}

Prediction make_prediction(const NetworkSpec& spec, const RMatrix& reg, Eigen::Index j,
                           std::size_t index, const Codebook& cb, const CodebookCache& cache) {
  Prediction pr;
  pr.index = index;
  pr.a = cb[index];
  if (spec.variant == Variant::kHbfNet) {
    pr.w.w = unpack_regression(reg, j, spec.n_rf, spec.n_u);
  } else {
    RVector norms;
    const CMatrix u = normalize_cols(unpack_regression(reg, j, spec.n_t, spec.n_u), norms);
    pr.w.w = cache.pinv[index] * u;
  }
  pr.w = normalize_hybrid(pr.a, pr.w);
  return pr;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void TrainData::validate() const {
  if (static_cast<std::size_t>(inputs.cols()) != channels.size()) {
    throw ShapeError("training inputs and channels disagree in count");
  }
}

TrainData TrainData::subset(std::span<const std::size_t> rows) const {
  TrainData out;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(rows.size()));
  out.channels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(static_cast<Eigen::Index>(rows[i]));
    out.channels.push_back(channels[rows[i]]);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("training needs at least one epoch");
  if (batch_size < 2) throw InvalidArgument("batch size must be at least 2");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (weight_decay < 0.0) throw InvalidArgument("weight decay must be non-negative");
}

void continue_training(TrainState& st, const TrainData& data, const Codebook& cb, double sigma2,
                       const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const NetworkSpec& spec = st.net.spec();
  if (static_cast<std::size_t>(spec.classes) != cb.size()) {
    throw ShapeError("network classifier width does not match the codebook");
  }
  if (data.inputs.rows() != spec.input_width()) throw ShapeError("training input width mismatch");
  if (data.size() < 2) throw InvalidArgument("training needs at least two samples");
  const CodebookCache cache = CodebookCache::build(cb);
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<CMatrix> batch_h;
  RMatrix batch_x;
  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = st.epoch + 1;
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      Rng shuffle_rng = Rng::stream(cfg.seed, "train.shuffle", {static_cast<std::uint64_t>(epoch)});
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    }
    Rng dropout_rng = Rng::stream(cfg.seed, "train.dropout", {static_cast<std::uint64_t>(epoch)});
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t m = std::min(bs, n - start);
      if (m < 2) break;  // batch statistics need two samples
      batch_x.resize(data.inputs.rows(), static_cast<Eigen::Index>(m));
      batch_h.clear();
      for (std::size_t i = 0; i < m; ++i) {
        batch_x.col(static_cast<Eigen::Index>(i)) = data.inputs.col(static_cast<Eigen::Index>(order[start + i]));
        batch_h.push_back(data.channels[order[start + i]]);
      }
      st.net.zero_grad();
      HeadOutputs out = st.net.forward(batch_x, true, &dropout_rng);
      LossResult loss = spec.variant == Variant::kHbfNet
                            ? loss_hbf(out.logits, out.regression, batch_h, cache, sigma2)
                            : loss_afp(out.logits, out.regression, batch_h, cache, sigma2, cfg.afp);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("training diverged: loss " + std::to_string(loss.total) + " at epoch " +
                             std::to_string(epoch) + ", batch starting at " + std::to_string(start));
      }
      st.net.backward(loss.d_logits, loss.d_regression);
      adam_step(st.adam, st.net.params());
      loss_sum += loss.total * static_cast<double>(m);
      seen += m;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(seen);
    log.lr = st.adam.lr;
    if (cfg.eval) {
      auto preds = predict_hbf(st.net, cfg.eval->inputs, cb, cache);
      log.eval_sum_rate = mean_of(prediction_rates(preds, cfg.eval->channels, sigma2));
    }
    plateau_step(st.plateau, st.adam, log.train_loss);
    st.epoch = epoch;
    st.history.push_back(log);
    if (cfg.on_epoch) cfg.on_epoch(log);
  }
}

TrainState train_network(const NetworkSpec& spec, const TrainData& data, const Codebook& cb,
                         double sigma2, const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.net = Network(spec, cfg.seed);
  st.adam.lr = cfg.lr;
  st.adam.weight_decay = cfg.weight_decay;
  st.plateau.factor = cfg.plateau_factor;
  st.plateau.patience = cfg.plateau_patience;
  continue_training(st, data, cb, sigma2, cfg);
  return st;
}

TrainState train_hbf_net(NetworkSpec spec, const TrainData& data, const Codebook& cb, double sigma2,
                         const TrainConfig& cfg) {
  spec.variant = Variant::kHbfNet;
  return train_network(spec, data, cb, sigma2, cfg);
}

TrainState train_afp_net(NetworkSpec spec, const TrainData& data, const Codebook& cb, double sigma2,
                         const TrainConfig& cfg) {
  spec.variant = Variant::kAfpNet;
  return train_network(spec, data, cb, sigma2, cfg);
}

std::vector<Prediction> predict_hbf(Network& net, const RMatrix& inputs, const Codebook& cb,
                                    const CodebookCache& cache) {
  const HeadOutputs out = eval_forward(net, inputs);
  std::vector<Prediction> preds;
  preds.reserve(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    preds.push_back(make_prediction(net.spec(), out.regression, j, argmax_lowest(out.p.col(j)), cb, cache));
  }
  return preds;
}

std::vector<Prediction> predict_random_ap(Network& net, const RMatrix& inputs, const Codebook& cb,
                                          const CodebookCache& cache, Rng& rng) {
  const HeadOutputs out = eval_forward(net, inputs);
  std::vector<Prediction> preds;
  preds.reserve(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cb.size()) - 1));
    preds.push_back(make_prediction(net.spec(), out.regression, j, idx, cb, cache));
  }
  return preds;
}

std::vector<FullyDigitalPrecoder> predict_fdp(Network& net, const RMatrix& inputs) {
  const NetworkSpec& spec = net.spec();
  if (spec.variant != Variant::kAfpNet) throw InvalidArgument("only the fully-digital variant predicts U");
  const HeadOutputs out = eval_forward(net, inputs);
  std::vector<FullyDigitalPrecoder> res;
  RVector norms;
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    res.push_back({normalize_cols(unpack_regression(out.regression, j, spec.n_t, spec.n_u), norms)});
  }
  return res;
}

std::vector<double> prediction_rates(const std::vector<Prediction>& preds,
                                     std::span<const CMatrix> channels, double sigma2) {
  if (preds.size() != channels.size()) throw ShapeError("prediction and channel counts differ");
  std::vector<double> r(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    r[i] = sum_rate_hybrid(channels[i], preds[i].a, preds[i].w, sigma2);
  }
  return r;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& history) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out.precision(10);
  out << "epoch,train_loss,lr,eval_sum_rate\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << h.train_loss << ',' << h.lr << ',';
    if (std::isfinite(h.eval_sum_rate)) out << h.eval_sum_rate;
    out << '\n';
  }
}

}  // namespace hbf::nn
