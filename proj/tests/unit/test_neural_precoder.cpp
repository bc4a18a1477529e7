// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hbf/nn/checkpoint.hpp"
#include "hbf/nn/trainer.hpp"
#include "hbf/rate_metrics.hpp"
#include "support/gradient_suite.hpp"

using namespace hbf;
using namespace hbf::nn;

TEST_CASE("finite-difference gradients") {
  for (const auto& check : testing::gradient_checks()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CAPTURE(check.name);
      CAPTURE(seed);
      CHECK(check.run(seed) < 1e-4);
    }
  }
}

TEST_CASE("library finite-difference helper on a known function") {
  auto f = [](const RVector& x) { return x(0) * x(0) * x(1) + std::sin(x(1)); };
  RVector p(2);
  p << 1.5, -0.7;
  RVector g = numeric_gradient(f, p);
  RVector expect(2);
  expect << 2 * 1.5 * -0.7, 1.5 * 1.5 + std::cos(-0.7);
  CHECK(max_relative_error(g, expect) < 1e-8);
}

TEST_CASE("leaky ReLU values") {
  LeakyRelu act(0.01);
  RMatrix x(4, 1);
  x << -2.0, 0.0, 3.0, -0.5;
  RMatrix y = act.forward(x);
  CHECK(y(0) == doctest::Approx(-0.02));
  CHECK(y(1) == 0.0);
  CHECK(y(2) == 3.0);
  CHECK(y(3) == doctest::Approx(-0.005));
  RMatrix d = act.backward(RMatrix::Ones(4, 1));
  CHECK(d(1) == doctest::Approx(0.01));
  CHECK(d(2) == 1.0);
}

TEST_CASE("softmax properties") {
  RMatrix z = RMatrix::Constant(4, 2, 3.7);
  RMatrix p = softmax(z);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p.data()[i] == doctest::Approx(0.25));
  RMatrix big(3, 1);
  big << 1000.0, 999.0, -1000.0;
  RMatrix q = softmax(big);
  CHECK(q.sum() == doctest::Approx(1.0));
  CHECK(std::isfinite(q(0)));
  // Jacobian rows sum to zero: shifting all logits leaves p unchanged.
  Rng rng(81);
  RMatrix r = testing::random_real(5, 1, rng);
  RMatrix shifted = r.array() + 2.5;
  CHECK((softmax(r) - softmax(shifted)).norm() < 1e-14);
  CHECK(argmax_lowest(RVector::Constant(3, 1.0 / 3)) == 0);
}

TEST_CASE("dropout keeps expectation and is identity in eval") {
  Dropout d(0.95);
  RMatrix x = RMatrix::Ones(200, 200);
  Rng rng(82);
  RMatrix y = d.forward(x, true, &rng);
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.02));
  CHECK((d.forward(x, false, nullptr) - x).norm() == 0.0);
}

TEST_CASE("batchnorm running statistics") {
  BatchNorm1d bn(2, 1e-5, 0.1);
  RMatrix x(2, 4);
  x << 1, 2, 3, 4, 10, 10, 10, 10;
  bn.forward(x, true);
  CHECK(bn.running_mean_(0) == doctest::Approx(0.25));
  // Unbiased batch variance of {1,2,3,4} is 5/3.
  CHECK(bn.running_var_(0) == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  CHECK_THROWS(bn.forward(RMatrix::Ones(2, 1), true));
}

TEST_CASE("regression packing round trip") {
  Rng rng(83);
  CMatrix m(4, 2);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r) m(r, c) = Complex(rng.normal(), rng.normal());
  RVector v = pack_regression(m);
  CHECK(v.size() == 16);
  CHECK(v(0) == m(0, 0).real());
  CHECK(v(8) == m(0, 0).imag());
  CHECK(v(4) == m(0, 1).real());
  RMatrix reg(16, 2);
  reg.col(1) = v;
  CHECK((unpack_regression(reg, 1, 4, 2) - m).norm() == 0.0);
}

TEST_CASE("network shapes and eval determinism") {
  NetworkSpec spec;
  spec.n_t = 8;
  spec.n_rf = 2;
  spec.n_u = 2;
  spec.k = 4;
  spec.classes = 5;
  spec.trunk_widths = {16, 16};
  CHECK(spec.regression_width() == 32);
  spec.variant = Variant::kHbfNet;
  CHECK(spec.regression_width() == 8);
  Network net(spec, 1);
  Rng rng(84);
  RMatrix x = testing::random_real(8, 7, rng);
  auto a = net.forward(x, false);
  auto b = net.forward(x, false);
  CHECK(a.logits.rows() == 5);
  CHECK(a.regression.rows() == 8);
  CHECK((a.logits - b.logits).norm() == 0.0);
  CHECK((a.regression - b.regression).norm() == 0.0);
  for (Eigen::Index j = 0; j < 7; ++j) CHECK(a.p.col(j).sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(net.forward(testing::random_real(9, 2, rng), false), ShapeError);
  CHECK(variant_from_string(to_string(Variant::kAfpNet)) == Variant::kAfpNet);
  CHECK_THROWS(variant_from_string("cnn"));
}

TEST_CASE("initialization bounds") {
  NetworkSpec spec;
  spec.classes = 3;
  spec.trunk_widths = {64};
  Network net(spec, 2);
  for (auto& p : net.params()) {
    if (p.name.find("fc0.w") != std::string::npos) {
      double bound = 1.0 / std::sqrt(16.0);
      CHECK(p.value->cwiseAbs().maxCoeff() <= bound);
    }
  }
}

TEST_CASE("Adam fixed point and quadratic convergence") {
  RMatrix w = RMatrix::Constant(3, 1, 2.0);
  RMatrix g = RMatrix::Zero(3, 1);
  std::vector<ParamRef> params{{"w", &w, &g, true}};
  AdamState st;
  st.weight_decay = 0.0;
  for (int i = 0; i < 10; ++i) adam_step(st, params);
  CHECK((w.array() - 2.0).abs().maxCoeff() == 0.0);

  // Minimize sum (w - 3)^2.
  AdamState q;
  q.lr = 0.05;
  q.weight_decay = 0.0;
  for (int i = 0; i < 2000; ++i) {
    g = 2.0 * (w.array() - 3.0).matrix();
    adam_step(q, params);
  }
  CHECK((w.array() - 3.0).abs().maxCoeff() < 1e-3);

  // Decoupled decay only touches flagged parameters.
  RMatrix b = RMatrix::Ones(1, 1), gb = RMatrix::Zero(1, 1);
  RMatrix v = RMatrix::Ones(1, 1), gv = RMatrix::Zero(1, 1);
  AdamState d;
  d.weight_decay = 0.1;
  std::vector<ParamRef> two{{"b", &b, &gb, false}, {"v", &v, &gv, true}};
  adam_step(d, two);
  CHECK(b(0) == 1.0);
  CHECK(v(0) == doctest::Approx(1.0 - 1e-3 * 0.1));
}

TEST_CASE("plateau scheduler") {
  AdamState adam;
  PlateauState p;
  int reductions = 0;
  for (int e = 0; e < 4; ++e) reductions += plateau_step(p, adam, 1.0);
  CHECK(reductions == 1);
  CHECK(adam.lr == doctest::Approx(1e-4));
  // Improving losses never reduce.
  AdamState a2;
  PlateauState p2;
  for (int e = 0; e < 10; ++e) CHECK_FALSE(plateau_step(p2, a2, 10.0 - e));
  CHECK(a2.lr == 1e-3);
  // Changes inside the relative threshold count as no improvement.
  AdamState a3;
  PlateauState p3;
  plateau_step(p3, a3, -20.0);
  plateau_step(p3, a3, -20.0001);
  plateau_step(p3, a3, -20.0002);
  CHECK(plateau_step(p3, a3, -20.0003));
}

namespace {

struct TinyProblem {
  TrainData data;
  Codebook cb;
  double sigma2 = 0.1;
  NetworkSpec spec;
};

// Inputs are the channel power seen through fixed probe beams; the two
// codewords each favour one half of the dataset.
TinyProblem tiny_problem(int n) {
  TinyProblem tp;
  Rng rng(85);
  const int n_t = 4, n_rf = 2, n_u = 1, k = 4;
  tp.spec.n_t = n_t;
  tp.spec.n_rf = n_rf;
  tp.spec.n_u = n_u;
  tp.spec.k = k;
  tp.spec.classes = 2;
  tp.spec.trunk_widths = {32, 32};
  tp.cb.add(AnalogPrecoder(n_t, n_rf, {0, 0, 0, 0, 0, 2, 1, 3}));
  tp.cb.add(AnalogPrecoder(n_t, n_rf, {0, 1, 0, 1, 0, 3, 1, 2}));
  CMatrix probes = CMatrix::Zero(n_t, k);
  for (int i = 0; i < k; ++i) probes(i, i) = 1.0;
  tp.data.inputs.resize(k * n_u, n);
  for (int j = 0; j < n; ++j) {
    CMatrix h = tp.cb[static_cast<std::size_t>(j % 2)].matrix().col(0) * Complex(rng.normal(), rng.normal());
    for (int r = 0; r < n_t; ++r) h(r, 0) += 0.1 * Complex(rng.normal(), rng.normal());
    tp.data.channels.push_back(h);
    for (int i = 0; i < k; ++i) tp.data.inputs(i, j) = std::norm(h.col(0).dot(probes.col(i)));
  }
  return tp;
}

}  // namespace

TEST_CASE("training lowers the loss and predictions are normalized") {
  auto tp = tiny_problem(200);
  for (Variant v : {Variant::kHbfNet, Variant::kAfpNet}) {
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 50;
    cfg.lr = 3e-3;
    NetworkSpec spec = tp.spec;
    spec.variant = v;
    auto st = train_network(spec, tp.data, tp.cb, tp.sigma2, cfg);
    REQUIRE(st.history.size() == 8);
    CHECK(st.history.back().train_loss < st.history.front().train_loss);
    auto cache = CodebookCache::build(tp.cb);
    auto preds = predict_hbf(st.net, tp.data.inputs, tp.cb, cache);
    for (const auto& p : preds) {
      CHECK(p.index < tp.cb.size());
      CHECK(p.a == tp.cb[p.index]);
      CHECK((p.a.matrix() * p.w.w).colwise().norm().maxCoeff() == doctest::Approx(1.0));
    }
    auto again = predict_hbf(st.net, tp.data.inputs, tp.cb, cache);
    CHECK((again[3].w.w - preds[3].w.w).norm() == 0.0);
    auto rates = prediction_rates(preds, tp.data.channels, tp.sigma2);
    CHECK(rates.size() == 200);
  }
}

TEST_CASE("training is reproducible for a seed") {
  auto tp = tiny_problem(60);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 20;
  auto a = train_afp_net(tp.spec, tp.data, tp.cb, tp.sigma2, cfg);
  auto b = train_afp_net(tp.spec, tp.data, tp.cb, tp.sigma2, cfg);
  CHECK(a.history.back().train_loss == b.history.back().train_loss);
}

TEST_CASE("checkpoint round trip and corruption") {
  auto tp = tiny_problem(60);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 20;
  auto st = train_hbf_net(tp.spec, tp.data, tp.cb, tp.sigma2, cfg);
  auto path = std::filesystem::temp_directory_path() / "hbf_test.ckpt";
  save_checkpoint(path, st);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.epoch == st.epoch);
  CHECK(loaded.adam.step == st.adam.step);
  CHECK(loaded.adam.lr == st.adam.lr);
  CHECK(loaded.plateau.best == st.plateau.best);
  CHECK(loaded.net.spec().describe() == st.net.spec().describe());
  auto o1 = st.net.forward(tp.data.inputs, false);
  auto o2 = loaded.net.forward(tp.data.inputs, false);
  CHECK((o1.logits - o2.logits).norm() == 0.0);
  CHECK((o1.regression - o2.regression).norm() == 0.0);

  // Resuming from the checkpoint matches uninterrupted training.
  TrainConfig more = cfg;
  more.epochs = 1;
  continue_training(st, tp.data, tp.cb, tp.sigma2, more);
  continue_training(loaded, tp.data, tp.cb, tp.sigma2, more);
  CHECK(st.history.back().train_loss == loaded.history.back().train_loss);

  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX";
  }
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  std::filesystem::remove(path);
}

TEST_CASE("codebook cache flags rank-deficient codewords") {
  Codebook cb;
  cb.add(AnalogPrecoder(4, 2, {0, 0, 0, 0, 0, 0, 0, 0}));  // parallel columns
  cb.add(AnalogPrecoder(4, 2, {0, 0, 0, 0, 0, 1, 0, 1}));
  auto cache = CodebookCache::build(cb);
  CHECK(cache.rank_deficient[0]);
  CHECK_FALSE(cache.rank_deficient[1]);
  CMatrix proj = cache.a[0] * cache.pinv[0];
  CHECK((proj * proj - proj).norm() < 1e-12);
}
