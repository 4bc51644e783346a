#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "drivestyle/common/rng.hpp"
#include "drivestyle/numkit/adam.hpp"
#include "drivestyle/numkit/checkpoint.hpp"
#include "drivestyle/numkit/graph.hpp"
#include "drivestyle/numkit/layers.hpp"
#include "test_util.hpp"

#include <cstdio>
#include <filesystem>

using namespace drivestyle;
using namespace drivestyle::numkit;

namespace {

struct CheckedScope {
  CheckedScope() { set_checked_mode(true); }
  ~CheckedScope() { set_checked_mode(false); }
};

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.at(i) = rng.normal(0.0, scale);
  return t;
}

}  // namespace

TEST_CASE("identity graph passes input through") {
  CheckedScope checked;
  Graph g;
  Tensor x = Tensor::row({1.0, -2.0, 3.5});
  Var v = g.input(x);
  CHECK(g.value(v).array().isApprox(x.array()));
}

TEST_CASE("affine layer with identity weights and zero bias is identity") {
  CheckedScope checked;
  ParamStore store;
  Tensor w({3, 3});
  w.mat().setIdentity();
  Param* pw = store.create("w", w);
  Param* pb = store.create("b", Tensor::zeros({1, 3}));
  Graph g;
  Var x = g.input(Tensor::row({0.5, -1.0, 2.0}));
  Var y = add_rowvec(matmul(x, g.param(*pw)), g.param(*pb));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(g.value(y).at(i) == doctest::Approx(g.value(x).at(i)));
}

TEST_CASE("two-layer MLP matches hand-rolled matrix arithmetic") {
  CheckedScope checked;
  Rng rng(7);
  ParamStore store;
  Dense fc1(store, "fc1", 3, 4, rng);
  Dense fc2(store, "fc2", 4, 2, rng);
  Tensor x = random_tensor({5, 3}, rng);

  Graph g;
  Var out = fc2(g, gelu(fc1(g, g.input(x))));

  // Independent route: plain Eigen arithmetic on the same param values.
  MatrixRM w1 = store.require("fc1.w")->value.mat();
  MatrixRM b1 = store.require("fc1.b")->value.mat();
  MatrixRM w2 = store.require("fc2.w")->value.mat();
  MatrixRM b2 = store.require("fc2.b")->value.mat();
  MatrixRM h = (x.mat() * w1).rowwise() + b1.row(0);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    double* d = h.data() + i;
    *d = 0.5 * *d * (1.0 + std::erf(*d / std::sqrt(2.0)));
  }
  MatrixRM expect = (h * w2).rowwise() + b2.row(0);

  CHECK((g.value(out).mat() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward is deterministic bit for bit") {
  Rng rng(11);
  ParamStore store;
  Dense fc(store, "fc", 4, 4, rng);
  Tensor x = random_tensor({3, 4}, rng);
  Graph g1, g2;
  Var y1 = tanh_op(fc(g1, g1.input(x)));
  Var y2 = tanh_op(fc(g2, g2.input(x)));
  for (Eigen::Index i = 0; i < g1.value(y1).size(); ++i) {
    CHECK(g1.value(y1).at(i) == g2.value(y2).at(i));
  }
}

TEST_CASE("loss = x^2 at x=3 gives grad 6") {
  ParamStore store;
  Param* px = store.create("x", Tensor::scalar(3.0));
  Graph g;
  Var loss = sum_all(square(g.param(*px)));
  g.backward(loss);
  CHECK(px->grad.at(0) == doctest::Approx(6.0));
}

TEST_CASE("param not involved in loss keeps zero grad") {
  ParamStore store;
  Param* used = store.create("used", Tensor::scalar(2.0));
  Param* unused = store.create("unused", Tensor::scalar(5.0));
  Graph g;
  Var loss = sum_all(square(g.param(*used)));
  g.backward(loss);
  CHECK(unused->grad.at(0) == 0.0);
}

TEST_CASE("backprop without forward errors") {
  Graph g;
  CHECK_THROWS(g.backward(Var{0, &g}));
}

TEST_CASE("backprop accumulates: two passes give exactly twice the grads") {
  Rng rng(3);
  ParamStore store;
  Dense fc(store, "fc", 3, 2, rng);
  Tensor x = random_tensor({4, 3}, rng);

  auto run = [&](Graph& g) {
    Var loss = mean_all(square(fc(g, g.input(x))));
    g.backward(loss);
  };
  Graph g1;
  run(g1);
  Tensor once = store.require("fc.w")->grad;
  Graph g2;
  run(g2);  // same graph contents, accumulate again
  const Tensor& twice = store.require("fc.w")->grad;
  for (Eigen::Index i = 0; i < once.size(); ++i) {
    CHECK(twice.at(i) == doctest::Approx(2.0 * once.at(i)).epsilon(1e-12));
  }
}

TEST_CASE("random 3-layer net grads match central finite differences") {
  Rng rng(17);
  ParamStore store;
  Dense fc1(store, "fc1", 4, 6, rng);
  Dense fc2(store, "fc2", 6, 5, rng);
  Dense fc3(store, "fc3", 5, 2, rng);
  Tensor x = random_tensor({3, 4}, rng);
  Tensor target = random_tensor({3, 2}, rng);

  auto loss_value = [&]() {
    Graph g;
    Var h1 = gelu(fc1(g, g.input(x)));
    Var h2 = tanh_op(fc2(g, h1));
    Var out = fc3(g, h2);
    Var loss = mse(out, g.input(target));
    return g.value(loss).at(0);
  };
  store.zero_grads();
  {
    Graph g;
    Var h1 = gelu(fc1(g, g.input(x)));
    Var h2 = tanh_op(fc2(g, h1));
    Var out = fc3(g, h2);
    Var loss = mse(out, g.input(target));
    g.backward(loss);
  }
  CHECK(testutil::max_grad_rel_error(store, loss_value) < 1e-4);
}

TEST_CASE("per-op gradients match finite differences on randomized shapes") {
  Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::Index b = 2 + static_cast<Eigen::Index>(rng.index(3));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(4));
    ParamStore store;
    Param* pa = store.create("a", random_tensor({b, d}, rng));
    Param* pc = store.create("c", random_tensor({b, 1}, rng, 0.3));
    pc->value.array() += 2.0;  // keep divisor away from zero

    auto build = [&](Graph& g) {
      Var a = g.param(*pa);
      Var c = g.param(*pc);
      Var t = concat_cols({sigmoid(a), relu(a), softplus(a)});
      Var u = div_colvec(slice_cols(t, 0, d), c);
      Var v = mul_colvec(u, sqrt_eps(row_sum(square(c)), 1e-9));
      Var w = add(col_mean(v), col_mean(exp_op(scale(a, 0.3))));
      Var ls = logsumexp_rows(concat_cols({w, neg(w)}));
      return mean_all(add(ls, sum_all(log_op(add_scalar(square(a), 1.0)))));
    };
    auto loss_value = [&]() {
      Graph g;
      return g.value(build(g)).at(0);
    };
    store.zero_grads();
    {
      Graph g;
      g.backward(build(g));
    }
    CHECK(testutil::max_grad_rel_error(store, loss_value) < 1e-4);
  }
}

TEST_CASE("cross entropy and cosine similarity grads match finite differences") {
  Rng rng(31);
  ParamStore store;
  Param* pa = store.create("a", random_tensor({4, 3}, rng));
  Param* pb = store.create("b", random_tensor({4, 3}, rng));
  const std::vector<int> targets = {0, 1, 2, 3};

  auto build = [&](Graph& g) {
    Var sims = cosine_similarity_matrix(g.param(*pa), g.param(*pb));
    return cross_entropy_with_indices(scale(sims, 10.0), targets);
  };
  auto loss_value = [&]() {
    Graph g;
    return g.value(build(g)).at(0);
  };
  store.zero_grads();
  {
    Graph g;
    g.backward(build(g));
  }
  CHECK(testutil::max_grad_rel_error(store, loss_value) < 1e-4);
}

TEST_CASE("conv1d identity kernel passes input through") {
  CheckedScope checked;
  ParamStore store;
  Param* pk = store.create("k", Tensor::from_vector({1, 1, 1}, {1.0}));
  Param* pb = store.create("b", Tensor::zeros({1, 1}));
  Graph g;
  Tensor x = Tensor::from_vector({1, 1, 4}, {1.0, -2.0, 0.5, 3.0});
  Var y = conv1d(g.input(x), g.param(*pk), g.param(*pb), 1, 0);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(g.value(y).at(i) == doctest::Approx(x.at(i)));
}

TEST_CASE("conv1d [1,1] kernel sums adjacent pairs") {
  ParamStore store;
  Param* pk = store.create("k", Tensor::from_vector({1, 1, 2}, {1.0, 1.0}));
  Param* pb = store.create("b", Tensor::zeros({1, 1}));
  Graph g;
  Var y = conv1d(g.input(Tensor::from_vector({1, 1, 3}, {1.0, 2.0, 3.0})), g.param(*pk),
                 g.param(*pb), 1, 0);
  CHECK(g.value(y).size() == 2);
  CHECK(g.value(y).at(0) == doctest::Approx(3.0));
  CHECK(g.value(y).at(1) == doctest::Approx(5.0));
}

TEST_CASE("conv1d matches nested-loop cross-correlation oracle") {
  Rng rng(41);
  ParamStore store;
  Param* pk = store.create("k", random_tensor({4, 3, 3}, rng));
  Param* pb = store.create("b", random_tensor({1, 4}, rng));
  Tensor x = random_tensor({2, 3, 7}, rng);
  const int stride = 2, pad = 1;

  Graph g;
  Var y = conv1d(g.input(x), g.param(*pk), g.param(*pb), stride, pad);

  // Oracle: direct nested loops over the definition.
  const Eigen::Index Lout = (7 + 2 * pad - 3) / stride + 1;
  for (Eigen::Index b = 0; b < 2; ++b) {
    for (Eigen::Index f = 0; f < 4; ++f) {
      for (Eigen::Index o = 0; o < Lout; ++o) {
        double acc = pb->value.at2(0, f);
        for (Eigen::Index c = 0; c < 3; ++c) {
          for (Eigen::Index w = 0; w < 3; ++w) {
            const Eigen::Index i = o * stride - pad + w;
            if (i >= 0 && i < 7) acc += x.at3(b, c, i) * pk->value.at3(f, c, w);
          }
        }
        CHECK(g.value(y).at3(b, f, o) == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("conv1d gradients match finite differences") {
  Rng rng(43);
  ParamStore store;
  Param* pk = store.create("k", random_tensor({3, 2, 3}, rng));
  Param* pb = store.create("b", random_tensor({1, 3}, rng));
  Param* px = store.create("x", random_tensor({2, 2, 6}, rng));

  auto build = [&](Graph& g) {
    Var y = conv1d(g.param(*px), g.param(*pk), g.param(*pb), 1, 1);
    return mean_all(square(y));
  };
  auto loss_value = [&]() {
    Graph g;
    return g.value(build(g)).at(0);
  };
  store.zero_grads();
  {
    Graph g;
    g.backward(build(g));
  }
  CHECK(testutil::max_grad_rel_error(store, loss_value) < 1e-4);
}

TEST_CASE("conv1d rejects kernels wider than the padded input") {
  ParamStore store;
  Param* pk = store.create("k", Tensor::zeros({1, 1, 5}));
  Param* pb = store.create("b", Tensor::zeros({1, 1}));
  Graph g;
  Var x = g.input(Tensor::zeros({1, 1, 3}));
  CHECK_THROWS(conv1d(x, g.param(*pk), g.param(*pb), 1, 0));
}

TEST_CASE("shape errors name the layer") {
  Rng rng(5);
  ParamStore store;
  Dense fc(store, "enc_fc1", 8, 4, rng);
  Graph g;
  Var x = g.input(Tensor::zeros({2, 5}));
  try {
    fc(g, x);
    FAIL("expected shape error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("enc_fc1") != std::string::npos);
  }
}

TEST_CASE("ste_sign forward quantizes, backward passes gradient through") {
  ParamStore store;
  Param* pz = store.create("z", Tensor::row({-0.5, 0.0, 0.7}));
  Graph g;
  Var q = ste_sign(g.param(*pz));
  CHECK(g.value(q).at(0) == -1.0);
  CHECK(g.value(q).at(1) == -1.0);  // zero maps to -1
  CHECK(g.value(q).at(2) == 1.0);
  g.backward(sum_all(mul(q, g.input(Tensor::row({2.0, 3.0, 4.0})))));
  CHECK(pz->grad.at(0) == doctest::Approx(2.0));
  CHECK(pz->grad.at(1) == doctest::Approx(3.0));
  CHECK(pz->grad.at(2) == doctest::Approx(4.0));
}

TEST_CASE("checked mode rejects non-finite values at construction") {
  CheckedScope checked;
  Eigen::ArrayXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(Tensor({1, 2}, bad));
}

TEST_CASE("adam step 1 reduces to -lr*g/(|g|+eps)") {
  ParamStore store;
  Param* p = store.create("p", Tensor::scalar(0.7));
  AdamState st({1, 1}, 0.01);
  p->grad.at(0) = 0.3;
  adam_step(*p, st);
  const double expect = 0.7 - 0.01 * 0.3 / (std::abs(0.3) + st.eps);
  CHECK(p->value.at(0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(st.step_count == 1);
  CHECK(p->grad.at(0) == 0.0);  // cleared
}

TEST_CASE("adam with zero grads leaves value unchanged") {
  ParamStore store;
  Param* p = store.create("p", Tensor::scalar(1.25));
  AdamState st({1, 1}, 0.1);
  for (int i = 0; i < 10; ++i) adam_step(*p, st);
  CHECK(p->value.at(0) == 1.25);
}

TEST_CASE("adam matches a scalar reference loop on f(x)=x^2") {
  // Reference route: textbook Adam in plain doubles.
  double x = 1.0, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> trace;
  for (int t = 1; t <= 100; ++t) {
    const double grad = 2.0 * x;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    trace.push_back(x);
  }
  CHECK(std::abs(x) < 0.05);

  ParamStore store;
  Param* p = store.create("x", Tensor::scalar(1.0));
  AdamState st({1, 1}, lr, b1, b2, eps);
  for (int t = 0; t < 100; ++t) {
    p->grad.at(0) = 2.0 * p->value.at(0);
    adam_step(*p, st);
    CHECK(p->value.at(0) == doctest::Approx(trace[static_cast<std::size_t>(t)]).epsilon(1e-12));
  }
}

TEST_CASE("adam state validates hyperparameters") {
  CHECK_THROWS(AdamState({1, 1}, -0.1));
  CHECK_THROWS(AdamState({1, 1}, 0.1, 1.0));
  CHECK_THROWS(AdamState({1, 1}, 0.1, 0.9, 0.999, 0.0));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(59);
  ParamStore store;
  Dense fc(store, "fc", 7, 3, rng);
  store.require("fc.w")->value.at(0) = 1.0 / 3.0;  // non-terminating binary fraction
  CheckpointHeader header;
  header.fingerprint = "cafebabe01234567";
  header.seed = 42;
  header.meta["kind"] = "unit-test";

  const std::string path =
      (std::filesystem::temp_directory_path() / "drivestyle_ckpt_test.bin").string();
  save_checkpoint(path, header, store);

  Checkpoint ckpt = read_checkpoint(path);
  CHECK(ckpt.header.fingerprint == header.fingerprint);
  CHECK(ckpt.header.seed == 42);
  CHECK(ckpt.header.meta.at("kind") == "unit-test");

  ParamStore store2;
  Rng rng2(1);
  Dense fc2(store2, "fc", 7, 3, rng2);
  load_into(ckpt, store2);
  for (const auto& p : store.all()) {
    Param* q = store2.require(p->id);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      CHECK(q->value.at(i) == p->value.at(i));  // exact, not approx
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint load rejects shape mismatch") {
  Rng rng(61);
  ParamStore store;
  Dense fc(store, "fc", 4, 2, rng);
  CheckpointHeader header;
  const std::string path =
      (std::filesystem::temp_directory_path() / "drivestyle_ckpt_mismatch.bin").string();
  save_checkpoint(path, header, store);

  ParamStore store2;
  Rng rng2(1);
  Dense fc2(store2, "fc", 4, 3, rng2);
  Checkpoint ckpt = read_checkpoint(path);
  CHECK_THROWS(load_into(ckpt, store2));
  std::filesystem::remove(path);
}

TEST_CASE("sinusoidal embedding has unit-amplitude sin/cos pairs") {
  Tensor e = sinusoidal_embedding({0.0, 1.0, 17.0}, 8);
  CHECK(e.rows() == 3);
  CHECK(e.cols() == 8);
  CHECK(e.at2(0, 0) == doctest::Approx(0.0));  // sin(0)
  CHECK(e.at2(0, 1) == doctest::Approx(1.0));  // cos(0)
  CHECK(e.at2(1, 0) == doctest::Approx(std::sin(1.0)));
}
