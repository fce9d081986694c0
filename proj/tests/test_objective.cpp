#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eagcl/gradcheck.hpp"
#include "eagcl/objective.hpp"
#include "eagcl/optim.hpp"
#include "eagcl/tape.hpp"

using namespace eagcl;

namespace {

Tensor randn(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Tensor t(rows, cols);
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("zero head weights predict the uniform distribution") {
  Tape tp;
  Var ht = tp.leaf(randn(3, 4, 1));
  Var ho = tp.leaf(randn(3, 4, 2));
  Var w = tp.leaf(Tensor(5, 8));
  Var b = tp.leaf(Tensor(1, 5));
  Var probs = predict(tp, ht, ho, w, b);
  REQUIRE(tp.value(probs).rows() == 3);
  REQUIRE(tp.value(probs).cols() == 5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(tp.value(probs)(i, j) == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("an overwhelming bias concentrates all probability") {
  Tape tp;
  Var ht = tp.leaf(randn(2, 3, 3));
  Var ho = tp.leaf(randn(2, 3, 4));
  Var w = tp.leaf(randn(4, 6, 5));
  Tensor bias(1, 4);
  bias(0, 2) = 1e6;
  Var probs = predict(tp, ht, ho, w, tp.leaf(bias));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(tp.value(probs)(i, 2) == Catch::Approx(1.0).margin(1e-9));
    CHECK(tp.value(probs)(i, 0) == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("prediction rows always sum to one") {
  Tape tp;
  Var ht = tp.leaf(randn(6, 5, 6));
  Var ho = tp.leaf(randn(6, 5, 7));
  Var w = tp.leaf(randn(9, 10, 8));
  Var b = tp.leaf(randn(1, 9, 9));
  Var probs = predict(tp, ht, ho, w, b);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 9; ++j) sum += tp.value(probs)(i, j);
    CHECK(sum == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("predict matches a hand-computed softmax") {
  Tape tp;
  Var ht = tp.leaf(Tensor::from_rows(1, 2, {1.0, -1.0}));
  Var ho = tp.leaf(Tensor::from_rows(1, 2, {0.5, 2.0}));
  // feats = (1, -1, 0.5, 2)
  Var w = tp.leaf(Tensor::from_rows(2, 4, {0.2, 0.1, -0.3, 0.4, -0.1, 0.5, 0.0, 0.2}));
  Var b = tp.leaf(Tensor::from_rows(1, 2, {0.05, -0.05}));
  Var probs = predict(tp, ht, ho, w, b);
  const double z0 = 0.2 - 0.1 - 0.15 + 0.8 + 0.05;
  const double z1 = -0.1 - 0.5 + 0.0 + 0.4 - 0.05;
  const double e0 = std::exp(z0), e1 = std::exp(z1);
  CHECK(tp.value(probs)(0, 0) == Catch::Approx(e0 / (e0 + e1)).margin(1e-12));
  CHECK(tp.value(probs)(0, 1) == Catch::Approx(e1 / (e0 + e1)).margin(1e-12));
}

TEST_CASE("predict validates block shapes") {
  Tape tp;
  Var ht = tp.leaf(randn(2, 4, 10));
  Var short_ho = tp.leaf(randn(3, 4, 11));
  Var w = tp.leaf(randn(5, 8, 12));
  Var b = tp.leaf(randn(1, 5, 13));
  CHECK_THROWS_AS(predict(tp, ht, short_ho, w, b), ContractError);
  Var narrow = tp.leaf(randn(2, 3, 14));
  CHECK_THROWS_AS(predict(tp, ht, narrow, w, b), ContractError);
}

TEST_CASE("cross-entropy of a certain prediction is zero") {
  Tape tp;
  Var probs = tp.leaf(Tensor::from_rows(1, 3, {0.0, 1.0, 0.0}));
  Var loss = ce_loss(tp, probs, {0}, {1});
  CHECK(tp.value(loss).item() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("cross-entropy of a uniform four-way prediction is log 4") {
  Tape tp;
  Var probs = tp.leaf(Tensor::from_rows(1, 4, {0.25, 0.25, 0.25, 0.25}));
  Var loss = ce_loss(tp, probs, {0}, {2});
  CHECK(tp.value(loss).item() == Catch::Approx(std::log(4.0)).margin(1e-12));
}

TEST_CASE("cross-entropy averages over the listed rows") {
  Tape tp;
  Var probs = tp.leaf(Tensor::from_rows(2, 2, {0.5, 0.5, 0.25, 0.75}));
  Var loss = ce_loss(tp, probs, {0, 1}, {0, 0});
  CHECK(tp.value(loss).item() ==
        Catch::Approx(0.5 * (std::log(2.0) + std::log(4.0))).margin(1e-12));
}

TEST_CASE("a zero probability is floored instead of exploding") {
  Tape tp;
  Var probs = tp.leaf(Tensor::from_rows(1, 2, {0.0, 1.0}));
  Var loss = ce_loss(tp, probs, {0}, {0});
  CHECK(std::isfinite(tp.value(loss).item()));
  CHECK(tp.value(loss).item() == Catch::Approx(-std::log(1e-12)).margin(1e-9));
}

TEST_CASE("cross-entropy handles empty target lists and bad indices") {
  Tape tp;
  Var probs = tp.leaf(Tensor::from_rows(1, 2, {0.5, 0.5}));
  Var empty = ce_loss(tp, probs, {}, {});
  CHECK(tp.value(empty).item() == 0.0);
  CHECK_THROWS_AS(ce_loss(tp, probs, {0}, {}), ContractError);
  CHECK_THROWS_AS(ce_loss(tp, probs, {1}, {0}), ContractError);
  CHECK_THROWS_AS(ce_loss(tp, probs, {0}, {2}), ContractError);
}

TEST_CASE("joint loss combines the four terms with beta") {
  Tape tp;
  Var la = tp.leaf(Tensor::scalar(1.0));
  Var lb = tp.leaf(Tensor::scalar(2.0));
  Var sa = tp.leaf(Tensor::scalar(1.0));
  Var sb = tp.leaf(Tensor::scalar(1.0));
  Var joint = joint_loss(tp, la, lb, sa, sb, 0.5);
  CHECK(tp.value(joint).item() == Catch::Approx(4.0).margin(1e-14));

  tp.backward(joint);
  CHECK(tp.grad(la).item() == Catch::Approx(1.0));
  CHECK(tp.grad(lb).item() == Catch::Approx(1.0));
  CHECK(tp.grad(sa).item() == Catch::Approx(0.5));
  CHECK(tp.grad(sb).item() == Catch::Approx(0.5));

  CHECK_THROWS_AS(joint_loss(tp, la, lb, sa, sb, -0.1), ConfigError);
}

TEST_CASE("beta=0 detaches the contrastive terms from the objective") {
  Tape tp;
  Var la = tp.leaf(Tensor::scalar(1.5));
  Var lb = tp.leaf(Tensor::scalar(0.5));
  Var sa = tp.leaf(Tensor::scalar(123.0));
  Var sb = tp.leaf(Tensor::scalar(-7.0));
  Var joint = joint_loss(tp, la, lb, sa, sb, 0.0);
  CHECK(tp.value(joint).item() == Catch::Approx(2.0).margin(1e-14));
  tp.backward(joint);
  CHECK(tp.grad(sa).item() == 0.0);
  CHECK(tp.grad(sb).item() == 0.0);
}

TEST_CASE("head gradients match finite differences through predict and ce") {
  Tensor ht = randn(3, 4, 21);
  Tensor ho = randn(3, 4, 22);
  Tensor w = xavier_init(5, 8, 23);
  Tensor b = randn(1, 5, 24);
  std::vector<std::size_t> rows = {0, 2};
  std::vector<std::size_t> targets = {3, 1};

  GradCheckFn f = [&](std::vector<Tensor>* grads) {
    Tape tp;
    Var htv = tp.leaf(ht), hov = tp.leaf(ho), wv = tp.leaf(w), bv = tp.leaf(b);
    Var loss = ce_loss(tp, predict(tp, htv, hov, wv, bv), rows, targets);
    if (grads) {
      tp.backward(loss);
      *grads = {tp.grad(htv), tp.grad(hov), tp.grad(wv), tp.grad(bv)};
    }
    return tp.value(loss).item();
  };
  GradCheckReport rep = grad_check(f, {&ht, &ho, &w, &b}, 1e-5, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.coords_checked == ht.size() + ho.size() + w.size() + b.size());
}
