#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eagcl/cdsgraph.hpp"
#include "eagcl/contrastive.hpp"
#include "eagcl/dataio.hpp"
#include "eagcl/gradcheck.hpp"
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

double nce_value(const Tensor& z1, const Tensor& z2, double tau) {
  Tape tp;
  return tp.value(info_nce(tp, tp.leaf(z1), tp.leaf(z2), tau)).item();
}

// O(N^2) reference with explicit row normalization and naive exponentials.
double nce_reference(const Tensor& z1, const Tensor& z2, double tau) {
  const std::size_t n = z1.rows(), d = z1.cols();
  auto unit = [&](const Tensor& z, std::size_t i) {
    std::vector<double> row(d);
    double nrm = 0.0;
    for (std::size_t j = 0; j < d; ++j) nrm += z(i, j) * z(i, j);
    nrm = std::sqrt(nrm) + 1e-12;
    for (std::size_t j = 0; j < d; ++j) row[j] = z(i, j) / nrm;
    return row;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> a = unit(z1, i);
    double denom = 0.0, pos = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> b = unit(z2, k);
      double cos = 0.0;
      for (std::size_t j = 0; j < d; ++j) cos += a[j] * b[j];
      double e = std::exp(cos / tau);
      denom += e;
      if (k == i) pos = e;
    }
    total += -std::log(pos / denom);
  }
  return total;
}

}  // namespace

TEST_CASE("a single row has zero contrastive loss") {
  Tensor z = Tensor::from_rows(1, 4, {0.3, -1.2, 0.8, 2.0});
  CHECK(nce_value(z, z, 0.2) == Catch::Approx(0.0).margin(1e-12));
  Tensor other = Tensor::from_rows(1, 4, {5.0, 1.0, -0.2, 0.4});
  // Even a disagreeing positive is the only candidate.
  CHECK(nce_value(z, other, 0.2) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("two orthonormal rows at tau=1 give the closed-form loss") {
  Tensor z = Tensor::from_rows(2, 2, {1.0, 0.0, 0.0, 1.0});
  double want = 2.0 * std::log(1.0 + std::exp(-1.0));
  double got = nce_value(z, z, 1.0);
  CHECK(got == Catch::Approx(want).margin(1e-10));
  CHECK(got == Catch::Approx(0.6265234).margin(1e-6));
}

TEST_CASE("cosine similarity makes the loss scale-invariant") {
  Tensor z1 = randn(6, 5, 31);
  Tensor z2 = randn(6, 5, 32);
  double base = nce_value(z1, z2, 0.2);
  Tensor s1 = z1, s2 = z2;
  for (std::size_t i = 0; i < s1.size(); ++i) s1[i] *= 3.7;
  for (std::size_t i = 0; i < s2.size(); ++i) s2[i] *= 0.02;
  CHECK(nce_value(s1, s2, 0.2) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("infinite temperature flattens the loss to N log N") {
  Tensor z1 = randn(5, 4, 41);
  Tensor z2 = randn(5, 4, 42);
  CHECK(nce_value(z1, z2, 1e6) == Catch::Approx(5.0 * std::log(5.0)).margin(1e-3));
}

TEST_CASE("vectorized loss equals the double-loop reference") {
  for (std::size_t n : {2u, 7u, 32u}) {
    Tensor z1 = randn(n, 8, 100 + n);
    Tensor z2 = randn(n, 8, 200 + n);
    for (double tau : {0.2, 1.0}) {
      double got = nce_value(z1, z2, tau);
      double want = nce_reference(z1, z2, tau);
      CHECK(got == Catch::Approx(want).margin(1e-10));
    }
  }
}

TEST_CASE("the loss is invariant under a shared row permutation") {
  Tensor z1 = randn(9, 6, 51);
  Tensor z2 = randn(9, 6, 52);
  std::vector<std::size_t> perm = {4, 7, 0, 8, 2, 6, 1, 5, 3};
  Tensor p1(9, 6), p2(9, 6);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      p1(i, j) = z1(perm[i], j);
      p2(i, j) = z2(perm[i], j);
    }
  CHECK(nce_value(p1, p2, 0.2) == Catch::Approx(nce_value(z1, z2, 0.2)).margin(1e-10));
}

TEST_CASE("aligned positives score strictly below misaligned ones") {
  Tensor z = randn(8, 5, 61);
  Tensor shifted(8, 5);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 5; ++j) shifted(i, j) = z((i + 1) % 8, j);
  // Same candidate multiset per row, so only the positive term moves.
  CHECK(nce_value(z, z, 0.2) < nce_value(z, shifted, 0.2));
}

TEST_CASE("info_nce validates its inputs") {
  Tape tp;
  Var a = tp.leaf(randn(3, 4, 1));
  Var b = tp.leaf(randn(4, 4, 2));
  CHECK_THROWS_AS(info_nce(tp, a, b, 0.2), ContractError);
  CHECK_THROWS_AS(info_nce(tp, a, a, 0.0), ConfigError);
  CHECK_THROWS_AS(info_nce(tp, a, a, -1.0), ConfigError);
  Var empty = tp.leaf(Tensor(0, 4));
  CHECK_THROWS_AS(info_nce(tp, empty, empty, 0.2), ContractError);
}

TEST_CASE("a zero-norm row warns instead of dividing by zero") {
  drain_warnings();
  Tensor z = Tensor::from_rows(2, 3, {0.0, 0.0, 0.0, 1.0, 2.0, -0.5});
  double loss = nce_value(z, z, 0.5);
  CHECK(std::isfinite(loss));
  auto warnings = drain_warnings();
  bool saw = false;
  for (const auto& w : warnings) saw = saw || w.find("zero-norm") != std::string::npos;
  CHECK(saw);
}

TEST_CASE("info_nce gradients match finite differences") {
  Tensor z1 = randn(5, 4, 71);
  Tensor z2 = randn(5, 4, 72);
  GradCheckFn f = [&](std::vector<Tensor>* grads) {
    Tape tp;
    Var a = tp.leaf(z1);
    Var b = tp.leaf(z2);
    Var loss = info_nce(tp, a, b, 0.2);
    if (grads) {
      tp.backward(loss);
      *grads = {tp.grad(a), tp.grad(b)};
    }
    return tp.value(loss).item();
  };
  GradCheckReport rep = grad_check(f, {&z1, &z2}, 1e-5, 1e-6);
  CHECK(rep.pass);
  CHECK(rep.coords_checked == 40);
}

TEST_CASE("ssl_losses scales by ssl_reg and slices item nodes") {
  // Graph: A items {0,1}, users {0,1}, B items {0}.
  std::vector<HybridSequence> batch;
  {
    HybridSequence s;
    s.user = 0;
    s.events = {{0, Domain::A}, {1, Domain::A}, {0, Domain::B}};
    batch.push_back(s);
    HybridSequence t;
    t.user = 1;
    t.events = {{1, Domain::A}, {0, Domain::B}};
    batch.push_back(t);
  }
  CdsGraph g = build_graph(batch);
  REQUIRE(g.a_count() == 2);
  REQUIRE(g.b_count() == 1);

  Tape tp;
  Tensor nodes1 = randn(g.side(), 6, 81);
  Tensor nodes2 = randn(g.side(), 6, 82);
  EncodeResult v1, v2;
  v1.nodes = tp.leaf(nodes1);
  v2.nodes = tp.leaf(nodes2);

  SslLosses ssl = ssl_losses(tp, g, v1, v2, 0.2, 1e-3);
  CHECK_FALSE(ssl.b_empty);

  Tensor a1(2, 6), a2(2, 6);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      a1(i, j) = nodes1(g.a_node(i), j);
      a2(i, j) = nodes2(g.a_node(i), j);
    }
  CHECK(tp.value(ssl.a).item() == Catch::Approx(1e-3 * nce_value(a1, a2, 0.2)).margin(1e-12));
  // A single B item means its contrastive term is exactly zero.
  CHECK(tp.value(ssl.b).item() == Catch::Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(ssl_losses(tp, g, v1, v2, 0.2, -1e-3), ConfigError);
}

TEST_CASE("a batch without B items yields a zero B loss and a warning") {
  std::vector<HybridSequence> batch;
  HybridSequence s;
  s.user = 0;
  s.events = {{0, Domain::A}, {1, Domain::A}};
  batch.push_back(s);
  CdsGraph g = build_graph(batch);
  REQUIRE(g.b_count() == 0);

  drain_warnings();
  Tape tp;
  EncodeResult v1, v2;
  v1.nodes = tp.leaf(randn(g.side(), 4, 91));
  v2.nodes = tp.leaf(randn(g.side(), 4, 92));
  SslLosses ssl = ssl_losses(tp, g, v1, v2, 0.2, 1e-3);
  CHECK(ssl.b_empty);
  CHECK(tp.value(ssl.b).item() == 0.0);
  auto warnings = drain_warnings();
  bool saw = false;
  for (const auto& w : warnings) saw = saw || w.find("no domain-B items") != std::string::npos;
  CHECK(saw);
}
