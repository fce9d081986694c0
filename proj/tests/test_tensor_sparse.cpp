#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "eagcl/sparse.hpp"
#include "eagcl/tensor.hpp"

using namespace eagcl;

TEST_CASE("Tensor construction and element access") {
  Tensor t(2, 3, 1.5);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  CHECK(t(1, 2) == 1.5);
  t(0, 1) = -2.0;
  CHECK(t[1] == -2.0);
}

TEST_CASE("Tensor::from_rows checks the element count") {
  Tensor t = Tensor::from_rows(2, 2, {1, 2, 3, 4});
  CHECK(t(0, 0) == 1);
  CHECK(t(1, 1) == 4);
  CHECK_THROWS_AS(Tensor::from_rows(2, 2, {1, 2, 3}), ContractError);
}

TEST_CASE("Tensor::scalar and item") {
  Tensor s = Tensor::scalar(3.25);
  CHECK(s.rows() == 1);
  CHECK(s.cols() == 1);
  CHECK(s.item() == 3.25);
  Tensor wide(1, 2);
  CHECK_THROWS_AS(wide.item(), ContractError);
}

TEST_CASE("all_finite flags NaN and infinity") {
  Tensor t(2, 2, 1.0);
  CHECK(t.all_finite());
  t(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  t(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("bitwise_equal distinguishes shapes and values") {
  Tensor a = Tensor::from_rows(1, 2, {1.0, 2.0});
  Tensor b = Tensor::from_rows(1, 2, {1.0, 2.0});
  CHECK(a.bitwise_equal(b));
  b(0, 1) = 2.0000000001;
  CHECK_FALSE(a.bitwise_equal(b));
  Tensor c = Tensor::from_rows(2, 1, {1.0, 2.0});
  CHECK_FALSE(a.bitwise_equal(c));
}

TEST_CASE("SparseMatrix finalize merges duplicates and orders rows") {
  SparseMatrix m(3);
  m.add(2, 1, 0.5);
  m.add(0, 1, 1.0);
  m.add(2, 1, 0.25);
  m.finalize();
  CHECK(m.nnz() == 2);
  CHECK(m.at(2, 1) == 0.75);
  CHECK(m.at(0, 1) == 1.0);
  CHECK(m.at(1, 0) == 0.0);
}

TEST_CASE("SparseMatrix rejects out-of-range indices") {
  SparseMatrix m(2);
  CHECK_THROWS_AS(m.add(2, 0, 1.0), ContractError);
  CHECK_THROWS_AS(m.add(0, 2, 1.0), ContractError);
}

TEST_CASE("SparseMatrix multiply matches dense multiplication") {
  SparseMatrix m(3);
  m.add(0, 1, 2.0);
  m.add(1, 0, -1.0);
  m.add(2, 2, 0.5);
  m.add(1, 2, 3.0);
  m.finalize();
  Tensor x = Tensor::from_rows(3, 2, {1, 2, 3, 4, 5, 6});
  Tensor y;
  m.multiply(x, y);

  Tensor dense = m.to_dense();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      double want = 0.0;
      for (std::size_t k = 0; k < 3; ++k) want += dense(r, k) * x(k, c);
      CHECK(y(r, c) == Catch::Approx(want).margin(1e-15));
    }
}

TEST_CASE("multiply_transpose_add accumulates S^T * g") {
  SparseMatrix m(2);
  m.add(0, 1, 2.0);
  m.add(1, 1, 3.0);
  m.finalize();
  Tensor g = Tensor::from_rows(2, 1, {1.0, 10.0});
  Tensor acc(2, 1, 0.5);
  m.multiply_transpose_add(g, acc);
  CHECK(acc(0, 0) == 0.5);                 // no edges into column 0
  CHECK(acc(1, 0) == 0.5 + 2.0 + 30.0);    // 2*1 + 3*10
}

TEST_CASE("triplet dump round-trips through parse") {
  SparseMatrix m(4);
  m.add(0, 3, 0.4472135954999579);
  m.add(3, 0, 0.4472135954999579);
  m.add(1, 2, -1.25);
  m.finalize();
  std::ostringstream os;
  m.dump_triplets(os);
  std::istringstream is(os.str());
  SparseMatrix back = SparseMatrix::parse_triplets(is, 4);
  REQUIRE(back.nnz() == m.nnz());
  for (const auto& t : m.triplets()) CHECK(back.at(t.row, t.col) == t.value);
}

TEST_CASE("parse_triplets rejects malformed lines") {
  std::istringstream is("0 1 notanumber\n");
  CHECK_THROWS_AS(SparseMatrix::parse_triplets(is, 2), DataError);
}
