#pragma once

// Square sparse matrix in triplet form with a CSR index, used for the
// per-batch graph adjacency. Values are immutable once finalize() runs; the
// autodiff tape treats these as constants.

#include <algorithm>
#include <cstddef>
#include <iostream>
#include <sstream>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/tensor.hpp"

namespace eagcl {

class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row, col;
    double value;
  };

  SparseMatrix() : n_(0) {}
  explicit SparseMatrix(std::size_t n) : n_(n) {}

  std::size_t side() const { return n_; }
  std::size_t nnz() const { return triplets_.size(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  void add(std::size_t row, std::size_t col, double value) {
    if (row >= n_ || col >= n_) throw ContractError("SparseMatrix::add: index out of range");
    triplets_.push_back({row, col, value});
  }

  // Sort triplets row-major and build the CSR row index. Duplicate (row,col)
  // pairs are collapsed by summation.
  void finalize() {
    std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Triplet> merged;
    merged.reserve(triplets_.size());
    for (const Triplet& t : triplets_) {
      if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
        merged.back().value += t.value;
      else
        merged.push_back(t);
    }
    triplets_ = std::move(merged);
    row_start_.assign(n_ + 1, 0);
    for (const Triplet& t : triplets_) ++row_start_[t.row + 1];
    for (std::size_t r = 0; r < n_; ++r) row_start_[r + 1] += row_start_[r];
  }

  double at(std::size_t row, std::size_t col) const {
    for (std::size_t k = row_start_[row]; k < row_start_[row + 1]; ++k)
      if (triplets_[k].col == col) return triplets_[k].value;
    return 0.0;
  }

  // y = S * x, x dense (n x d).
  void multiply(const Tensor& x, Tensor& y) const {
    if (x.rows() != n_) throw ContractError("SparseMatrix::multiply: operand has " +
                                            x.shape_str() + " rows, matrix side is " +
                                            std::to_string(n_));
    y = Tensor(n_, x.cols());
    const std::size_t d = x.cols();
    for (const Triplet& t : triplets_) {
      const double v = t.value;
      const double* xr = x.data() + t.col * d;
      double* yr = y.data() + t.row * d;
      for (std::size_t j = 0; j < d; ++j) yr[j] += v * xr[j];
    }
  }

  // g_x += S^T * g_y (used by the tape's backward pass).
  void multiply_transpose_add(const Tensor& gy, Tensor& gx) const {
    const std::size_t d = gy.cols();
    for (const Triplet& t : triplets_) {
      const double v = t.value;
      const double* gr = gy.data() + t.row * d;
      double* xr = gx.data() + t.col * d;
      for (std::size_t j = 0; j < d; ++j) xr[j] += v * gr[j];
    }
  }

  Tensor to_dense() const {
    Tensor m(n_, n_);
    for (const Triplet& t : triplets_) m(t.row, t.col) += t.value;
    return m;
  }

  // Plain-text triplet dump, one "row col value" line per nonzero.
  void dump_triplets(std::ostream& os) const {
    os.precision(17);
    for (const Triplet& t : triplets_) os << t.row << ' ' << t.col << ' ' << t.value << '\n';
  }

  static SparseMatrix parse_triplets(std::istream& is, std::size_t side) {
    SparseMatrix m(side);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::size_t r, c;
      double v;
      if (!(ls >> r >> c >> v)) throw DataError("bad triplet line: " + line);
      m.add(r, c, v);
    }
    m.finalize();
    return m;
  }

 private:
  std::size_t n_;
  std::vector<Triplet> triplets_;
  std::vector<std::size_t> row_start_;
};

}  // namespace eagcl
