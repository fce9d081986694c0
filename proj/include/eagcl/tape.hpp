#pragma once

// Reverse-mode autodiff over dense matrices. A Tape owns a flat list of
// nodes in topological (creation) order; each op records a closure that
// scatters the output gradient back to its parents. One tape per forward
// pass; parameters enter as leaf nodes and their gradients are read back
// after backward().

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/sparse.hpp"
#include "eagcl/tensor.hpp"

namespace eagcl {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // When set, every op output is scanned for NaN/Inf and trips NumericError.
  bool check_finite = true;

  std::size_t num_nodes() const { return nodes_.size(); }

  Var leaf(Tensor t, bool requires_grad = true) {
    return push(std::move(t), requires_grad, nullptr, "leaf");
  }

  Var constant(Tensor t) { return push(std::move(t), false, nullptr, "constant"); }

  Var zeros(std::size_t rows, std::size_t cols) { return constant(Tensor(rows, cols)); }

  Var scalar(double v) { return constant(Tensor::scalar(v)); }

  const Tensor& value(Var v) const { return node(v).value; }

  const Tensor& grad(Var v) const {
    const Node& n = node(v);
    if (!n.requires_grad) throw ContractError("grad requested for a non-differentiable node");
    return n.grad;
  }

  // -------------------------------------------------------------------------
  // Elementwise and broadcast arithmetic
  // -------------------------------------------------------------------------

  Var add(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    check_same_shape(x, y, "add");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& tp, const Tensor& g, Var) {
                  tp.accumulate(a, g);
                  tp.accumulate(b, g);
                },
                "add");
  }

  Var sub(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    check_same_shape(x, y, "sub");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& tp, const Tensor& g, Var) {
                  tp.accumulate(a, g);
                  if (tp.needs(b)) {
                    Tensor neg = g;
                    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
                    tp.accumulate(b, neg);
                  }
                },
                "sub");
  }

  Var mul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    check_same_shape(x, y, "mul");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& tp, const Tensor& g, Var) {
                  if (tp.needs(a)) {
                    Tensor ga = g;
                    const Tensor& yv = tp.value(b);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= yv[i];
                    tp.accumulate(a, ga);
                  }
                  if (tp.needs(b)) {
                    Tensor gb = g;
                    const Tensor& xv = tp.value(a);
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= xv[i];
                    tp.accumulate(b, gb);
                  }
                },
                "mul");
  }

  Var scale(Var a, double c) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return push(std::move(out), needs(a),
                [a, c](Tape& tp, const Tensor& g, Var) {
                  Tensor ga = g;
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= c;
                  tp.accumulate(a, ga);
                },
                "scale");
  }

  // M (n x c) + v (1 x c) broadcast over rows.
  Var add_rowvec(Var m, Var v) {
    const Tensor& x = value(m);
    const Tensor& r = value(v);
    if (r.rows() != 1 || r.cols() != x.cols())
      throw ContractError("add_rowvec: shape mismatch " + x.shape_str() + " vs " + r.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += r(0, j);
    return push(std::move(out), needs(m) || needs(v),
                [m, v](Tape& tp, const Tensor& g, Var) {
                  tp.accumulate(m, g);
                  if (tp.needs(v)) {
                    Tensor gv(1, g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < g.cols(); ++j) gv(0, j) += g(i, j);
                    tp.accumulate(v, gv);
                  }
                },
                "add_rowvec");
  }

  // Row i of M divided by c[i]; c is (n x 1).
  Var div_colvec(Var m, Var c) {
    const Tensor& x = value(m);
    const Tensor& d = value(c);
    if (d.rows() != x.rows() || d.cols() != 1)
      throw ContractError("div_colvec: shape mismatch " + x.shape_str() + " vs " + d.shape_str());
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double inv = 1.0 / d(i, 0);
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) *= inv;
    }
    return push(std::move(out), needs(m) || needs(c),
                [m, c](Tape& tp, const Tensor& g, Var self) {
                  const Tensor& d = tp.value(c);
                  if (tp.needs(m)) {
                    Tensor gm = g;
                    for (std::size_t i = 0; i < gm.rows(); ++i) {
                      double inv = 1.0 / d(i, 0);
                      for (std::size_t j = 0; j < gm.cols(); ++j) gm(i, j) *= inv;
                    }
                    tp.accumulate(m, gm);
                  }
                  if (tp.needs(c)) {
                    const Tensor& y = tp.value(self);
                    Tensor gc(g.rows(), 1);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      double s = 0.0;
                      for (std::size_t j = 0; j < g.cols(); ++j) s += g(i, j) * y(i, j);
                      gc(i, 0) = -s / d(i, 0);
                    }
                    tp.accumulate(c, gc);
                  }
                },
                "div_colvec");
  }

  // -------------------------------------------------------------------------
  // Linear algebra
  // -------------------------------------------------------------------------

  Var matmul(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.cols() != y.rows())
      throw ContractError("matmul: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out = dense_matmul(x, y);
    return push(std::move(out), needs(a) || needs(b),
                [a, b](Tape& tp, const Tensor& g, Var) {
                  if (tp.needs(a)) tp.accumulate(a, matmul_nt(g, tp.value(b)));
                  if (tp.needs(b)) tp.accumulate(b, matmul_tn(tp.value(a), g));
                },
                "matmul");
  }

  Var transpose(Var a) {
    const Tensor& x = value(a);
    Tensor out(x.cols(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  Tensor gt(g.cols(), g.rows());
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) gt(j, i) = g(i, j);
                  tp.accumulate(a, gt);
                },
                "transpose");
  }

  // Sparse constant matrix times dense var. The caller keeps `s` alive for
  // the lifetime of the tape.
  Var spmm(const SparseMatrix& s, Var a) {
    Tensor out;
    s.multiply(value(a), out);
    const SparseMatrix* sp = &s;
    return push(std::move(out), needs(a),
                [a, sp](Tape& tp, const Tensor& g, Var) {
                  if (!tp.needs(a)) return;
                  Tensor ga(g.rows(), g.cols());
                  sp->multiply_transpose_add(g, ga);
                  tp.accumulate(a, ga);
                },
                "spmm");
  }

  // -------------------------------------------------------------------------
  // Nonlinearities
  // -------------------------------------------------------------------------

  Var leaky_relu(Var a, double slope) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] < 0.0) out[i] *= slope;
    return push(std::move(out), needs(a),
                [a, slope](Tape& tp, const Tensor& g, Var) {
                  Tensor ga = g;
                  const Tensor& x = tp.value(a);
                  for (std::size_t i = 0; i < ga.size(); ++i)
                    if (x[i] < 0.0) ga[i] *= slope;
                  tp.accumulate(a, ga);
                },
                "leaky_relu");
  }

  Var sigmoid(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var self) {
                  Tensor ga = g;
                  const Tensor& y = tp.value(self);
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
                  tp.accumulate(a, ga);
                },
                "sigmoid");
  }

  Var exp(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var self) {
                  Tensor ga = g;
                  const Tensor& y = tp.value(self);
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i];
                  tp.accumulate(a, ga);
                },
                "exp");
  }

  Var log(Var a) {
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  Tensor ga = g;
                  const Tensor& x = tp.value(a);
                  for (std::size_t i = 0; i < ga.size(); ++i) ga[i] /= x[i];
                  tp.accumulate(a, ga);
                },
                "log");
  }

  // max(x, floor); the gradient passes where x >= floor.
  Var clamp_min(Var a, double floor) {
    Tensor out = value(a);
    bool clamped = false;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] < floor) {
        out[i] = floor;
        clamped = true;
      }
    if (clamped) push_warning("clamp_min: values clamped to " + std::to_string(floor));
    return push(std::move(out), needs(a),
                [a, floor](Tape& tp, const Tensor& g, Var) {
                  Tensor ga = g;
                  const Tensor& x = tp.value(a);
                  for (std::size_t i = 0; i < ga.size(); ++i)
                    if (x[i] < floor) ga[i] = 0.0;
                  tp.accumulate(a, ga);
                },
                "clamp_min");
  }

  // -------------------------------------------------------------------------
  // Row-structured ops
  // -------------------------------------------------------------------------

  Var softmax_rows(Var a) {
    const Tensor& x = value(a);
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double mx = x(i, 0);
      for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) {
        out(i, j) = std::exp(x(i, j) - mx);
        z += out(i, j);
      }
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= z;
    }
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var self) {
                  const Tensor& y = tp.value(self);
                  Tensor ga(g.rows(), g.cols());
                  for (std::size_t i = 0; i < g.rows(); ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
                    for (std::size_t j = 0; j < g.cols(); ++j)
                      ga(i, j) = y(i, j) * (g(i, j) - dot);
                  }
                  tp.accumulate(a, ga);
                },
                "softmax_rows");
  }

  // (n x c) -> (n x 1), L_i = log sum_j exp(x_ij), computed stably.
  Var logsumexp_rows(Var a) {
    const Tensor& x = value(a);
    Tensor out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double mx = x(i, 0);
      for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, x(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) z += std::exp(x(i, j) - mx);
      out(i, 0) = mx + std::log(z);
    }
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var self) {
                  const Tensor& x = tp.value(a);
                  const Tensor& lse = tp.value(self);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t i = 0; i < x.rows(); ++i)
                    for (std::size_t j = 0; j < x.cols(); ++j)
                      ga(i, j) = g(i, 0) * std::exp(x(i, j) - lse(i, 0));
                  tp.accumulate(a, ga);
                },
                "logsumexp_rows");
  }

  // Rows scaled to unit L2 norm with an epsilon guard: y_i = x_i/(|x_i|+eps).
  // Exactly-zero rows produce zero output, a warning, and a zero gradient.
  Var normalize_rows(Var a, double eps = 1e-12) {
    const Tensor& x = value(a);
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double nrm = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) nrm += x(i, j) * x(i, j);
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) push_warning("normalize_rows: zero-norm row " + std::to_string(i));
      double inv = 1.0 / (nrm + eps);
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) *= inv;
    }
    return push(std::move(out), needs(a),
                [a, eps](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t i = 0; i < x.rows(); ++i) {
                    double nrm = 0.0, dot = 0.0;
                    for (std::size_t j = 0; j < x.cols(); ++j) nrm += x(i, j) * x(i, j);
                    nrm = std::sqrt(nrm);
                    if (nrm == 0.0) continue;
                    double n = nrm + eps;
                    for (std::size_t j = 0; j < x.cols(); ++j) dot += g(i, j) * x(i, j);
                    double coef = dot / (n * n * nrm);
                    for (std::size_t j = 0; j < x.cols(); ++j)
                      ga(i, j) = g(i, j) / n - x(i, j) * coef;
                  }
                  tp.accumulate(a, ga);
                },
                "normalize_rows");
  }

  // -------------------------------------------------------------------------
  // Reductions
  // -------------------------------------------------------------------------

  Var sum_all(Var a) {
    const Tensor& x = value(a);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
    return push(Tensor::scalar(s), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols(), g.item());
                  tp.accumulate(a, ga);
                },
                "sum_all");
  }

  Var mean_all(Var a) {
    const Tensor& x = value(a);
    if (x.size() == 0) throw ContractError("mean_all of empty tensor");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i];
    return push(Tensor::scalar(s / static_cast<double>(x.size())), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols(), g.item() / static_cast<double>(x.size()));
                  tp.accumulate(a, ga);
                },
                "mean_all");
  }

  Var sum_rows(Var a) {
    const Tensor& x = value(a);
    Tensor out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, 0) += x(i, j);
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t i = 0; i < x.rows(); ++i)
                    for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) = g(i, 0);
                  tp.accumulate(a, ga);
                },
                "sum_rows");
  }

  Var mean_rows(Var a) {
    const Tensor& x = value(a);
    if (x.rows() == 0) throw ContractError("mean_rows of empty tensor");
    Tensor out(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
    double inv = 1.0 / static_cast<double>(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) *= inv;
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  double inv = 1.0 / static_cast<double>(x.rows());
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t i = 0; i < x.rows(); ++i)
                    for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) = g(0, j) * inv;
                  tp.accumulate(a, ga);
                },
                "mean_rows");
  }

  // -------------------------------------------------------------------------
  // Shape and indexing
  // -------------------------------------------------------------------------

  Var gather_rows(Var a, std::vector<std::size_t> idx) {
    const Tensor& x = value(a);
    Tensor out(idx.size(), x.cols());
    for (std::size_t t = 0; t < idx.size(); ++t) {
      if (idx[t] >= x.rows())
        throw ContractError("gather_rows: index " + std::to_string(idx[t]) +
                            " out of range for " + x.shape_str());
      for (std::size_t j = 0; j < x.cols(); ++j) out(t, j) = x(idx[t], j);
    }
    return push(std::move(out), needs(a),
                [a, idx = std::move(idx)](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t t = 0; t < idx.size(); ++t)
                    for (std::size_t j = 0; j < g.cols(); ++j) ga(idx[t], j) += g(t, j);
                  tp.accumulate(a, ga);
                },
                "gather_rows");
  }

  Var hconcat(Var a, Var b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.rows() != y.rows())
      throw ContractError("hconcat: shape mismatch " + x.shape_str() + " vs " + y.shape_str());
    Tensor out(x.rows(), x.cols() + y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) out(i, x.cols() + j) = y(i, j);
    }
    std::size_t ca = x.cols();
    return push(std::move(out), needs(a) || needs(b),
                [a, b, ca](Tape& tp, const Tensor& g, Var) {
                  if (tp.needs(a)) {
                    Tensor ga(g.rows(), ca);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < ca; ++j) ga(i, j) = g(i, j);
                    tp.accumulate(a, ga);
                  }
                  if (tp.needs(b)) {
                    Tensor gb(g.rows(), g.cols() - ca);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = ca; j < g.cols(); ++j) gb(i, j - ca) = g(i, j);
                    tp.accumulate(b, gb);
                  }
                },
                "hconcat");
  }

  Var vstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("vstack of zero parts");
    std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (t.cols() != cols)
        throw ContractError("vstack: shape mismatch " + t.shape_str() + " vs cols " +
                            std::to_string(cols));
      rows += t.rows();
    }
    Tensor out(rows, cols);
    std::size_t r = 0;
    bool any = false;
    for (Var p : parts) {
      const Tensor& t = value(p);
      for (std::size_t i = 0; i < t.rows(); ++i, ++r)
        for (std::size_t j = 0; j < cols; ++j) out(r, j) = t(i, j);
      any = any || needs(p);
    }
    return push(std::move(out), any,
                [parts](Tape& tp, const Tensor& g, Var) {
                  std::size_t r = 0;
                  for (Var p : parts) {
                    const Tensor& t = tp.value(p);
                    if (tp.needs(p)) {
                      Tensor gp(t.rows(), t.cols());
                      for (std::size_t i = 0; i < t.rows(); ++i)
                        for (std::size_t j = 0; j < t.cols(); ++j) gp(i, j) = g(r + i, j);
                      tp.accumulate(p, gp);
                    }
                    r += t.rows();
                  }
                },
                "vstack");
  }

  Var diag(Var a) {
    const Tensor& x = value(a);
    if (x.rows() != x.cols()) throw ContractError("diag of non-square " + x.shape_str());
    Tensor out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, 0) = x(i, i);
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t i = 0; i < x.rows(); ++i) ga(i, i) = g(i, 0);
                  tp.accumulate(a, ga);
                },
                "diag");
  }

  // out[t] = a(rows[t], cols[t]); gradient scatters back with accumulation.
  Var select_entries(Var a, std::vector<std::size_t> rows, std::vector<std::size_t> cols) {
    if (rows.size() != cols.size()) throw ContractError("select_entries: index length mismatch");
    const Tensor& x = value(a);
    Tensor out(rows.size(), 1);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t] >= x.rows() || cols[t] >= x.cols())
        throw ContractError("select_entries: index out of range for " + x.shape_str());
      out(t, 0) = x(rows[t], cols[t]);
    }
    return push(std::move(out), needs(a),
                [a, rows = std::move(rows), cols = std::move(cols)](Tape& tp, const Tensor& g,
                                                                    Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga(x.rows(), x.cols());
                  for (std::size_t t = 0; t < rows.size(); ++t) ga(rows[t], cols[t]) += g(t, 0);
                  tp.accumulate(a, ga);
                },
                "select_entries");
  }

  Var reshape(Var a, std::size_t rows, std::size_t cols) {
    const Tensor& x = value(a);
    if (x.size() != rows * cols)
      throw ContractError("reshape: " + x.shape_str() + " to " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    Tensor out = Tensor::from_rows(rows, cols, x.values());
    return push(std::move(out), needs(a),
                [a](Tape& tp, const Tensor& g, Var) {
                  const Tensor& x = tp.value(a);
                  Tensor ga = Tensor::from_rows(x.rows(), x.cols(), g.values());
                  tp.accumulate(a, ga);
                },
                "reshape");
  }

  // -------------------------------------------------------------------------
  // Dropout: identity in inference mode, inverted scaling 1/(1-rate) in
  // training mode. The mask is drawn deterministically from the seed.
  // -------------------------------------------------------------------------

  Var dropout(Var a, double rate, bool train, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must be in [0,1)");
    if (!train || rate == 0.0) return a;
    const Tensor& x = value(a);
    Rng rng(seed);
    auto mask = std::make_shared<std::vector<std::uint8_t>>(x.size());
    double inv = 1.0 / (1.0 - rate);
    Tensor out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool keep = rng.next_double() >= rate;
      (*mask)[i] = keep ? 1 : 0;
      out[i] = keep ? x[i] * inv : 0.0;
    }
    return push(std::move(out), needs(a),
                [a, mask, inv](Tape& tp, const Tensor& g, Var) {
                  Tensor ga = g;
                  for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] = (*mask)[i] ? ga[i] * inv : 0.0;
                  tp.accumulate(a, ga);
                },
                "dropout");
  }

  // -------------------------------------------------------------------------
  // Backward
  // -------------------------------------------------------------------------

  void backward(Var root) {
    const Node& r = node(root);
    if (r.value.size() != 1) throw ContractError("backward root must be scalar, got " +
                                                 r.value.shape_str());
    if (!r.requires_grad)
      throw ContractError("backward root does not depend on any differentiable leaf");
    for (Node& n : nodes_) {
      if (n.requires_grad) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
      }
    }
    nodes_[root.id].grad[0] = 1.0;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.backward) n.backward(*this, n.grad, Var{i});
    }
  }

  bool needs(Var v) const { return node(v).requires_grad; }

  void accumulate(Var v, const Tensor& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    check_same_shape(n.grad, g, "grad accumulate");
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }

  static Tensor dense_matmul(const Tensor& a, const Tensor& b) {
    Tensor out(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
      const double* ar = a.data() + i * k;
      double* or_ = out.data() + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ar[p];
        if (av == 0.0) continue;
        const double* br = b.data() + p * m;
        for (std::size_t j = 0; j < m; ++j) or_[j] += av * br[j];
      }
    }
    return out;
  }

 private:
  using BackwardFn = std::function<void(Tape&, const Tensor&, Var)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  // g * b^T
  static Tensor matmul_nt(const Tensor& g, const Tensor& b) {
    Tensor out(g.rows(), b.rows());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < b.rows(); ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < g.cols(); ++p) s += g(i, p) * b(j, p);
        out(i, j) = s;
      }
    return out;
  }

  // a^T * g
  static Tensor matmul_tn(const Tensor& a, const Tensor& g) {
    Tensor out(a.cols(), g.cols());
    for (std::size_t p = 0; p < a.rows(); ++p) {
      const double* ar = a.data() + p * a.cols();
      const double* gr = g.data() + p * g.cols();
      for (std::size_t i = 0; i < a.cols(); ++i) {
        const double av = ar[i];
        if (av == 0.0) continue;
        double* or_ = out.data() + i * g.cols();
        for (std::size_t j = 0; j < g.cols(); ++j) or_[j] += av * gr[j];
      }
    }
    return out;
  }

  const Node& node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
      throw ContractError("invalid tape var");
    return nodes_[v.id];
  }

  Var push(Tensor value, bool requires_grad, BackwardFn fn, const char* op) {
    if (check_finite && !value.all_finite())
      throw NumericError(std::string("non-finite values in output of op '") + op + "'");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
};

}  // namespace eagcl
