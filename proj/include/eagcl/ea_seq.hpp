#pragma once

// External-attention sequence encoder. Pairwise relevance of sequence items
// comes from a small shared MLP over the elementwise product of their
// embeddings,
//
//   f(i, j) = W2^T leaky_relu( W1 (e_i (.) e_j) + b ),
//
// attention rows are normalized either with a plain row softmax or with the
// sqrt-scaled variant  A[i,j] = exp(f_ij) / sum_k exp(f_ik / 2), and the
// sequence representation is the mean of the attended item vectors.

#include <string>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/model.hpp"
#include "eagcl/tape.hpp"

namespace eagcl {

enum class AttentionMode { Softmax, SqrtScaled };

inline AttentionMode attention_mode_from_string(const std::string& s) {
  if (s == "softmax") return AttentionMode::Softmax;
  if (s == "sqrt") return AttentionMode::SqrtScaled;
  throw ConfigError("unknown attention mode '" + s + "' (expected softmax|sqrt)");
}

// Relevance score for one ordered pair of 1 x d item embeddings; 1 x 1.
inline Var pair_score(Tape& tp, Var e_i, Var e_j, const EaVars& ea, double slope) {
  const Tensor& a = tp.value(e_i);
  const Tensor& b = tp.value(e_j);
  if (a.rows() != 1 || b.rows() != 1 || a.cols() != b.cols())
    throw ContractError("pair_score: expected two 1 x d rows, got " + a.shape_str() + " and " +
                        b.shape_str());
  Var prod = tp.mul(e_i, e_j);
  Var hidden = tp.leaky_relu(tp.add_rowvec(tp.matmul(prod, tp.transpose(ea.w1)), ea.b), slope);
  return tp.matmul(hidden, ea.w2);
}

// Unnormalized score matrix F (L x L) for an L x d item block, computed for
// all pairs at once through the same MLP as pair_score.
inline Var score_matrix(Tape& tp, Var items, const EaVars& ea, double slope) {
  const Tensor& t = tp.value(items);
  const std::size_t L = t.rows();
  if (L == 0) throw ContractError("score_matrix: empty sequence");
  std::vector<std::size_t> rep_i(L * L), rep_j(L * L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      rep_i[i * L + j] = i;
      rep_j[i * L + j] = j;
    }
  Var prod = tp.mul(tp.gather_rows(items, rep_i), tp.gather_rows(items, rep_j));  // L^2 x d
  Var hidden = tp.leaky_relu(tp.add_rowvec(tp.matmul(prod, tp.transpose(ea.w1)), ea.b), slope);
  return tp.reshape(tp.matmul(hidden, ea.w2), L, L);
}

// Row-normalized attention matrix.
inline Var attention_matrix(Tape& tp, Var scores, AttentionMode mode) {
  if (mode == AttentionMode::Softmax) return tp.softmax_rows(scores);
  // exp(F) over row sums of exp(F / 2)
  Var num = tp.exp(scores);
  Var denom = tp.sum_rows(tp.exp(tp.scale(scores, 0.5)));
  return tp.div_colvec(num, denom);
}

// Sequence representation h_S (1 x d) for an L x d block of item embeddings,
// L >= 1. With zero MLP weights every score is 0, so softmax attention
// reduces to the plain mean of the item vectors.
inline Var attend_sequence(Tape& tp, Var items, const EaVars& ea, AttentionMode mode,
                           double slope) {
  Var scores = score_matrix(tp, items, ea, slope);
  Var attn = attention_matrix(tp, scores, mode);
  return tp.mean_rows(tp.matmul(attn, items));
}

// Mean pooling over the item block; the encoder used when external attention
// is ablated away.
inline Var mean_pool_sequence(Tape& tp, Var items) {
  const Tensor& t = tp.value(items);
  if (t.rows() == 0) throw ContractError("mean_pool_sequence: empty sequence");
  return tp.mean_rows(items);
}

// Final per-domain preference vector [h_S ; e_u], 1 x 2d.
inline Var build_preference(Tape& tp, Var h_seq, Var e_user) {
  const Tensor& h = tp.value(h_seq);
  const Tensor& u = tp.value(e_user);
  if (h.rows() != 1 || u.rows() != 1)
    throw ContractError("build_preference: expected 1 x d rows, got " + h.shape_str() + " and " +
                        u.shape_str());
  if (h.cols() != u.cols())
    throw ContractError("build_preference: width mismatch: " + h.shape_str() + " vs " +
                        u.shape_str());
  return tp.hconcat(h_seq, e_user);
}

}  // namespace eagcl
