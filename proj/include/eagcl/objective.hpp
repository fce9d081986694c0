#pragma once

// Per-domain prediction heads and the joint training objective. Each head
// scores every item of its domain from the concatenation of the target
// domain's preference vector with the other domain's,
//
//   y_A = softmax( W_A [H_SA ; H_SB] + b_A ),    y_B analogously,
//
// cross-entropy is averaged over the sequences that actually have a target
// in the domain, and the joint loss is
//
//   L = (L_A + beta * L_s^A) + (L_B + beta * L_s^B).

#include <cstddef>
#include <string>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/dataio.hpp"
#include "eagcl/tape.hpp"

namespace eagcl {

// Probability rows over the target domain's items. h_target / h_other are
// B x 2d preference blocks (target domain first); head_w is items x 4d and
// head_b is 1 x items.
inline Var predict(Tape& tp, Var h_target, Var h_other, Var head_w, Var head_b) {
  const Tensor& ht = tp.value(h_target);
  const Tensor& ho = tp.value(h_other);
  const Tensor& w = tp.value(head_w);
  if (ht.rows() != ho.rows())
    throw ContractError("predict: preference blocks disagree on batch size: " + ht.shape_str() +
                        " vs " + ho.shape_str());
  if (ht.cols() + ho.cols() != w.cols())
    throw ContractError("predict: head expects width " + std::to_string(w.cols()) +
                        ", features have " + std::to_string(ht.cols() + ho.cols()));
  Var feats = tp.hconcat(h_target, h_other);
  Var logits = tp.add_rowvec(tp.matmul(feats, tp.transpose(head_w)), head_b);
  return tp.softmax_rows(logits);
}

// Mean negative log-likelihood of `targets[k]` under probability row
// `rows[k]` of `probs`. Probabilities are floored at 1e-12 before the log so
// a confidently-wrong head yields a large finite loss instead of -inf.
inline Var ce_loss(Tape& tp, Var probs, const std::vector<std::size_t>& rows,
                   const std::vector<std::size_t>& targets) {
  if (rows.size() != targets.size())
    throw ContractError("ce_loss: rows/targets length mismatch");
  if (rows.empty()) return tp.scalar(0.0);
  const Tensor& p = tp.value(probs);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= p.rows() || targets[k] >= p.cols())
      throw ContractError("ce_loss: index (" + std::to_string(rows[k]) + ", " +
                          std::to_string(targets[k]) + ") outside " + p.shape_str());
  }
  Var lp = tp.log(tp.clamp_min(probs, 1e-12));
  Var picked = tp.select_entries(lp, rows, targets);
  return tp.scale(tp.sum_all(picked), -1.0 / static_cast<double>(rows.size()));
}

// (L_A + beta L_s^A) + (L_B + beta L_s^B); the ssl terms already include the
// ssl_reg factor.
inline Var joint_loss(Tape& tp, Var loss_a, Var loss_b, Var ssl_a, Var ssl_b, double beta) {
  if (beta < 0.0) throw ConfigError("joint_loss: beta must be non-negative");
  Var part_a = tp.add(loss_a, tp.scale(ssl_a, beta));
  Var part_b = tp.add(loss_b, tp.scale(ssl_b, beta));
  return tp.add(part_a, part_b);
}

}  // namespace eagcl
