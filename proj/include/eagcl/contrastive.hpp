#pragma once

// InfoNCE contrastive loss between two augmented-view encodings. Positive
// pairs are the same node under the two views, negatives are all other nodes
// of the same type in the batch, similarity is cosine with temperature tau:
//
//   L = sum_i -log  exp(cos(z1_i, z2_i)/tau) / sum_j exp(cos(z1_i, z2_j)/tau)

#include <string>

#include "eagcl/cdsgraph.hpp"
#include "eagcl/common.hpp"
#include "eagcl/gnn.hpp"
#include "eagcl/tape.hpp"

namespace eagcl {

// z1, z2: N x d encodings of the same N nodes under two views. Returns the
// scalar sum over rows (a single row gives exactly zero: its positive is the
// only candidate).
inline Var info_nce(Tape& tp, Var z1, Var z2, double tau) {
  if (tau <= 0.0) throw ConfigError("info_nce: tau must be positive, got " + std::to_string(tau));
  const Tensor& a = tp.value(z1);
  const Tensor& b = tp.value(z2);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError("info_nce: view shapes differ: " + a.shape_str() + " vs " + b.shape_str());
  if (a.rows() == 0) throw ContractError("info_nce: empty encodings");
  Var n1 = tp.normalize_rows(z1);
  Var n2 = tp.normalize_rows(z2);
  Var sim = tp.scale(tp.matmul(n1, tp.transpose(n2)), 1.0 / tau);  // N x N
  Var lse = tp.logsumexp_rows(sim);                                // N x 1
  Var pos = tp.diag(sim);                                          // N x 1
  return tp.sum_all(tp.sub(lse, pos));
}

struct SslLosses {
  Var a;             // contrastive loss over domain-A item nodes (already scaled by ssl_reg)
  Var b;             // same for domain-B item nodes
  bool b_empty = false;  // batch had no B items; `b` is a constant zero
};

// Item-node contrastive losses for a pair of view encodings that share the
// node index `g`. Both losses carry the ssl_reg factor so callers can add
// them into the objective directly.
inline SslLosses ssl_losses(Tape& tp, const CdsGraph& g, const EncodeResult& v1,
                            const EncodeResult& v2, double tau, double ssl_reg) {
  if (ssl_reg < 0.0) throw ConfigError("ssl_losses: ssl_reg must be non-negative");
  SslLosses out;
  out.a = tp.scale(info_nce(tp, slice_a_rows(tp, g, v1.nodes), slice_a_rows(tp, g, v2.nodes), tau),
                   ssl_reg);
  if (g.b_count() == 0) {
    out.b = tp.scalar(0.0);
    out.b_empty = true;
    push_warning("ssl_losses: batch has no domain-B items; L_s^B = 0");
  } else {
    out.b = tp.scale(
        info_nce(tp, slice_b_rows(tp, g, v1.nodes), slice_b_rows(tp, g, v2.nodes), tau), ssl_reg);
  }
  return out;
}

}  // namespace eagcl
