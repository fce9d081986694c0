#pragma once

// Graph propagation over the batch CDS matrix. Each layer computes
//   z = act( (M + I) e W1  +  (M e) (.) (e W2) )
// with an optional message-dropout in training mode, and the final node
// representation is the elementwise mean of the layer outputs (layers 1..s;
// the input embedding itself is not part of the readout).

#include <cstdint>
#include <vector>

#include "eagcl/cdsgraph.hpp"
#include "eagcl/common.hpp"
#include "eagcl/model.hpp"
#include "eagcl/sparse.hpp"
#include "eagcl/tape.hpp"

namespace eagcl {

enum class Activation { LeakyRelu, Identity };

struct PropagationConfig {
  Activation activation = Activation::LeakyRelu;
  double leaky_slope = 0.2;
  double dropout_rate = 0.1;
  bool train = false;
  std::uint64_t dropout_seed = 0;
};

// One propagation step. `e` is (nodes x d); M must be square over the same
// node set. Dropout (if any) is applied to the layer output.
inline Var propagate_layer(Tape& tp, const SparseMatrix& M, Var e, Var w1, Var w2,
                           const PropagationConfig& cfg, std::size_t layer_index = 0) {
  if (M.side() != tp.value(e).rows())
    throw ContractError("propagate_layer: graph has " + std::to_string(M.side()) +
                        " nodes but embeddings have " + std::to_string(tp.value(e).rows()) +
                        " rows");
  Var agg = tp.spmm(M, e);                       // M e
  Var affine = tp.matmul(tp.add(agg, e), w1);    // (M e + e) W1
  Var gated = tp.mul(agg, tp.matmul(e, w2));     // (M e) (.) (e W2)
  Var z = tp.add(affine, gated);
  if (cfg.activation == Activation::LeakyRelu) z = tp.leaky_relu(z, cfg.leaky_slope);
  if (cfg.train && cfg.dropout_rate > 0.0)
    z = tp.dropout(z, cfg.dropout_rate, true, derive_seed(cfg.dropout_seed, "prop-drop", layer_index));
  return z;
}

// Elementwise mean over the per-layer outputs.
inline Var readout(Tape& tp, const std::vector<Var>& layer_outputs) {
  if (layer_outputs.empty()) throw ContractError("readout: no layer outputs");
  Var acc = layer_outputs[0];
  for (std::size_t l = 1; l < layer_outputs.size(); ++l) acc = tp.add(acc, layer_outputs[l]);
  return tp.scale(acc, 1.0 / static_cast<double>(layer_outputs.size()));
}

struct EncodeResult {
  Var nodes;                    // (a+u+b) x d readout, rows in graph-local order
  std::vector<Var> layers;      // per-layer outputs (same shape)
  Var input;                    // gathered layer-0 embeddings
};

// Runs s propagation layers over `M` (either the clean batch matrix or an
// augmented view sharing the same node index `g`) starting from rows of the
// global embedding table.
inline EncodeResult encode(Tape& tp, const CdsGraph& g, const SparseMatrix& M, Var embedding,
                           const std::vector<Var>& w1, const std::vector<Var>& w2,
                           const ModelSizes& sz, const PropagationConfig& cfg) {
  if (w1.size() != w2.size() || w1.empty())
    throw ContractError("encode: need one (W1, W2) pair per layer");
  if (M.side() != g.side())
    throw ContractError("encode: matrix side does not match graph index");
  std::vector<std::size_t> rows;
  rows.reserve(g.side());
  for (int a : g.a_items) rows.push_back(sz.row_of_a(a));
  for (int u : g.users) rows.push_back(sz.row_of_user(u));
  for (int b : g.b_items) rows.push_back(sz.row_of_b(b));
  EncodeResult res;
  res.input = tp.gather_rows(embedding, rows);
  Var e = res.input;
  for (std::size_t l = 0; l < w1.size(); ++l) {
    e = propagate_layer(tp, M, e, w1[l], w2[l], cfg, l);
    res.layers.push_back(e);
  }
  res.nodes = readout(tp, res.layers);
  return res;
}

// Convenience slices of the readout in graph-local order.
inline Var slice_a_rows(Tape& tp, const CdsGraph& g, Var nodes) {
  std::vector<std::size_t> idx(g.a_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = g.a_node(i);
  return tp.gather_rows(nodes, idx);
}

inline Var slice_user_rows(Tape& tp, const CdsGraph& g, Var nodes) {
  std::vector<std::size_t> idx(g.user_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = g.user_node(i);
  return tp.gather_rows(nodes, idx);
}

inline Var slice_b_rows(Tape& tp, const CdsGraph& g, Var nodes) {
  std::vector<std::size_t> idx(g.b_count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = g.b_node(i);
  return tp.gather_rows(nodes, idx);
}

}  // namespace eagcl
