#pragma once

// Per-batch cross-domain sequential graph: a block adjacency over
// (A-items, users, B-items) with positional edge weights q/L and degree
// normalization, plus the two structure perturbations (item dropout and
// sequence reorder) used to generate contrastive views. Only the domain-A
// blocks are ever perturbed; B-item rows and columns of a view are bitwise
// identical to the original matrix.

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/dataio.hpp"
#include "eagcl/sparse.hpp"

namespace eagcl {

enum class GraphNorm { Symmetric, Row };

struct CdsGraph {
  SparseMatrix matrix;
  GraphNorm norm = GraphNorm::Symmetric;
  // Node order inside the matrix: A-items, then users, then B-items.
  std::vector<int> a_items, users, b_items;  // local index -> global id
  std::unordered_map<int, std::size_t> a_index, u_index, b_index;

  std::size_t a_count() const { return a_items.size(); }
  std::size_t user_count() const { return users.size(); }
  std::size_t b_count() const { return b_items.size(); }
  std::size_t side() const { return a_count() + user_count() + b_count(); }

  std::size_t a_node(std::size_t local) const { return local; }
  std::size_t user_node(std::size_t local) const { return a_count() + local; }
  std::size_t b_node(std::size_t local) const { return a_count() + user_count() + local; }

  std::size_t local_a(int global) const { return a_index.at(global); }
  std::size_t local_user(int global) const { return u_index.at(global); }
  std::size_t local_b(int global) const { return b_index.at(global); }
};

enum class AugmentationKind { ItemDropout, SequenceReorder };

struct PerturbationRecord {
  int user;
  int item;  // global domain-A item id
  char action;  // 'D' dropped, 'M' moved to end
};

// The 0/1 mask realizing item dropout: entries exist only in the A-item/user
// blocks, value 1 on surviving edges (dropped edges are absent).
struct MaskingMatrix {
  SparseMatrix q;
  std::vector<PerturbationRecord> log;
};

struct AugmentedView {
  SparseMatrix matrix;
  AugmentationKind kind;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<PerturbationRecord> log;
};

namespace detail {

// (item_local, user_local) -> accumulated positional weight q/L. Ordered maps
// keep every downstream summation deterministic.
using EdgeMap = std::map<std::pair<std::size_t, std::size_t>, double>;

struct RawWeights {
  EdgeMap a, b;
};

inline void accumulate_positional(EdgeMap& edges, const std::vector<int>& items,
                                  std::size_t user_local,
                                  const std::unordered_map<int, std::size_t>& item_index) {
  const double len = static_cast<double>(items.size());
  for (std::size_t q = 0; q < items.size(); ++q) {
    std::size_t loc = item_index.at(items[q]);
    edges[{loc, user_local}] += static_cast<double>(q + 1) / len;
  }
}

inline RawWeights collect_raw_weights(const CdsGraph& g,
                                      const std::vector<HybridSequence>& batch) {
  RawWeights raw;
  for (const HybridSequence& s : batch) {
    std::size_t u = g.local_user(s.user);
    accumulate_positional(raw.a, s.items_in(Domain::A), u, g.a_index);
    accumulate_positional(raw.b, s.items_in(Domain::B), u, g.b_index);
  }
  return raw;
}

struct Degrees {
  std::vector<double> a, u, b;
};

inline Degrees compute_degrees(const CdsGraph& g, const RawWeights& raw) {
  Degrees deg;
  deg.a.assign(g.a_count(), 0.0);
  deg.u.assign(g.user_count(), 0.0);
  deg.b.assign(g.b_count(), 0.0);
  for (const auto& [key, w] : raw.a) {
    deg.a[key.first] += w;
    deg.u[key.second] += w;
  }
  for (const auto& [key, w] : raw.b) {
    deg.b[key.first] += w;
    deg.u[key.second] += w;
  }
  return deg;
}

inline double normalized_weight(double w, double deg_row, double deg_col, GraphNorm norm) {
  if (norm == GraphNorm::Symmetric) return w / std::sqrt(deg_row * deg_col);
  return w / deg_row;
}

// Positions of the perturbed items for one domain-A subsequence, in draw
// order. Exactly ceil(L*alpha) positions.
inline std::vector<std::size_t> pick_positions(Rng& rng, std::size_t length, double alpha) {
  return rng.sample_without_replacement(length, ceil_fraction(length, alpha));
}

}  // namespace detail

inline CdsGraph build_graph(const std::vector<HybridSequence>& batch,
                            GraphNorm norm = GraphNorm::Symmetric) {
  if (batch.empty()) throw ContractError("build_graph: empty batch");
  CdsGraph g;
  g.norm = norm;

  std::map<int, std::size_t> a_sorted, u_sorted, b_sorted;
  for (const HybridSequence& s : batch) {
    if (s.events.empty()) throw ContractError("build_graph: sequence with no events");
    u_sorted.emplace(s.user, 0);
    for (const Event& e : s.events)
      (e.domain == Domain::A ? a_sorted : b_sorted).emplace(e.item, 0);
  }
  for (auto& [id, loc] : a_sorted) {
    loc = g.a_items.size();
    g.a_items.push_back(id);
    g.a_index.emplace(id, loc);
  }
  for (auto& [id, loc] : u_sorted) {
    loc = g.users.size();
    g.users.push_back(id);
    g.u_index.emplace(id, loc);
  }
  for (auto& [id, loc] : b_sorted) {
    loc = g.b_items.size();
    g.b_items.push_back(id);
    g.b_index.emplace(id, loc);
  }

  detail::RawWeights raw = detail::collect_raw_weights(g, batch);
  detail::Degrees deg = detail::compute_degrees(g, raw);

  g.matrix = SparseMatrix(g.side());
  for (const auto& [key, w] : raw.a) {
    auto [i, u] = key;
    g.matrix.add(g.a_node(i), g.user_node(u),
                 detail::normalized_weight(w, deg.a[i], deg.u[u], norm));
    g.matrix.add(g.user_node(u), g.a_node(i),
                 detail::normalized_weight(w, deg.u[u], deg.a[i], norm));
  }
  for (const auto& [key, w] : raw.b) {
    auto [j, u] = key;
    g.matrix.add(g.b_node(j), g.user_node(u),
                 detail::normalized_weight(w, deg.b[j], deg.u[u], norm));
    g.matrix.add(g.user_node(u), g.b_node(j),
                 detail::normalized_weight(w, deg.u[u], deg.b[j], norm));
  }
  g.matrix.finalize();
  return g;
}

// Builds the item-dropout mask: per domain-A subsequence of length L, exactly
// ceil(L*alpha) positions are drawn and their items' user edges dropped.
inline MaskingMatrix make_dropout_mask(const CdsGraph& g,
                                       const std::vector<HybridSequence>& batch, double alpha,
                                       std::uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0) throw ContractError("item_dropout: alpha must be in [0,1]");
  MaskingMatrix mask;
  std::map<std::pair<std::size_t, std::size_t>, bool> dropped;
  Rng rng(derive_seed(seed, "item-dropout"));
  for (const HybridSequence& s : batch) {
    std::vector<int> sa = s.items_in(Domain::A);
    if (sa.empty()) continue;
    std::size_t u = g.local_user(s.user);
    for (std::size_t pos : detail::pick_positions(rng, sa.size(), alpha)) {
      dropped[{g.local_a(sa[pos]), u}] = true;
      mask.log.push_back({s.user, sa[pos], 'D'});
    }
  }
  detail::RawWeights raw = detail::collect_raw_weights(g, batch);
  mask.q = SparseMatrix(g.side());
  for (const auto& [key, w] : raw.a) {
    (void)w;
    if (!dropped.contains(key)) {
      mask.q.add(g.a_node(key.first), g.user_node(key.second), 1.0);
      mask.q.add(g.user_node(key.second), g.a_node(key.first), 1.0);
    }
  }
  mask.q.finalize();
  return mask;
}

// V = Q (elementwise) M on the A blocks; everything else is copied from M.
inline AugmentedView item_dropout(const CdsGraph& g, const std::vector<HybridSequence>& batch,
                                  double alpha, std::uint64_t seed) {
  MaskingMatrix mask = make_dropout_mask(g, batch, alpha, seed);
  AugmentedView view;
  view.kind = AugmentationKind::ItemDropout;
  view.alpha = alpha;
  view.seed = seed;
  view.log = mask.log;
  view.matrix = SparseMatrix(g.side());
  const std::size_t a_count = g.a_count();
  const std::size_t b_base = a_count + g.user_count();
  auto in_a_block = [&](std::size_t r, std::size_t c) {
    bool r_a = r < a_count, c_a = c < a_count;
    bool r_u = r >= a_count && r < b_base, c_u = c >= a_count && c < b_base;
    return (r_a && c_u) || (r_u && c_a);
  };
  for (const auto& t : g.matrix.triplets()) {
    if (in_a_block(t.row, t.col))
      view.matrix.add(t.row, t.col, mask.q.at(t.row, t.col) * t.value);
    else
      view.matrix.add(t.row, t.col, t.value);
  }
  view.matrix.finalize();
  return view;
}

// Moves ceil(L*alpha) items of each domain-A subsequence to its end (in draw
// order), recomputes positional weights, and renormalizes the A blocks with
// the updated degrees. B rows and columns are copied from M untouched.
inline AugmentedView sequence_reorder(const CdsGraph& g,
                                      const std::vector<HybridSequence>& batch, double alpha,
                                      std::uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0) throw ContractError("sequence_reorder: alpha must be in [0,1]");
  AugmentedView view;
  view.kind = AugmentationKind::SequenceReorder;
  view.alpha = alpha;
  view.seed = seed;

  Rng rng(derive_seed(seed, "sequence-reorder"));
  detail::EdgeMap new_a;
  for (const HybridSequence& s : batch) {
    std::vector<int> sa = s.items_in(Domain::A);
    if (sa.empty()) continue;
    std::vector<std::size_t> picks = detail::pick_positions(rng, sa.size(), alpha);
    std::vector<bool> moved(sa.size(), false);
    for (std::size_t pos : picks) moved[pos] = true;
    std::vector<int> reordered;
    reordered.reserve(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i)
      if (!moved[i]) reordered.push_back(sa[i]);
    for (std::size_t pos : picks) {
      reordered.push_back(sa[pos]);
      view.log.push_back({s.user, sa[pos], 'M'});
    }
    detail::accumulate_positional(new_a, reordered, g.local_user(s.user), g.a_index);
  }

  detail::RawWeights old_raw = detail::collect_raw_weights(g, batch);
  detail::RawWeights new_raw;
  new_raw.a = std::move(new_a);
  new_raw.b = old_raw.b;
  detail::Degrees deg = detail::compute_degrees(g, new_raw);

  view.matrix = SparseMatrix(g.side());
  for (const auto& [key, w] : new_raw.a) {
    auto [i, u] = key;
    view.matrix.add(g.a_node(i), g.user_node(u),
                    detail::normalized_weight(w, deg.a[i], deg.u[u], g.norm));
    view.matrix.add(g.user_node(u), g.a_node(i),
                    detail::normalized_weight(w, deg.u[u], deg.a[i], g.norm));
  }
  const std::size_t a_count = g.a_count();
  for (const auto& t : g.matrix.triplets()) {
    bool touches_a = t.row < a_count || t.col < a_count;
    if (!touches_a) view.matrix.add(t.row, t.col, t.value);
  }
  view.matrix.finalize();
  return view;
}

// Two independent draws of the same augmentation strategy.
inline std::pair<AugmentedView, AugmentedView> pair_views(const CdsGraph& g,
                                                          const std::vector<HybridSequence>& batch,
                                                          AugmentationKind kind, double alpha,
                                                          std::uint64_t seed) {
  auto one = [&](std::uint64_t s) {
    return kind == AugmentationKind::ItemDropout ? item_dropout(g, batch, alpha, s)
                                                 : sequence_reorder(g, batch, alpha, s);
  };
  return {one(derive_seed(seed, "view", 1)), one(derive_seed(seed, "view", 2))};
}

}  // namespace eagcl
