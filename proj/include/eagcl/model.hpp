#pragma once

// All trainable tensors: the global embedding table over (A-items, users,
// B-items), per-layer propagation weights, per-domain external-attention MLP
// weights, and the two prediction heads. Includes the text checkpoint format
// (hexfloat values, so save/load round-trips bitwise).

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/optim.hpp"
#include "eagcl/tape.hpp"
#include "eagcl/tensor.hpp"

namespace eagcl {

struct ModelSizes {
  std::size_t m = 0;   // domain-A items
  std::size_t n = 0;   // domain-B items
  std::size_t p = 0;   // users
  std::size_t d = 16;  // embedding width
  std::size_t layers = 2;

  std::size_t node_count() const { return m + p + n; }
  std::size_t row_of_a(int item) const { return static_cast<std::size_t>(item); }
  std::size_t row_of_user(int user) const { return m + static_cast<std::size_t>(user); }
  std::size_t row_of_b(int item) const { return m + p + static_cast<std::size_t>(item); }
};

struct EaWeights {
  Tensor w1;  // d x d
  Tensor w2;  // d x 1
  Tensor b;   // 1 x d
};

struct ModelParams {
  ModelSizes sizes;
  Tensor embedding;  // (m+p+n) x d
  std::vector<Tensor> prop_w1, prop_w2;  // per layer, d x d
  EaWeights ea_a, ea_b;
  Tensor head_w_a, head_b_a;  // m x 4d, 1 x m
  Tensor head_w_b, head_b_b;  // n x 4d, 1 x n

  static ModelParams init(const ModelSizes& sz, std::uint64_t seed) {
    ModelParams mp;
    mp.sizes = sz;
    mp.embedding = xavier_init(sz.node_count(), sz.d, derive_seed(seed, "emb"));
    for (std::size_t l = 0; l < sz.layers; ++l) {
      mp.prop_w1.push_back(xavier_init(sz.d, sz.d, derive_seed(seed, "w1", l)));
      mp.prop_w2.push_back(xavier_init(sz.d, sz.d, derive_seed(seed, "w2", l)));
    }
    auto ea = [&](const char* tag) {
      EaWeights w;
      w.w1 = xavier_init(sz.d, sz.d, derive_seed(seed, tag, 1));
      w.w2 = xavier_init(sz.d, 1, derive_seed(seed, tag, 2));
      w.b = Tensor(1, sz.d);
      return w;
    };
    mp.ea_a = ea("ea-a");
    mp.ea_b = ea("ea-b");
    mp.head_w_a = xavier_init(sz.m, 4 * sz.d, derive_seed(seed, "head-a"));
    mp.head_b_a = Tensor(1, sz.m);
    mp.head_w_b = xavier_init(sz.n, 4 * sz.d, derive_seed(seed, "head-b"));
    mp.head_b_b = Tensor(1, sz.n);
    return mp;
  }

  struct Entry {
    std::string name;
    Tensor* tensor;
  };

  std::vector<Entry> entries() {
    std::vector<Entry> out;
    out.push_back({"embedding", &embedding});
    for (std::size_t l = 0; l < prop_w1.size(); ++l) {
      out.push_back({"prop_w1." + std::to_string(l), &prop_w1[l]});
      out.push_back({"prop_w2." + std::to_string(l), &prop_w2[l]});
    }
    out.push_back({"ea_a.w1", &ea_a.w1});
    out.push_back({"ea_a.w2", &ea_a.w2});
    out.push_back({"ea_a.b", &ea_a.b});
    out.push_back({"ea_b.w1", &ea_b.w1});
    out.push_back({"ea_b.w2", &ea_b.w2});
    out.push_back({"ea_b.b", &ea_b.b});
    out.push_back({"head_w_a", &head_w_a});
    out.push_back({"head_b_a", &head_b_a});
    out.push_back({"head_w_b", &head_w_b});
    out.push_back({"head_b_b", &head_b_b});
    return out;
  }
};

// Leaf vars for one forward pass.
struct EaVars {
  Var w1, w2, b;
};

struct ModelVars {
  Var embedding;
  std::vector<Var> prop_w1, prop_w2;
  EaVars ea_a, ea_b;
  Var head_w_a, head_b_a, head_w_b, head_b_b;
};

inline ModelVars make_vars(Tape& tp, ModelParams& mp) {
  ModelVars v;
  v.embedding = tp.leaf(mp.embedding);
  for (std::size_t l = 0; l < mp.prop_w1.size(); ++l) {
    v.prop_w1.push_back(tp.leaf(mp.prop_w1[l]));
    v.prop_w2.push_back(tp.leaf(mp.prop_w2[l]));
  }
  v.ea_a = {tp.leaf(mp.ea_a.w1), tp.leaf(mp.ea_a.w2), tp.leaf(mp.ea_a.b)};
  v.ea_b = {tp.leaf(mp.ea_b.w1), tp.leaf(mp.ea_b.w2), tp.leaf(mp.ea_b.b)};
  v.head_w_a = tp.leaf(mp.head_w_a);
  v.head_b_a = tp.leaf(mp.head_b_a);
  v.head_w_b = tp.leaf(mp.head_w_b);
  v.head_b_b = tp.leaf(mp.head_b_b);
  return v;
}

// Same enumeration order as ModelParams::entries().
inline std::vector<Var> var_list(const ModelVars& v) {
  std::vector<Var> out;
  out.push_back(v.embedding);
  for (std::size_t l = 0; l < v.prop_w1.size(); ++l) {
    out.push_back(v.prop_w1[l]);
    out.push_back(v.prop_w2[l]);
  }
  out.push_back(v.ea_a.w1);
  out.push_back(v.ea_a.w2);
  out.push_back(v.ea_a.b);
  out.push_back(v.ea_b.w1);
  out.push_back(v.ea_b.w2);
  out.push_back(v.ea_b.b);
  out.push_back(v.head_w_a);
  out.push_back(v.head_b_a);
  out.push_back(v.head_w_b);
  out.push_back(v.head_b_b);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  std::vector<AdamState> adam;  // aligned with params.entries()
  long step = 0;
  long epoch = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void write_tensor_values(std::ostream& os, const Tensor& t) {
  char buf[64];
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%a", t(i, j));
      os << (j ? " " : "") << buf;
    }
    os << '\n';
  }
}

inline Tensor read_tensor_values(std::istream& is, std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  std::string tok;
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (!(is >> tok)) throw DataError("checkpoint: truncated tensor values");
    t[i] = std::strtod(tok.c_str(), nullptr);
  }
  return t;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write checkpoint: " + path);
  ModelParams& mp = const_cast<Checkpoint&>(ckpt).params;
  os << "eagcl-checkpoint 1\n";
  os << "seed " << ckpt.seed << "\nstep " << ckpt.step << "\nepoch " << ckpt.epoch << '\n';
  os << "sizes " << mp.sizes.m << ' ' << mp.sizes.n << ' ' << mp.sizes.p << ' ' << mp.sizes.d
     << ' ' << mp.sizes.layers << '\n';
  auto entries = mp.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Tensor& t = *entries[i].tensor;
    os << "tensor " << entries[i].name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    detail::write_tensor_values(os, t);
    detail::write_tensor_values(os, ckpt.adam[i].m);
    detail::write_tensor_values(os, ckpt.adam[i].v);
  }
  os << "end\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  std::string word;
  int version;
  is >> word >> version;
  if (word != "eagcl-checkpoint" || version != 1)
    throw DataError("checkpoint: bad header in " + path);
  Checkpoint ckpt;
  ModelSizes sz;
  is >> word >> ckpt.seed;
  if (word != "seed") throw DataError("checkpoint: expected seed");
  is >> word >> ckpt.step;
  is >> word >> ckpt.epoch;
  is >> word >> sz.m >> sz.n >> sz.p >> sz.d >> sz.layers;
  if (word != "sizes") throw DataError("checkpoint: expected sizes");
  ckpt.params = ModelParams::init(sz, ckpt.seed);
  auto entries = ckpt.params.entries();
  ckpt.adam.resize(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::string name;
    std::size_t rows, cols;
    is >> word >> name >> rows >> cols;
    if (word != "tensor" || name != entries[i].name)
      throw DataError("checkpoint: expected tensor " + entries[i].name + ", got " + name);
    if (rows != entries[i].tensor->rows() || cols != entries[i].tensor->cols())
      throw DataError("checkpoint: shape mismatch for " + name);
    *entries[i].tensor = detail::read_tensor_values(is, rows, cols);
    ckpt.adam[i].m = detail::read_tensor_values(is, rows, cols);
    ckpt.adam[i].v = detail::read_tensor_values(is, rows, cols);
  }
  is >> word;
  if (word != "end") throw DataError("checkpoint: missing end marker");
  return ckpt;
}

}  // namespace eagcl
