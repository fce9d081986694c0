#pragma once

// Joint training loop. Each batch builds its CDS graph from the target-free
// contexts, encodes it (plus two augmented views when self-supervision is
// on), forms per-sequence preference vectors through the external-attention
// encoder, and optimizes
//
//   L = (L_A + beta L_s^A) + (L_B + beta L_s^B)
//
// with Adam. Also hosts evaluation against the popularity baseline, the
// ablation grid, and the wall-clock scaling study.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eagcl/cdsgraph.hpp"
#include "eagcl/common.hpp"
#include "eagcl/config.hpp"
#include "eagcl/contrastive.hpp"
#include "eagcl/dataio.hpp"
#include "eagcl/ea_seq.hpp"
#include "eagcl/evaluation.hpp"
#include "eagcl/gnn.hpp"
#include "eagcl/gradcheck.hpp"
#include "eagcl/model.hpp"
#include "eagcl/objective.hpp"
#include "eagcl/optim.hpp"
#include "eagcl/tape.hpp"

namespace eagcl {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline GraphNorm graph_norm_from_string(const std::string& s) {
  if (s == "sym") return GraphNorm::Symmetric;
  if (s == "row") return GraphNorm::Row;
  throw ConfigError("unknown graph norm '" + s + "' (expected sym|row)");
}

inline const char* to_string(GraphNorm n) { return n == GraphNorm::Symmetric ? "sym" : "row"; }

inline AugmentationKind augmentation_from_string(const std::string& s) {
  if (s == "id") return AugmentationKind::ItemDropout;
  if (s == "sr") return AugmentationKind::SequenceReorder;
  throw ConfigError("unknown augmentation '" + s + "' (expected id|sr)");
}

inline const char* to_string(AugmentationKind k) {
  return k == AugmentationKind::ItemDropout ? "id" : "sr";
}

inline const char* to_string(AttentionMode m) {
  return m == AttentionMode::Softmax ? "softmax" : "sqrt";
}

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t batch_size = 256;
  std::size_t embed_dim = 16;
  std::size_t layers = 2;
  std::size_t epochs = 50;
  double lr = 0.005;
  double dropout = 0.1;
  double alpha = 0.3;    // augmentation ratio
  double beta = 0.3;     // ssl term weight in the joint loss
  double tau = 0.2;      // InfoNCE temperature
  double ssl_reg = 1e-3;
  double leaky_slope = 0.2;
  AugmentationKind augmentation = AugmentationKind::ItemDropout;
  AttentionMode attention = AttentionMode::Softmax;
  GraphNorm graph_norm = GraphNorm::Symmetric;
  bool use_ea = true;    // external attention; off = mean pooling
  bool use_ssl = true;   // contrastive task; off = supervised only
  bool early_stopping = false;
  std::size_t patience = 5;
  double train_fraction = 0.8;
  std::vector<std::size_t> eval_ks = {5, 10};

  void validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
    if (layers == 0) throw ConfigError("layers must be positive");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    if (beta < 0.0) throw ConfigError("beta must be non-negative");
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (ssl_reg < 0.0) throw ConfigError("ssl_reg must be non-negative");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
      throw ConfigError("train_fraction must be in (0, 1)");
    if (eval_ks.empty()) throw ConfigError("eval_ks must not be empty");
  }

  static TrainConfig from_config(const ConfigMap& cfg) {
    TrainConfig tc;
    tc.seed = cfg.get_u64("seed", tc.seed);
    tc.batch_size = cfg.get_size("batch_size", tc.batch_size);
    tc.embed_dim = cfg.get_size("embed_dim", tc.embed_dim);
    tc.layers = cfg.get_size("layers", tc.layers);
    tc.epochs = cfg.get_size("epochs", tc.epochs);
    tc.lr = cfg.get_double("lr", tc.lr);
    tc.dropout = cfg.get_double("dropout", tc.dropout);
    tc.alpha = cfg.get_double("alpha", tc.alpha);
    tc.beta = cfg.get_double("beta", tc.beta);
    tc.tau = cfg.get_double("tau", tc.tau);
    tc.ssl_reg = cfg.get_double("ssl_reg", tc.ssl_reg);
    tc.leaky_slope = cfg.get_double("leaky_slope", tc.leaky_slope);
    tc.augmentation = augmentation_from_string(cfg.get_string("augmentation", "id"));
    tc.attention = attention_mode_from_string(cfg.get_string("attention", "softmax"));
    tc.graph_norm = graph_norm_from_string(cfg.get_string("graph_norm", "sym"));
    tc.use_ea = cfg.get_bool("use_ea", tc.use_ea);
    tc.use_ssl = cfg.get_bool("use_ssl", tc.use_ssl);
    tc.early_stopping = cfg.get_bool("early_stopping", tc.early_stopping);
    tc.patience = cfg.get_size("patience", tc.patience);
    tc.train_fraction = cfg.get_double("train_fraction", tc.train_fraction);
    std::string ks = cfg.get_string("eval_ks", "5,10");
    tc.eval_ks.clear();
    std::stringstream ss(ks);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = detail::trim(tok);
      if (!tok.empty()) tc.eval_ks.push_back(static_cast<std::size_t>(std::stoul(tok)));
    }
    tc.validate();
    return tc;
  }
};

// Resolved-config snapshot in the same key=value syntax the parser accepts,
// so a manifest can be replayed as a config file.
inline std::string config_snapshot(const TrainConfig& tc) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "seed=" << tc.seed << '\n'
     << "batch_size=" << tc.batch_size << '\n'
     << "embed_dim=" << tc.embed_dim << '\n'
     << "layers=" << tc.layers << '\n'
     << "epochs=" << tc.epochs << '\n'
     << "lr=" << tc.lr << '\n'
     << "dropout=" << tc.dropout << '\n'
     << "alpha=" << tc.alpha << '\n'
     << "beta=" << tc.beta << '\n'
     << "tau=" << tc.tau << '\n'
     << "ssl_reg=" << tc.ssl_reg << '\n'
     << "leaky_slope=" << tc.leaky_slope << '\n'
     << "augmentation=" << to_string(tc.augmentation) << '\n'
     << "attention=" << to_string(tc.attention) << '\n'
     << "graph_norm=" << to_string(tc.graph_norm) << '\n'
     << "use_ea=" << (tc.use_ea ? "true" : "false") << '\n'
     << "use_ssl=" << (tc.use_ssl ? "true" : "false") << '\n'
     << "early_stopping=" << (tc.early_stopping ? "true" : "false") << '\n'
     << "patience=" << tc.patience << '\n'
     << "train_fraction=" << tc.train_fraction << '\n';
  os << "eval_ks=";
  for (std::size_t i = 0; i < tc.eval_ks.size(); ++i) os << (i ? "," : "") << tc.eval_ks[i];
  os << '\n';
  return os.str();
}

inline SynthConfig synth_from_config(const ConfigMap& cfg) {
  SynthConfig sc;
  sc.p = cfg.get_size("p", sc.p);
  sc.m = cfg.get_size("m", sc.m);
  sc.n = cfg.get_size("n", sc.n);
  sc.mean_len_a = cfg.get_double("mean_len_a", sc.mean_len_a);
  sc.mean_len_b = cfg.get_double("mean_len_b", sc.mean_len_b);
  sc.density_ratio = cfg.get_double("density_ratio", sc.density_ratio);
  sc.latent_dim = cfg.get_size("latent_dim", sc.latent_dim);
  sc.concentration = cfg.get_double("concentration", sc.concentration);
  sc.pop_spread = cfg.get_double("pop_spread", sc.pop_spread);
  sc.noise_rate = cfg.get_double("noise_rate", sc.noise_rate);
  sc.seed = cfg.get_u64("data_seed", sc.seed);
  sc.validate();
  return sc;
}

inline std::string config_snapshot(const SynthConfig& sc) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "p=" << sc.p << '\n'
     << "m=" << sc.m << '\n'
     << "n=" << sc.n << '\n'
     << "mean_len_a=" << sc.mean_len_a << '\n'
     << "mean_len_b=" << sc.mean_len_b << '\n'
     << "density_ratio=" << sc.density_ratio << '\n'
     << "latent_dim=" << sc.latent_dim << '\n'
     << "concentration=" << sc.concentration << '\n'
     << "pop_spread=" << sc.pop_spread << '\n'
     << "noise_rate=" << sc.noise_rate << '\n'
     << "data_seed=" << sc.seed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Ablation variants
// ---------------------------------------------------------------------------

struct VariantSpec {
  std::string name;
  AugmentationKind augmentation = AugmentationKind::ItemDropout;
  bool use_ea = true;
  bool use_ssl = true;

  void apply(TrainConfig& cfg) const {
    cfg.augmentation = augmentation;
    cfg.use_ea = use_ea;
    cfg.use_ssl = use_ssl;
  }
};

inline std::vector<VariantSpec> ablation_variants() {
  return {
      {"EA-GCL (ID)", AugmentationKind::ItemDropout, true, true},
      {"EA-GCL (SR)", AugmentationKind::SequenceReorder, true, true},
      {"GCL (ID)-EA", AugmentationKind::ItemDropout, false, true},
      {"GCL (SR)-EA", AugmentationKind::SequenceReorder, false, true},
      {"GCL-CL", AugmentationKind::ItemDropout, true, false},
      {"GCL-ALL", AugmentationKind::ItemDropout, false, false},
  };
}

inline const VariantSpec& variant_by_name(const std::vector<VariantSpec>& variants,
                                          const std::string& name) {
  for (const auto& v : variants)
    if (v.name == name) return v;
  throw ConfigError("unknown variant '" + name + "'");
}

// ---------------------------------------------------------------------------
// Batch forward pass (shared by training and evaluation)
// ---------------------------------------------------------------------------

struct BatchForward {
  std::vector<Example> examples;
  CdsGraph graph;                    // matrices must outlive the tape pass
  AugmentedView view1, view2;
  bool has_views = false;
  Var probs_a, probs_b;              // batch x m, batch x n
  std::vector<std::size_t> rows_a, tgt_a, rows_b, tgt_b;
  Var loss_a, loss_b, ssl_a, ssl_b, joint;
};

namespace detail {

// Preference rows [h_S ; e_u] for one domain across the batch.
inline Var preference_block(Tape& tp, const CdsGraph& g, Var nodes,
                            const std::vector<Example>& examples, Domain dom, const EaVars& ea,
                            const TrainConfig& cfg, std::size_t d) {
  std::vector<Var> rows;
  rows.reserve(examples.size());
  for (const auto& ex : examples) {
    Var user_row =
        tp.gather_rows(nodes, {g.user_node(g.local_user(ex.context.user))});
    std::vector<int> items = ex.context.items_in(dom);
    Var h;
    if (items.empty()) {
      h = tp.zeros(1, d);
    } else {
      std::vector<std::size_t> idx;
      idx.reserve(items.size());
      for (int it : items)
        idx.push_back(dom == Domain::A ? g.a_node(g.local_a(it)) : g.b_node(g.local_b(it)));
      Var block = tp.gather_rows(nodes, idx);
      h = cfg.use_ea ? attend_sequence(tp, block, ea, cfg.attention, cfg.leaky_slope)
                     : mean_pool_sequence(tp, block);
    }
    rows.push_back(build_preference(tp, h, user_row));
  }
  return tp.vstack(rows);
}

}  // namespace detail

inline BatchForward forward_batch(Tape& tp, const std::vector<HybridSequence>& batch,
                                  const ModelVars& mv, const ModelSizes& sz,
                                  const TrainConfig& cfg, bool train, std::uint64_t round_seed) {
  if (batch.empty()) throw ContractError("forward_batch: empty batch");
  BatchForward bf;
  bf.examples.reserve(batch.size());
  std::vector<HybridSequence> contexts;
  contexts.reserve(batch.size());
  for (const auto& seq : batch) {
    bf.examples.push_back(split_targets(seq));
    contexts.push_back(bf.examples.back().context);
  }

  bf.graph = build_graph(contexts, cfg.graph_norm);
  PropagationConfig prop;
  prop.leaky_slope = cfg.leaky_slope;
  prop.dropout_rate = cfg.dropout;
  prop.train = train;
  prop.dropout_seed = derive_seed(round_seed, "clean");
  EncodeResult clean =
      encode(tp, bf.graph, bf.graph.matrix, mv.embedding, mv.prop_w1, mv.prop_w2, sz, prop);

  if (train && cfg.use_ssl) {
    auto views = pair_views(bf.graph, contexts, cfg.augmentation, cfg.alpha,
                            derive_seed(round_seed, "aug"));
    bf.view1 = std::move(views.first);
    bf.view2 = std::move(views.second);
    bf.has_views = true;
    PropagationConfig pv1 = prop, pv2 = prop;
    pv1.dropout_seed = derive_seed(round_seed, "view1-drop");
    pv2.dropout_seed = derive_seed(round_seed, "view2-drop");
    EncodeResult enc1 =
        encode(tp, bf.graph, bf.view1.matrix, mv.embedding, mv.prop_w1, mv.prop_w2, sz, pv1);
    EncodeResult enc2 =
        encode(tp, bf.graph, bf.view2.matrix, mv.embedding, mv.prop_w1, mv.prop_w2, sz, pv2);
    SslLosses ssl = ssl_losses(tp, bf.graph, enc1, enc2, cfg.tau, cfg.ssl_reg);
    bf.ssl_a = ssl.a;
    bf.ssl_b = ssl.b;
  } else {
    bf.ssl_a = tp.scalar(0.0);
    bf.ssl_b = tp.scalar(0.0);
  }

  Var pref_a = detail::preference_block(tp, bf.graph, clean.nodes, bf.examples, Domain::A,
                                        mv.ea_a, cfg, sz.d);
  Var pref_b = detail::preference_block(tp, bf.graph, clean.nodes, bf.examples, Domain::B,
                                        mv.ea_b, cfg, sz.d);
  bf.probs_a = predict(tp, pref_a, pref_b, mv.head_w_a, mv.head_b_a);
  bf.probs_b = predict(tp, pref_b, pref_a, mv.head_w_b, mv.head_b_b);

  for (std::size_t k = 0; k < bf.examples.size(); ++k) {
    if (bf.examples[k].target_a) {
      bf.rows_a.push_back(k);
      bf.tgt_a.push_back(static_cast<std::size_t>(*bf.examples[k].target_a));
    }
    if (bf.examples[k].target_b) {
      bf.rows_b.push_back(k);
      bf.tgt_b.push_back(static_cast<std::size_t>(*bf.examples[k].target_b));
    }
  }
  bf.loss_a = ce_loss(tp, bf.probs_a, bf.rows_a, bf.tgt_a);
  bf.loss_b = ce_loss(tp, bf.probs_b, bf.rows_b, bf.tgt_b);
  bf.joint = joint_loss(tp, bf.loss_a, bf.loss_b, bf.ssl_a, bf.ssl_b, cfg.beta);
  return bf;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

struct LossTraceRow {
  long epoch = 0;
  long batch = 0;
  double loss_a = 0.0, loss_b = 0.0, ssl_a = 0.0, ssl_b = 0.0, joint = 0.0;
};

inline void write_trace_header(std::ostream& os) { os << "epoch,batch,L_A,L_B,L_sA,L_sB,joint\n"; }

inline void write_trace_row(std::ostream& os, const LossTraceRow& r) {
  os << r.epoch << ',' << r.batch << ',' << r.loss_a << ',' << r.loss_b << ',' << r.ssl_a << ','
     << r.ssl_b << ',' << r.joint << '\n';
}

struct FitResult {
  std::vector<double> epoch_joint;  // mean joint loss per completed epoch
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

struct EvalResult {
  std::vector<std::size_t> ranks_a, ranks_b;          // model ranks per test target
  std::vector<std::size_t> pop_ranks_a, pop_ranks_b;  // popularity-baseline ranks
  std::vector<DomainReport> reports;

  double metric(const std::string& model, const std::string& domain, std::size_t k,
                const std::string& which) const {
    for (const auto& rep : reports) {
      if (rep.model != model || rep.domain != domain) continue;
      for (const auto& row : rep.rows) {
        if (row.k != k) continue;
        if (which == "rc") return row.rc;
        if (which == "mrr") return row.mrr;
        if (which == "ndcg") return row.ndcg;
        throw ContractError("unknown metric '" + which + "'");
      }
    }
    throw ContractError("no report row for " + model + "/" + domain + "@" + std::to_string(k));
  }
};

class Trainer {
 public:
  Trainer(ModelParams params, TrainConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    auto entries = params_.entries();
    adam_.resize(entries.size());
    // Shape the moment tensors up front so a checkpoint taken before the
    // first optimizer step still serializes one value per parameter.
    for (std::size_t i = 0; i < entries.size(); ++i) adam_[i].ensure_shape(*entries[i].tensor);
    adam_cfg_.lr = cfg_.lr;
  }

  static Trainer fresh(std::size_t m, std::size_t n, std::size_t p, const TrainConfig& cfg) {
    ModelSizes sz;
    sz.m = m;
    sz.n = n;
    sz.p = p;
    sz.d = cfg.embed_dim;
    sz.layers = cfg.layers;
    return Trainer(ModelParams::init(sz, derive_seed(cfg.seed, "init")), cfg);
  }

  static Trainer fresh(const Dataset& data, const TrainConfig& cfg) {
    return fresh(data.m, data.n, data.p, cfg);
  }

  static Trainer fresh(const DatasetSplit& split, const TrainConfig& cfg) {
    return fresh(split.m, split.n, split.p, cfg);
  }

  const ModelParams& params() const { return params_; }
  const TrainConfig& config() const { return cfg_; }
  long epoch() const { return epoch_; }
  long step() const { return step_; }

  // One pass over the training sequences. Throws NumericError if a loss goes
  // non-finite (after reporting which batch and which components).
  std::vector<LossTraceRow> train_epoch(const std::vector<HybridSequence>& train,
                                        std::ostream* trace = nullptr) {
    auto batches = make_batches(train, cfg_.batch_size, derive_seed(cfg_.seed, "order", epoch_));
    std::vector<LossTraceRow> rows;
    rows.reserve(batches.size());
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Tape tp;
      ModelVars mv = make_vars(tp, params_);
      std::uint64_t round_seed = derive_seed(cfg_.seed, "round", epoch_, b);
      BatchForward bf = forward_batch(tp, batches[b], mv, params_.sizes, cfg_, true, round_seed);
      LossTraceRow row;
      row.epoch = epoch_;
      row.batch = static_cast<long>(b);
      row.loss_a = tp.value(bf.loss_a).item();
      row.loss_b = tp.value(bf.loss_b).item();
      row.ssl_a = tp.value(bf.ssl_a).item();
      row.ssl_b = tp.value(bf.ssl_b).item();
      row.joint = tp.value(bf.joint).item();
      if (!std::isfinite(row.joint)) {
        std::ostringstream os;
        os << "non-finite joint loss at epoch " << epoch_ << " batch " << b << ": L_A="
           << row.loss_a << " L_B=" << row.loss_b << " L_sA=" << row.ssl_a << " L_sB=" << row.ssl_b;
        throw NumericError(os.str());
      }
      if (tp.needs(bf.joint)) {
        tp.backward(bf.joint);
        ++step_;
        auto entries = params_.entries();
        auto vars = var_list(mv);
        for (std::size_t i = 0; i < entries.size(); ++i)
          adam_step(*entries[i].tensor, tp.grad(vars[i]), adam_[i], step_, adam_cfg_);
      } else {
        push_warning("train_epoch: batch " + std::to_string(b) +
                     " has no differentiable loss; skipped");
      }
      if (trace) write_trace_row(*trace, row);
      rows.push_back(row);
    }
    ++epoch_;
    return rows;
  }

  FitResult fit(const std::vector<HybridSequence>& train, std::ostream* trace = nullptr) {
    if (trace) write_trace_header(*trace);
    FitResult res;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      auto rows = train_epoch(train, trace);
      double mean = 0.0;
      for (const auto& r : rows) mean += r.joint;
      mean /= static_cast<double>(rows.empty() ? 1 : rows.size());
      res.epoch_joint.push_back(mean);
      ++res.epochs_run;
      if (cfg_.early_stopping) {
        if (mean < best - 1e-9) {
          best = mean;
          since_best = 0;
        } else if (++since_best >= cfg_.patience) {
          res.stopped_early = true;
          break;
        }
      }
    }
    return res;
  }

  // Ranks every held-out target of the test split for the model and for the
  // training-set popularity baseline.
  EvalResult evaluate(const DatasetSplit& split) {
    EvalResult res;
    std::vector<double> pop_a = popularity_scores_from(split.train, Domain::A, params_.sizes.m);
    std::vector<double> pop_b = popularity_scores_from(split.train, Domain::B, params_.sizes.n);
    for (std::size_t start = 0; start < split.test.size(); start += cfg_.batch_size) {
      std::vector<HybridSequence> batch(
          split.test.begin() + static_cast<long>(start),
          split.test.begin() +
              static_cast<long>(std::min(start + cfg_.batch_size, split.test.size())));
      Tape tp;
      ModelVars mv = make_vars(tp, params_);
      BatchForward bf = forward_batch(tp, batch, mv, params_.sizes, cfg_, false, 0);
      const Tensor& pa = tp.value(bf.probs_a);
      const Tensor& pb = tp.value(bf.probs_b);
      for (std::size_t k = 0; k < bf.examples.size(); ++k) {
        if (bf.examples[k].target_a) {
          std::size_t t = static_cast<std::size_t>(*bf.examples[k].target_a);
          std::vector<double> scores(pa.data() + k * pa.cols(), pa.data() + (k + 1) * pa.cols());
          res.ranks_a.push_back(rank_of_target(scores, t));
          res.pop_ranks_a.push_back(rank_of_target(pop_a, t));
        }
        if (bf.examples[k].target_b) {
          std::size_t t = static_cast<std::size_t>(*bf.examples[k].target_b);
          std::vector<double> scores(pb.data() + k * pb.cols(), pb.data() + (k + 1) * pb.cols());
          res.ranks_b.push_back(rank_of_target(scores, t));
          res.pop_ranks_b.push_back(rank_of_target(pop_b, t));
        }
      }
    }
    auto report = [&](const std::string& model, const std::string& dom,
                      const std::vector<std::size_t>& ranks) {
      DomainReport rep;
      rep.model = model;
      rep.domain = dom;
      for (std::size_t k : cfg_.eval_ks) rep.rows.push_back(metrics_at_k(ranks, k));
      res.reports.push_back(std::move(rep));
    };
    report("eagcl", "A", res.ranks_a);
    report("eagcl", "B", res.ranks_b);
    report("popularity", "A", res.pop_ranks_a);
    report("popularity", "B", res.pop_ranks_b);
    return res;
  }

  Checkpoint to_checkpoint() const {
    Checkpoint ck;
    ck.params = params_;
    ck.adam = adam_;
    ck.step = step_;
    ck.epoch = epoch_;
    ck.seed = cfg_.seed;
    return ck;
  }

  void restore(const Checkpoint& ck) {
    params_ = ck.params;
    adam_ = ck.adam;
    step_ = ck.step;
    epoch_ = ck.epoch;
  }

 private:
  // Counts over an arbitrary sequence list, padded to the full item range.
  static std::vector<double> popularity_scores_from(const std::vector<HybridSequence>& seqs,
                                                    Domain d, std::size_t items) {
    std::vector<double> counts(items, 0.0);
    for (const auto& seq : seqs)
      for (const auto& ev : seq.events)
        if (ev.domain == d) counts[static_cast<std::size_t>(ev.item)] += 1.0;
    return counts;
  }

  ModelParams params_;
  TrainConfig cfg_;
  AdamConfig adam_cfg_;
  std::vector<AdamState> adam_;
  long step_ = 0;
  long epoch_ = 0;
};

// ---------------------------------------------------------------------------
// Ablation grid
// ---------------------------------------------------------------------------

struct AblationCell {
  std::string variant;
  std::uint64_t seed = 0;
  double ndcg_a10 = 0.0;
  double ndcg_b10 = 0.0;
};

struct AblationRow {
  std::string variant;
  double median_ndcg_a10 = 0.0;
  double median_ndcg_b10 = 0.0;
};

struct AblationResult {
  std::vector<AblationCell> cells;
  std::vector<AblationRow> rows;

  const AblationRow& row(const std::string& variant) const {
    for (const auto& r : rows)
      if (r.variant == variant) return r;
    throw ContractError("no ablation row for variant '" + variant + "'");
  }
};

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) throw ContractError("median of empty set");
  std::sort(xs.begin(), xs.end());
  std::size_t mid = xs.size() / 2;
  return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

// Trains and evaluates each variant once per seed; medians are across seeds.
inline AblationResult run_ablation(const DatasetSplit& split, const TrainConfig& base,
                                   const std::vector<VariantSpec>& variants,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::ostream* progress = nullptr) {
  if (seeds.empty()) throw ConfigError("run_ablation: need at least one seed");
  AblationResult result;
  for (const auto& variant : variants) {
    std::vector<double> a10s, b10s;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      variant.apply(cfg);
      cfg.seed = seed;
      Trainer tr = Trainer::fresh(split, cfg);
      tr.fit(split.train);
      EvalResult ev = tr.evaluate(split);
      AblationCell cell;
      cell.variant = variant.name;
      cell.seed = seed;
      cell.ndcg_a10 = ev.metric("eagcl", "A", 10, "ndcg");
      cell.ndcg_b10 = ev.metric("eagcl", "B", 10, "ndcg");
      result.cells.push_back(cell);
      a10s.push_back(cell.ndcg_a10);
      b10s.push_back(cell.ndcg_b10);
      if (progress)
        *progress << variant.name << " seed=" << seed << " ndcg_a10=" << cell.ndcg_a10
                  << " ndcg_b10=" << cell.ndcg_b10 << '\n';
    }
    AblationRow row;
    row.variant = variant.name;
    row.median_ndcg_a10 = median_of(a10s);
    row.median_ndcg_b10 = median_of(b10s);
    result.rows.push_back(row);
  }
  return result;
}

inline std::string format_ablation_csv(const AblationResult& res) {
  std::ostringstream os;
  os << "variant,seed,ndcg_a10,ndcg_b10\n" << std::setprecision(10);
  for (const auto& c : res.cells)
    os << c.variant << ',' << c.seed << ',' << c.ndcg_a10 << ',' << c.ndcg_b10 << '\n';
  os << "\nvariant,median_ndcg_a10,median_ndcg_b10\n";
  for (const auto& r : res.rows)
    os << r.variant << ',' << r.median_ndcg_a10 << ',' << r.median_ndcg_b10 << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Wall-clock scaling study
// ---------------------------------------------------------------------------

struct TimingPoint {
  double fraction = 0.0;
  std::size_t events = 0;  // events per epoch in the subset
  double seconds = 0.0;    // wall time for all measured epochs
};

struct TimingResult {
  std::vector<TimingPoint> points;
  double slope = 0.0;      // seconds per (event * epoch)
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Trains `epochs_per_point` epochs on nested prefixes of the sequence list
// and fits seconds against processed events by least squares.
inline TimingResult timing_study(const Dataset& data, const TrainConfig& cfg,
                                 const std::vector<double>& fractions,
                                 std::size_t epochs_per_point = 2,
                                 std::ostream* progress = nullptr) {
  if (fractions.empty()) throw ConfigError("timing_study: need at least one fraction");
  TimingResult res;
  for (double f : fractions) {
    if (f <= 0.0 || f > 1.0) throw ConfigError("timing_study: fractions must be in (0, 1]");
    std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(f * static_cast<double>(data.sequences.size()))));
    std::vector<HybridSequence> subset(data.sequences.begin(),
                                       data.sequences.begin() + static_cast<long>(count));
    std::size_t events = 0;
    for (const auto& s : subset) events += s.events.size();
    Trainer tr = Trainer::fresh(data, cfg);
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t e = 0; e < epochs_per_point; ++e) tr.train_epoch(subset);
    auto t1 = std::chrono::steady_clock::now();
    TimingPoint pt;
    pt.fraction = f;
    pt.events = events;
    pt.seconds = std::chrono::duration<double>(t1 - t0).count();
    if (progress)
      *progress << "fraction=" << f << " events=" << events << " seconds=" << pt.seconds << '\n';
    res.points.push_back(pt);
  }
  // least squares of seconds vs (events * epochs)
  const double n = static_cast<double>(res.points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : res.points) {
    double x = static_cast<double>(pt.events) * static_cast<double>(epochs_per_point);
    sx += x;
    sy += pt.seconds;
    sxx += x * x;
    sxy += x * pt.seconds;
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) {
    res.slope = 0.0;
    res.intercept = sy / n;
  } else {
    res.slope = (n * sxy - sx * sy) / denom;
    res.intercept = (sy - res.slope * sx) / n;
  }
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (const auto& pt : res.points) {
    double x = static_cast<double>(pt.events) * static_cast<double>(epochs_per_point);
    double pred = res.slope * x + res.intercept;
    ss_res += (pt.seconds - pred) * (pt.seconds - pred);
    ss_tot += (pt.seconds - mean_y) * (pt.seconds - mean_y);
  }
  res.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return res;
}

// ---------------------------------------------------------------------------
// Whole-model gradient check
// ---------------------------------------------------------------------------

// Central-difference check of d(joint loss)/d(every parameter coordinate) on
// one batch. Dropout is forced off (a stochastic mask has no finite-difference
// oracle); augmentation seeds are fixed so repeated forwards see identical
// views.
inline GradCheckReport model_grad_check(const std::vector<HybridSequence>& batch, std::size_t m,
                                        std::size_t n, std::size_t p, TrainConfig cfg,
                                        double h = 1e-6, double tol = 1e-4) {
  cfg.dropout = 0.0;
  cfg.validate();
  ModelSizes sz;
  sz.m = m;
  sz.n = n;
  sz.p = p;
  sz.d = cfg.embed_dim;
  sz.layers = cfg.layers;
  ModelParams params = ModelParams::init(sz, derive_seed(cfg.seed, "init"));
  auto entries = params.entries();
  std::vector<Tensor*> ptrs;
  std::vector<std::string> names;
  for (auto& e : entries) {
    ptrs.push_back(e.tensor);
    names.push_back(e.name);
  }
  std::uint64_t round_seed = derive_seed(cfg.seed, "gradcheck");
  GradCheckFn f = [&](std::vector<Tensor>* grads) -> double {
    Tape tp;
    ModelVars mv = make_vars(tp, params);
    BatchForward bf = forward_batch(tp, batch, mv, sz, cfg, true, round_seed);
    double val = tp.value(bf.joint).item();
    if (grads) {
      tp.backward(bf.joint);
      grads->clear();
      for (Var v : var_list(mv)) grads->push_back(tp.grad(v));
    }
    return val;
  };
  return grad_check(f, ptrs, h, tol, names);
}

inline std::string format_timing_csv(const TimingResult& res) {
  std::ostringstream os;
  os << "fraction,events,seconds\n" << std::setprecision(10);
  for (const auto& pt : res.points)
    os << pt.fraction << ',' << pt.events << ',' << pt.seconds << '\n';
  os << "\nslope,intercept,r_squared\n"
     << res.slope << ',' << res.intercept << ',' << res.r_squared << '\n';
  return os.str();
}

}  // namespace eagcl
