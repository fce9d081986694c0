#pragma once

// Hybrid cross-domain interaction sequences: TSV parsing with dense
// re-indexing, a latent-factor synthetic generator, train/test splitting,
// and deterministic batching. All randomness flows through explicit seeds.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "eagcl/common.hpp"

namespace eagcl {

enum class Domain : std::uint8_t { A, B };

inline char domain_char(Domain d) { return d == Domain::A ? 'A' : 'B'; }

struct Event {
  int item;  // dense id within its domain
  Domain domain;
  bool operator==(const Event&) const = default;
};

// One overlapped user's ordered interaction list with per-item domain tags.
struct HybridSequence {
  int user = -1;
  std::vector<Event> events;

  std::vector<int> items_in(Domain d) const {
    std::vector<int> out;
    for (const Event& e : events)
      if (e.domain == d) out.push_back(e.item);
    return out;
  }

  std::size_t count_in(Domain d) const {
    std::size_t n = 0;
    for (const Event& e : events) n += (e.domain == d);
    return n;
  }
};

// Dense index -> original id, one table per node class.
struct IdMaps {
  std::vector<long long> users;
  std::vector<long long> items_a;
  std::vector<long long> items_b;
};

struct Dataset {
  std::vector<HybridSequence> sequences;
  std::size_t m = 0;  // domain-A item count
  std::size_t n = 0;  // domain-B item count
  std::size_t p = 0;  // user count
  IdMaps id_maps;
};

struct DatasetSplit {
  std::vector<HybridSequence> train;
  std::vector<HybridSequence> test;
  std::size_t m = 0, n = 0, p = 0;
};

// ---------------------------------------------------------------------------
// TSV parsing: `user<TAB>item:domain,item:domain,...`
// ---------------------------------------------------------------------------

inline Dataset parse_dataset(std::istream& is) {
  Dataset ds;
  std::unordered_map<long long, int> user_ids;
  std::unordered_map<long long, int> a_ids, b_ids;
  std::unordered_map<long long, Domain> item_domain;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("line " + std::to_string(lineno) + ": missing tab separator");
    long long orig_user;
    try {
      orig_user = std::stoll(line.substr(0, tab));
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(lineno) + ": bad user id '" +
                      line.substr(0, tab) + "'");
    }

    HybridSequence seq;
    auto [uit, fresh] = user_ids.try_emplace(orig_user, static_cast<int>(ds.id_maps.users.size()));
    if (fresh) ds.id_maps.users.push_back(orig_user);
    seq.user = uit->second;

    std::string rest = line.substr(tab + 1);
    std::istringstream es(rest);
    std::string tok;
    while (std::getline(es, tok, ',')) {
      auto colon = tok.find(':');
      if (colon == std::string::npos || colon + 2 != tok.size())
        throw DataError("line " + std::to_string(lineno) + ": bad event '" + tok + "'");
      long long orig_item;
      try {
        orig_item = std::stoll(tok.substr(0, colon));
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(lineno) + ": bad item id '" + tok + "'");
      }
      char dc = tok[colon + 1];
      if (dc != 'A' && dc != 'B')
        throw DataError("line " + std::to_string(lineno) + ": bad domain '" + tok + "'");
      Domain dom = dc == 'A' ? Domain::A : Domain::B;

      auto dit = item_domain.find(orig_item);
      if (dit == item_domain.end()) {
        item_domain.emplace(orig_item, dom);
      } else if (dit->second != dom) {
        throw DataError("line " + std::to_string(lineno) + ": item " + std::to_string(orig_item) +
                        " appears in both domains");
      }
      int dense;
      if (dom == Domain::A) {
        auto [it, f] = a_ids.try_emplace(orig_item, static_cast<int>(ds.id_maps.items_a.size()));
        if (f) ds.id_maps.items_a.push_back(orig_item);
        dense = it->second;
      } else {
        auto [it, f] = b_ids.try_emplace(orig_item, static_cast<int>(ds.id_maps.items_b.size()));
        if (f) ds.id_maps.items_b.push_back(orig_item);
        dense = it->second;
      }
      seq.events.push_back({dense, dom});
    }
    if (seq.events.empty())
      throw DataError("line " + std::to_string(lineno) + ": sequence has no events");
    ds.sequences.push_back(std::move(seq));
  }
  ds.m = ds.id_maps.items_a.size();
  ds.n = ds.id_maps.items_b.size();
  ds.p = ds.id_maps.users.size();
  return ds;
}

inline Dataset parse_dataset_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open dataset file: " + path);
  return parse_dataset(f);
}

// Writes sequences in the TSV format. File-level item ids must be disjoint
// across domains (an id tagged both A and B is a consistency error on
// parse), so domain-B ids are offset past the domain-A range; parsing the
// result reproduces these sequences up to dense re-indexing.
inline void serialize_dataset(const std::vector<HybridSequence>& seqs, std::ostream& os) {
  long long b_offset = 0;
  for (const HybridSequence& s : seqs)
    for (const Event& e : s.events)
      if (e.domain == Domain::A) b_offset = std::max(b_offset, static_cast<long long>(e.item) + 1);
  for (const HybridSequence& s : seqs) {
    os << s.user << '\t';
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      if (i) os << ',';
      const Event& e = s.events[i];
      os << (e.domain == Domain::A ? static_cast<long long>(e.item)
                                   : b_offset + static_cast<long long>(e.item))
         << ':' << domain_char(e.domain);
    }
    os << '\n';
  }
}

// Serializes with the original file ids recorded in the id maps (exact
// serialize(parse(file)) round-trip); falls back to the offset scheme when
// the dataset has no maps (e.g. synthesized data).
inline void serialize_dataset(const Dataset& ds, std::ostream& os) {
  if (ds.id_maps.users.empty() && !ds.sequences.empty()) {
    serialize_dataset(ds.sequences, os);
    return;
  }
  for (const HybridSequence& s : ds.sequences) {
    os << ds.id_maps.users.at(static_cast<std::size_t>(s.user)) << '\t';
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      if (i) os << ',';
      const Event& e = s.events[i];
      const auto& ids = e.domain == Domain::A ? ds.id_maps.items_a : ds.id_maps.items_b;
      os << ids.at(static_cast<std::size_t>(e.item)) << ':' << domain_char(e.domain);
    }
    os << '\n';
  }
}

// Sidecar mapping the dense indices back to the ids found in the source
// file, one `kind<TAB>dense<TAB>original` line per entry, so downstream
// reports can translate ranked indices into original catalogue ids.
inline void serialize_id_maps(const IdMaps& maps, std::ostream& os) {
  auto dump = [&os](const char* kind, const std::vector<long long>& originals) {
    for (std::size_t i = 0; i < originals.size(); ++i)
      os << kind << '\t' << i << '\t' << originals[i] << '\n';
  };
  dump("user", maps.users);
  dump("item_a", maps.items_a);
  dump("item_b", maps.items_b);
}

// ---------------------------------------------------------------------------
// Synthetic generator: latent-factor softmax sampling with a controlled
// A-to-B interaction density ratio.
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t p = 200;
  std::size_t m = 300;
  std::size_t n = 150;
  double mean_len_a = 0.0;  // 0 = derive as density_ratio * mean_len_b
  double mean_len_b = 4.0;
  double density_ratio = 5.0;
  // A low-dimensional, sharply concentrated latent space keeps the corpus
  // learnable at desk scale: held-out users can be located from a handful of
  // context items, so personalization has headroom over the popularity
  // baseline. pop_spread tilts item logits by a shared popularity prior;
  // at 0 the popularity baseline degrades to chance.
  std::size_t latent_dim = 3;
  double concentration = 12.0;  // sharpness of user-item preference alignment
  double pop_spread = 0.0;      // stddev of global item-popularity logit offsets
  double noise_rate = 0.0;      // per-event chance of a uniform off-preference item
  std::uint64_t seed = 1;

  double resolved_mean_len_a() const {
    return mean_len_a > 0.0 ? mean_len_a : density_ratio * mean_len_b;
  }

  void validate() const {
    if (p == 0 || m == 0 || n == 0 || latent_dim == 0)
      throw ConfigError("synth: counts must be positive");
    if (density_ratio < 1.0) throw ConfigError("synth: density_ratio must be >= 1");
    if (mean_len_b <= 0.0) throw ConfigError("synth: mean_len_b must be positive");
    if (concentration < 0.0 || pop_spread < 0.0)
      throw ConfigError("synth: concentration and pop_spread must be non-negative");
    if (noise_rate < 0.0 || noise_rate >= 1.0)
      throw ConfigError("synth: noise_rate must be in [0, 1)");
    double la = resolved_mean_len_a();
    if (std::abs(la / mean_len_b - density_ratio) > 0.1 * density_ratio)
      throw ConfigError("synth: mean_len_a/mean_len_b disagrees with density_ratio by >10%");
  }
};

namespace detail {

// Unit-norm factor rows: preferences are purely directional, so no item is
// globally popular by construction and the recoverable signal is the
// user-item alignment.
inline std::vector<double> random_factors(Rng& rng, std::size_t count, std::size_t dim) {
  std::vector<double> f(count * dim);
  for (std::size_t r = 0; r < count; ++r) {
    double norm2 = 0.0;
    for (std::size_t t = 0; t < dim; ++t) {
      double x = rng.normal();
      f[r * dim + t] = x;
      norm2 += x * x;
    }
    if (norm2 == 0.0) {
      f[r * dim] = 1.0;
      norm2 = 1.0;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t t = 0; t < dim; ++t) f[r * dim + t] *= inv;
  }
  return f;
}

// Sampling without replacement from softmax(logits) via Gumbel top-k; the
// descending perturbed-logit order is the draw order.
inline std::vector<int> gumbel_topk(Rng& rng, const std::vector<double>& logits, std::size_t k) {
  std::vector<std::pair<double, int>> keyed(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double u = rng.next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    double gumbel = -std::log(-std::log(u));
    keyed[i] = {logits[i] + gumbel, static_cast<int>(i)};
  }
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<long>(k), keyed.end(),
                    [](auto& a, auto& b) { return a.first > b.first; });
  std::vector<int> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = keyed[i].second;
  return out;
}

}  // namespace detail

inline std::vector<HybridSequence> synthesize(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "synth"));
  const std::size_t ld = cfg.latent_dim;
  const double scale = cfg.concentration;  // factors are unit-norm
  std::vector<double> uf = detail::random_factors(rng, cfg.p, ld);
  std::vector<double> af = detail::random_factors(rng, cfg.m, ld);
  std::vector<double> bf = detail::random_factors(rng, cfg.n, ld);
  // Always draw the offsets so the downstream stream (and hence the factor
  // geometry of the generated corpus) is identical across pop_spread values.
  std::vector<double> pop_a(cfg.m), pop_b(cfg.n);
  for (double& x : pop_a) x = cfg.pop_spread * rng.normal();
  for (double& x : pop_b) x = cfg.pop_spread * rng.normal();

  auto logits_for = [&](std::size_t user, const std::vector<double>& items,
                        const std::vector<double>& pop, std::size_t count) {
    std::vector<double> lg(count);
    for (std::size_t i = 0; i < count; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < ld; ++t) s += uf[user * ld + t] * items[i * ld + t];
      lg[i] = scale * s + pop[i];
    }
    return lg;
  };

  const double lambda_a = cfg.resolved_mean_len_a();
  std::vector<HybridSequence> out;
  out.reserve(cfg.p);
  for (std::size_t u = 0; u < cfg.p; ++u) {
    std::size_t na = std::max<std::size_t>(1, rng.poisson(lambda_a));
    std::size_t nb = std::max<std::size_t>(1, rng.poisson(cfg.mean_len_b));
    na = std::min(na, cfg.m);
    nb = std::min(nb, cfg.n);
    std::vector<int> ia = detail::gumbel_topk(rng, logits_for(u, af, pop_a, cfg.m), na);
    std::vector<int> ib = detail::gumbel_topk(rng, logits_for(u, bf, pop_b, cfg.n), nb);
    // Gumbel draw order sorts by preference; shuffle so event position is
    // not confounded with preference strength.
    rng.shuffle(ia);
    rng.shuffle(ib);
    // Exploration noise: swap some events for uniform off-preference items.
    for (int& a : ia)
      if (rng.next_double() < cfg.noise_rate) a = static_cast<int>(rng.next_below(cfg.m));
    for (int& b : ib)
      if (rng.next_double() < cfg.noise_rate) b = static_cast<int>(rng.next_below(cfg.n));

    std::vector<Domain> tags(na, Domain::A);
    tags.insert(tags.end(), nb, Domain::B);
    rng.shuffle(tags);

    HybridSequence seq;
    seq.user = static_cast<int>(u);
    std::size_t ai = 0, bi = 0;
    for (Domain d : tags)
      seq.events.push_back({d == Domain::A ? ia[ai++] : ib[bi++], d});
    out.push_back(std::move(seq));
  }
  return out;
}

// Wraps already-dense sequences (e.g. synthesize() output) as a Dataset,
// sizing the id ranges from the largest ids present.
inline Dataset dataset_from_sequences(std::vector<HybridSequence> seqs) {
  Dataset ds;
  for (const HybridSequence& s : seqs) {
    if (s.user < 0) throw DataError("dataset_from_sequences: negative user id");
    ds.p = std::max(ds.p, static_cast<std::size_t>(s.user) + 1);
    for (const Event& e : s.events) {
      if (e.item < 0) throw DataError("dataset_from_sequences: negative item id");
      auto id1 = static_cast<std::size_t>(e.item) + 1;
      if (e.domain == Domain::A)
        ds.m = std::max(ds.m, id1);
      else
        ds.n = std::max(ds.n, id1);
    }
  }
  ds.sequences = std::move(seqs);
  return ds;
}

inline double realized_interaction_ratio(const std::vector<HybridSequence>& seqs) {
  std::size_t ca = 0, cb = 0;
  for (const HybridSequence& s : seqs) {
    ca += s.count_in(Domain::A);
    cb += s.count_in(Domain::B);
  }
  if (cb == 0) throw DataError("no domain-B interactions in dataset");
  return static_cast<double>(ca) / static_cast<double>(cb);
}

// ---------------------------------------------------------------------------
// Splitting and batching
// ---------------------------------------------------------------------------

inline DatasetSplit split_dataset(const std::vector<HybridSequence>& data, double train_fraction,
                                  std::uint64_t seed) {
  if (data.size() < 2) throw DataError("split error: need at least 2 sequences");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ConfigError("train_fraction must be in (0,1)");

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  std::size_t k = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(data.size())));
  k = std::clamp<std::size_t>(k, 1, data.size() - 1);

  DatasetSplit split;
  for (std::size_t i = 0; i < k; ++i) split.train.push_back(data[order[i]]);
  std::vector<HybridSequence> candidates;
  for (std::size_t i = k; i < data.size(); ++i) candidates.push_back(data[order[i]]);

  // Move test sequences containing cold items into train until stable. Users
  // are one-sequence-each, so a user-presence requirement would empty the
  // test set; unseen test users still get scored through their warm context
  // items via graph propagation.
  std::unordered_set<int> seen_a, seen_b;
  auto absorb = [&](const HybridSequence& s) {
    for (const Event& e : s.events)
      (e.domain == Domain::A ? seen_a : seen_b).insert(e.item);
  };
  for (const HybridSequence& s : split.train) absorb(s);

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<HybridSequence> remaining;
    for (HybridSequence& s : candidates) {
      bool warm = true;
      for (const Event& e : s.events)
        warm = warm && (e.domain == Domain::A ? seen_a : seen_b).contains(e.item);
      if (warm) {
        remaining.push_back(std::move(s));  // keep as a test candidate
      } else {
        absorb(s);
        split.train.push_back(std::move(s));
        changed = true;
      }
    }
    candidates = std::move(remaining);
  }
  split.test = std::move(candidates);

  std::size_t max_a = 0, max_b = 0, max_u = 0;
  for (const HybridSequence& s : data) {
    max_u = std::max<std::size_t>(max_u, static_cast<std::size_t>(s.user) + 1);
    for (const Event& e : s.events) {
      auto id1 = static_cast<std::size_t>(e.item) + 1;
      if (e.domain == Domain::A)
        max_a = std::max(max_a, id1);
      else
        max_b = std::max(max_b, id1);
    }
  }
  split.m = max_a;
  split.n = max_b;
  split.p = max_u;
  return split;
}

inline std::vector<std::vector<HybridSequence>> make_batches(
    const std::vector<HybridSequence>& data, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw ContractError("batch_size must be >= 1");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "batches"));
  rng.shuffle(order);
  std::vector<std::vector<HybridSequence>> batches;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<HybridSequence> b;
    for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i)
      b.push_back(data[order[i]]);
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Next-item protocol: the last event of each domain is that domain's target
// (only when the domain has at least 2 events); both target events are
// removed from the input context.
// ---------------------------------------------------------------------------

struct Example {
  HybridSequence context;
  std::optional<int> target_a;
  std::optional<int> target_b;
};

inline Example split_targets(const HybridSequence& seq) {
  Example ex;
  ex.context.user = seq.user;
  std::size_t na = seq.count_in(Domain::A);
  std::size_t nb = seq.count_in(Domain::B);
  long last_a = -1, last_b = -1;
  if (na >= 2 || nb >= 2) {
    for (long i = static_cast<long>(seq.events.size()) - 1; i >= 0; --i) {
      const Event& e = seq.events[static_cast<std::size_t>(i)];
      if (e.domain == Domain::A && na >= 2 && last_a < 0) last_a = i;
      if (e.domain == Domain::B && nb >= 2 && last_b < 0) last_b = i;
    }
  }
  for (long i = 0; i < static_cast<long>(seq.events.size()); ++i) {
    const Event& e = seq.events[static_cast<std::size_t>(i)];
    if (i == last_a)
      ex.target_a = e.item;
    else if (i == last_b)
      ex.target_b = e.item;
    else
      ex.context.events.push_back(e);
  }
  return ex;
}

}  // namespace eagcl
