#pragma once

// Top-K ranking evaluation. A held-out target is ranked against every item
// of its domain by descending score (ties broken toward the smaller item id,
// which also gives unseen zero-count items a defined order under the
// popularity baseline), and per-domain metrics are averaged over test
// sequences:
//
//   RC@K   = mean[ rank <= K ]
//   MRR@K  = mean[ rank <= K ? 1/rank : 0 ]
//   NDCG@K = mean[ rank <= K ? 1/log2(rank+1) : 0 ]

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/dataio.hpp"

namespace eagcl {

// 1-based rank of `target` in `scores` under descending score, ascending-id
// tie-break.
inline std::size_t rank_of_target(const std::vector<double>& scores, std::size_t target) {
  if (target >= scores.size())
    throw ContractError("rank_of_target: target " + std::to_string(target) + " outside " +
                        std::to_string(scores.size()) + " candidates");
  const double st = scores[target];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > st || (scores[j] == st && j < target)) ++rank;
  }
  return rank;
}

struct MetricsAtK {
  std::size_t k = 0;
  double rc = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
  std::size_t count = 0;  // examples averaged over
};

inline MetricsAtK metrics_at_k(const std::vector<std::size_t>& ranks, std::size_t k) {
  if (k == 0) throw ConfigError("metrics_at_k: K must be positive");
  MetricsAtK m;
  m.k = k;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  for (std::size_t r : ranks) {
    if (r == 0) throw ContractError("metrics_at_k: ranks are 1-based");
    if (r <= k) {
      m.rc += 1.0;
      m.mrr += 1.0 / static_cast<double>(r);
      m.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  }
  const double denom = static_cast<double>(ranks.size());
  m.rc /= denom;
  m.mrr /= denom;
  m.ndcg /= denom;
  return m;
}

// Interaction counts per item over the training sequences; scoring a test
// target against these counts is the non-personalized popularity baseline.
inline std::vector<double> popularity_scores(const Dataset& train, Domain d) {
  std::vector<double> counts(d == Domain::A ? train.m : train.n, 0.0);
  for (const auto& seq : train.sequences)
    for (const auto& ev : seq.events)
      if (ev.domain == d) counts[static_cast<std::size_t>(ev.item)] += 1.0;
  return counts;
}

struct DomainReport {
  std::string domain;  // "A" or "B"
  std::string model;   // "eagcl", "popularity", ...
  std::vector<MetricsAtK> rows;
};

inline std::string format_report_csv(const std::vector<DomainReport>& reports) {
  std::ostringstream os;
  os << "model,domain,K,rc,mrr,ndcg,count\n";
  os << std::setprecision(10);
  for (const auto& rep : reports)
    for (const auto& m : rep.rows)
      os << rep.model << ',' << rep.domain << ',' << m.k << ',' << m.rc << ',' << m.mrr << ','
         << m.ndcg << ',' << m.count << '\n';
  return os.str();
}

inline std::string format_report_text(const std::vector<DomainReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "model" << std::setw(8) << "domain" << std::setw(6) << "K"
     << std::right << std::setw(10) << "RC" << std::setw(10) << "MRR" << std::setw(10) << "NDCG"
     << std::setw(8) << "count" << '\n';
  os << std::string(66, '-') << '\n';
  for (const auto& rep : reports)
    for (const auto& m : rep.rows) {
      os << std::left << std::setw(14) << rep.model << std::setw(8) << rep.domain << std::setw(6)
         << m.k;
      os << std::right << std::fixed << std::setprecision(4) << std::setw(10) << m.rc
         << std::setw(10) << m.mrr << std::setw(10) << m.ndcg;
      os.unsetf(std::ios::fixed);
      os << std::setprecision(6) << std::setw(8) << m.count << '\n';
    }
  return os.str();
}

}  // namespace eagcl
