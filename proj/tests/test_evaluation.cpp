#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "eagcl/dataio.hpp"
#include "eagcl/evaluation.hpp"

using namespace eagcl;

TEST_CASE("rank_of_target orders by score with id tie-breaks") {
  std::vector<double> scores = {0.1, 0.9, 0.4, 0.9, 0.4};
  CHECK(rank_of_target(scores, 1) == 1);  // top score, lowest id among ties
  CHECK(rank_of_target(scores, 3) == 2);  // same score, larger id
  CHECK(rank_of_target(scores, 2) == 3);
  CHECK(rank_of_target(scores, 4) == 4);
  CHECK(rank_of_target(scores, 0) == 5);
  CHECK_THROWS_AS(rank_of_target(scores, 5), ContractError);
}

TEST_CASE("all-equal scores rank purely by id") {
  std::vector<double> flat(6, 3.25);
  for (std::size_t t = 0; t < flat.size(); ++t) CHECK(rank_of_target(flat, t) == t + 1);
}

TEST_CASE("a rank-3 target yields the textbook metric triple") {
  MetricsAtK m = metrics_at_k({3}, 10);
  CHECK(m.rc == Catch::Approx(1.0).margin(1e-6));
  CHECK(m.mrr == Catch::Approx(1.0 / 3.0).margin(1e-6));
  CHECK(m.ndcg == Catch::Approx(0.5).margin(1e-6));
  CHECK(m.count == 1);
}

TEST_CASE("rank-1 everywhere saturates every metric") {
  MetricsAtK m = metrics_at_k({1, 1, 1, 1}, 10);
  CHECK(m.rc == Catch::Approx(1.0).margin(1e-12));
  CHECK(m.mrr == Catch::Approx(1.0).margin(1e-12));
  CHECK(m.ndcg == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("ranks beyond K contribute zero") {
  MetricsAtK m = metrics_at_k({11, 42}, 10);
  CHECK(m.rc == 0.0);
  CHECK(m.mrr == 0.0);
  CHECK(m.ndcg == 0.0);
  CHECK(m.count == 2);

  MetricsAtK edge = metrics_at_k({10}, 10);
  CHECK(edge.rc == Catch::Approx(1.0));
}

TEST_CASE("metrics are averaged over all examples, hits or not") {
  MetricsAtK m = metrics_at_k({1, 20}, 10);
  CHECK(m.rc == Catch::Approx(0.5).margin(1e-12));
  CHECK(m.mrr == Catch::Approx(0.5).margin(1e-12));
  CHECK(m.ndcg == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("metric edge cases are rejected or defined") {
  CHECK_THROWS_AS(metrics_at_k({1}, 0), ConfigError);
  CHECK_THROWS_AS(metrics_at_k({0}, 10), ContractError);
  MetricsAtK empty = metrics_at_k({}, 10);
  CHECK(empty.count == 0);
  CHECK(empty.rc == 0.0);
}

TEST_CASE("pointwise metric inequalities hold on random rank lists") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> ranks;
    for (int i = 0; i < 20; ++i) ranks.push_back(1 + rng.next_below(30));
    MetricsAtK m = metrics_at_k(ranks, 10);
    CHECK(m.rc >= m.ndcg);
    CHECK(m.ndcg >= m.mrr);
    CHECK(m.mrr >= 0.0);
    CHECK(m.rc <= 1.0);
  }
}

TEST_CASE("metrics match a per-rank brute force") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> ranks;
    std::size_t count = 1 + rng.next_below(40);
    for (std::size_t i = 0; i < count; ++i) ranks.push_back(1 + rng.next_below(25));
    std::size_t k = 1 + rng.next_below(15);

    double rc = 0.0, mrr = 0.0, ndcg = 0.0;
    for (std::size_t r : ranks) {
      if (r > k) continue;
      rc += 1.0;
      mrr += 1.0 / static_cast<double>(r);
      ndcg += std::log(2.0) / std::log(static_cast<double>(r) + 1.0);
    }
    MetricsAtK m = metrics_at_k(ranks, k);
    CHECK(m.rc == Catch::Approx(rc / static_cast<double>(count)).margin(1e-12));
    CHECK(m.mrr == Catch::Approx(mrr / static_cast<double>(count)).margin(1e-12));
    CHECK(m.ndcg == Catch::Approx(ndcg / static_cast<double>(count)).margin(1e-12));
  }
}

TEST_CASE("popularity baseline counts training interactions per domain") {
  std::istringstream is("1\t10:A,20:B,10:A\n2\t11:A,20:B\n3\t10:A,21:B\n");
  Dataset ds = parse_dataset(is);
  std::vector<double> pop_a = popularity_scores(ds, Domain::A);
  std::vector<double> pop_b = popularity_scores(ds, Domain::B);
  REQUIRE(pop_a.size() == ds.m);
  REQUIRE(pop_b.size() == ds.n);
  CHECK(pop_a[0] == 3.0);  // item 10
  CHECK(pop_a[1] == 1.0);  // item 11
  CHECK(pop_b[0] == 2.0);  // item 20
  CHECK(pop_b[1] == 1.0);  // item 21

  // The popular item ranks first; an unseen target ranks by id among zeros.
  CHECK(rank_of_target(pop_a, 0) == 1);
  CHECK(rank_of_target(pop_b, 1) == 2);
}

TEST_CASE("report formatting carries every row") {
  DomainReport r1{"A", "eagcl", {metrics_at_k({1}, 5), metrics_at_k({3}, 10)}};
  DomainReport r2{"B", "popularity", {metrics_at_k({2, 4}, 10)}};
  std::string csv = format_report_csv({r1, r2});
  CHECK(csv.find("model,domain,K,rc,mrr,ndcg,count") == 0);
  CHECK(csv.find("eagcl,A,5,1,1,1,1") != std::string::npos);
  CHECK(csv.find("eagcl,A,10,") != std::string::npos);
  CHECK(csv.find("popularity,B,10,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  std::string text = format_report_text({r1, r2});
  CHECK(text.find("model") != std::string::npos);
  CHECK(text.find("eagcl") != std::string::npos);
  CHECK(text.find("popularity") != std::string::npos);
  CHECK(text.find("0.3333") != std::string::npos);  // MRR of rank 3 at K=10
}
