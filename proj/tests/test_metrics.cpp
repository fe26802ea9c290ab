#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "mqr/metrics.hpp"
#include "oracles.hpp"

using namespace mqr;

namespace {

FusedRanking fused_of(const std::vector<std::string>& ids) {
    FusedRanking fused;
    int rank = 1;
    for (const auto& id : ids) fused.entries.push_back({id, 0.0, 0.0, rank++});
    return fused;
}

}  // namespace

TEST_CASE("mrr_at_k worked examples") {
    CHECK(mrr_at_k(fused_of({"a", "g", "b"}), {"g"}, 3) == 0.5);
    CHECK(mrr_at_k(fused_of({"a", "b", "c", "g"}), {"g"}, 3) == 0.0);
    // Golds at ranks 3 and 1: the first gold governs.
    CHECK(mrr_at_k(fused_of({"g1", "x", "g2"}), {"g2", "g1"}, 3) == 1.0);
}

TEST_CASE("ndcg_at_k worked examples") {
    // Single gold at rank 2, K=3: 1/log2(3).
    CHECK(ndcg_at_k(fused_of({"x", "g", "y"}), {"g"}, 3) ==
          doctest::Approx(0.6309297535714575).epsilon(1e-12));
    // All golds packed at the top: ideal ranking.
    CHECK(ndcg_at_k(fused_of({"g1", "g2", "x"}), {"g1", "g2"}, 3) == 1.0);
    CHECK(ndcg_at_k(fused_of({"x", "y", "z"}), {"g"}, 3) == 0.0);
}

TEST_CASE("recall_at_k worked examples") {
    FusedRanking ten = fused_of({"g1", "a", "b", "c", "d", "e", "f", "h", "i", "j"});
    CHECK(recall_at_k(ten, {"g1", "g2"}, 10) == 0.5);
    CHECK(recall_at_k(fused_of({"g"}), {"g"}, 1) == 1.0);
    // K beyond the list length: whatever fraction the list contains.
    CHECK(recall_at_k(fused_of({"x", "g1"}), {"g1", "g2"}, 100) == 0.5);
    CHECK(recall_at_k(fused_of({"g1", "g2"}), {"g1", "g2"}, 100) == 1.0);
}

TEST_CASE("map_at_k worked examples") {
    // Golds at ranks 1 and 4, K=10: (1/1 + 2/4) / 2 = 0.75.
    CHECK(map_at_k(fused_of({"g1", "x", "y", "g2"}), {"g1", "g2"}, 10) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(map_at_k(fused_of({"g", "x"}), {"g"}, 10) == 1.0);
    CHECK(map_at_k(fused_of({"x", "y"}), {"g"}, 10) == 0.0);
}

TEST_CASE("metrics match brute-force recomputation on random instances") {
    std::mt19937_64 rng(909);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 1 + static_cast<int>(rng() % 25);
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) ids.push_back("doc" + std::to_string(i));
        std::shuffle(ids.begin(), ids.end(), rng);

        std::set<std::string> golds;
        int n_golds = 1 + static_cast<int>(rng() % 4);
        while (static_cast<int>(golds.size()) < n_golds) {
            golds.insert("doc" + std::to_string(rng() % 30));  // some never retrieved
        }
        std::vector<std::string> gold_vec(golds.begin(), golds.end());
        int k = 1 + static_cast<int>(rng() % 15);

        FusedRanking fused = fused_of(ids);
        CHECK(mrr_at_k(fused, gold_vec, k) == doctest::Approx(oracle::mrr(ids, golds, k)).epsilon(1e-9));
        CHECK(ndcg_at_k(fused, gold_vec, k) ==
              doctest::Approx(oracle::ndcg(ids, golds, k)).epsilon(1e-9));
        CHECK(recall_at_k(fused, gold_vec, k) ==
              doctest::Approx(oracle::recall(ids, golds, k)).epsilon(1e-9));
        CHECK(map_at_k(fused, gold_vec, k) ==
              doctest::Approx(oracle::average_precision(ids, golds, k)).epsilon(1e-9));
    }
}

TEST_CASE("recall and MRR are monotone non-decreasing in K") {
    std::mt19937_64 rng(311);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> ids;
        for (int i = 0; i < 20; ++i) ids.push_back("doc" + std::to_string(i));
        std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::string> golds = {"doc" + std::to_string(rng() % 20),
                                          "doc" + std::to_string(rng() % 20)};
        FusedRanking fused = fused_of(ids);
        for (int k = 1; k < 25; ++k) {
            CHECK(recall_at_k(fused, golds, k + 1) >= recall_at_k(fused, golds, k));
            CHECK(mrr_at_k(fused, golds, k + 1) >= mrr_at_k(fused, golds, k));
        }
    }
}

TEST_CASE("NDCG is monotone in K for single-gold queries") {
    // With several golds the ideal DCG itself grows with K, so the ratio can
    // dip; with one gold the normalizer is constant and growth is genuine.
    std::mt19937_64 rng(317);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> ids;
        for (int i = 0; i < 20; ++i) ids.push_back("doc" + std::to_string(i));
        std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::string> golds = {"doc" + std::to_string(rng() % 20)};
        FusedRanking fused = fused_of(ids);
        for (int k = 1; k < 25; ++k) {
            CHECK(ndcg_at_k(fused, golds, k + 1) >= ndcg_at_k(fused, golds, k));
        }
    }
}

TEST_CASE("metrics ignore scores entirely") {
    FusedRanking plain = fused_of({"a", "g", "b"});
    FusedRanking rescored = plain;
    for (auto& e : rescored.entries) {
        e.P = 42.0 - e.fused_rank;
        e.S = 1000.0 * e.fused_rank;
    }
    for (int k : {1, 2, 3}) {
        CHECK(mrr_at_k(plain, {"g"}, k) == mrr_at_k(rescored, {"g"}, k));
        CHECK(ndcg_at_k(plain, {"g"}, k) == ndcg_at_k(rescored, {"g"}, k));
        CHECK(recall_at_k(plain, {"g"}, k) == recall_at_k(rescored, {"g"}, k));
        CHECK(map_at_k(plain, {"g"}, k) == map_at_k(rescored, {"g"}, k));
    }
}

TEST_CASE("evaluate aggregates means over queries and formats a table") {
    QueryInstance q1{"q1", "one", {}, {"g1"}, {}};
    QueryInstance q2{"q2", "two", {}, {"g2"}, {}};
    std::vector<FusedRanking> fused = {fused_of({"g1", "x"}), fused_of({"x", "g2"})};

    EvalResult result = evaluate({q1, q2}, fused, {1, 2});
    CHECK(result.means.at("MRR@1") == 0.5);          // (1 + 0) / 2
    CHECK(result.means.at("MRR@2") == 0.75);         // (1 + 0.5) / 2
    CHECK(result.means.at("R@2") == 1.0);
    CHECK(result.per_query.at("q1").at("MRR@1") == 1.0);
    for (const auto& [name, value] : result.means) {
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
    }

    std::string table = format_eval_table({{"raw", result}, {"trained", result}});
    CHECK(table.find("method") != std::string::npos);
    CHECK(table.find("raw") != std::string::npos);
    CHECK(table.find("trained") != std::string::npos);
    CHECK(table.find("MRR@1") != std::string::npos);
}
