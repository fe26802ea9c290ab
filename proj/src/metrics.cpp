#include "mqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mqr {

namespace {

void check_k(int k) {
    if (k < 1) throw std::invalid_argument("metric cutoff k must be >= 1");
}

std::set<std::string> gold_set(const std::vector<std::string>& gold_ids) {
    return {gold_ids.begin(), gold_ids.end()};
}

}  // namespace

double mrr_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k) {
    check_k(k);
    auto golds = gold_set(gold_ids);
    for (const FusedEntry& e : fused.entries) {
        if (e.fused_rank > k) break;
        if (golds.count(e.doc_id)) return 1.0 / static_cast<double>(e.fused_rank);
    }
    return 0.0;
}

double ndcg_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k) {
    check_k(k);
    auto golds = gold_set(gold_ids);
    double dcg = 0.0;
    for (const FusedEntry& e : fused.entries) {
        if (e.fused_rank > k) break;
        if (golds.count(e.doc_id)) dcg += 1.0 / std::log2(static_cast<double>(e.fused_rank) + 1.0);
    }
    const std::size_t ideal = std::min<std::size_t>(golds.size(), static_cast<std::size_t>(k));
    double idcg = 0.0;
    for (std::size_t i = 1; i <= ideal; ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double recall_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k) {
    check_k(k);
    auto golds = gold_set(gold_ids);
    if (golds.empty()) return 0.0;
    std::size_t hit = 0;
    for (const FusedEntry& e : fused.entries) {
        if (e.fused_rank > k) break;
        if (golds.count(e.doc_id)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(golds.size());
}

double map_at_k(const FusedRanking& fused, const std::vector<std::string>& gold_ids, int k) {
    check_k(k);
    auto golds = gold_set(gold_ids);
    if (golds.empty()) return 0.0;
    double sum_precision = 0.0;
    std::size_t hits = 0;
    for (const FusedEntry& e : fused.entries) {
        if (e.fused_rank > k) break;
        if (golds.count(e.doc_id)) {
            ++hits;
            sum_precision += static_cast<double>(hits) / static_cast<double>(e.fused_rank);
        }
    }
    return sum_precision / static_cast<double>(golds.size());
}

EvalResult evaluate(const std::vector<QueryInstance>& queries,
                    const std::vector<FusedRanking>& fused, const std::vector<int>& ks) {
    if (queries.size() != fused.size()) {
        throw std::invalid_argument("evaluate: one fused ranking per query required");
    }
    if (queries.empty()) throw std::invalid_argument("evaluate: no queries");

    EvalResult result;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto& row = result.per_query[queries[i].id];
        for (int k : ks) {
            const std::string suffix = "@" + std::to_string(k);
            row["MRR" + suffix] = mrr_at_k(fused[i], queries[i].gold_ids, k);
            row["NDCG" + suffix] = ndcg_at_k(fused[i], queries[i].gold_ids, k);
            row["R" + suffix] = recall_at_k(fused[i], queries[i].gold_ids, k);
            row["MAP" + suffix] = map_at_k(fused[i], queries[i].gold_ids, k);
        }
    }
    for (const auto& [qid, row] : result.per_query) {
        for (const auto& [name, value] : row) result.means[name] += value;
    }
    const double n = static_cast<double>(queries.size());
    for (auto& [name, value] : result.means) value /= n;
    return result;
}

std::string format_eval_table(const std::vector<std::pair<std::string, EvalResult>>& rows) {
    if (rows.empty()) return "";

    // Columns: union of metric names, sorted by (metric family, cutoff).
    auto column_key = [](const std::string& name) {
        auto at = name.find('@');
        int k = at == std::string::npos ? 0 : std::stoi(name.substr(at + 1));
        static const std::map<std::string, int> family_order = {
            {"MRR", 0}, {"NDCG", 1}, {"R", 2}, {"MAP", 3}};
        std::string family = at == std::string::npos ? name : name.substr(0, at);
        auto it = family_order.find(family);
        int fo = it == family_order.end() ? 9 : it->second;
        return std::pair<int, int>(fo, k);
    };
    std::vector<std::string> columns;
    for (const auto& [run, result] : rows) {
        for (const auto& [name, value] : result.means) {
            if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
                columns.push_back(name);
            }
        }
    }
    std::sort(columns.begin(), columns.end(),
              [&](const std::string& a, const std::string& b) { return column_key(a) < column_key(b); });

    std::size_t name_width = 6;
    for (const auto& [run, result] : rows) name_width = std::max(name_width, run.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << "method";
    for (const std::string& col : columns) out << std::right << std::setw(9) << col;
    out << '\n';
    for (const auto& [run, result] : rows) {
        out << std::left << std::setw(static_cast<int>(name_width) + 2) << run;
        for (const std::string& col : columns) {
            auto it = result.means.find(col);
            if (it == result.means.end()) {
                out << std::right << std::setw(9) << "-";
            } else {
                out << std::right << std::setw(9) << std::fixed << std::setprecision(4)
                    << it->second;
            }
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace mqr
