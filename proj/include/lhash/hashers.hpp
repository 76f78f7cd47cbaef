#ifndef LHASH_HASHERS_HPP
#define LHASH_HASHERS_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lhash/cluster.hpp"
#include "lhash/hash_plan.hpp"
#include "lhash/rng.hpp"

// Hash plan builders: the learned (clustering-derived) hash plus the
// baselines it is compared against.

namespace lhash {

/// One logical table in a model, before any compression decision.
struct TableSpec {
    std::uint64_t height = 0;
    std::uint64_t width = 1;
    bool compress = false;
};

/// N x D latent feature matrix, row-major.
struct LatentMatrix {
    std::uint64_t n = 0;
    std::uint32_t d = 0;
    std::vector<double> data;  // n * d

    double at(std::uint64_t id, std::uint32_t dim) const { return data[id * d + dim]; }

    std::vector<double> column(std::uint32_t dim) const {
        std::vector<double> col(n);
        for (std::uint64_t i = 0; i < n; ++i) col[i] = at(i, dim);
        return col;
    }
};

/// Cluster each internal table's latent dimension independently and use the
/// resulting partition as the id -> row mapping. SUM mode splits the row
/// budget across tables (remainder rows to table 0); CONCAT gives every
/// table the full row budget and splits the embedding width downstream.
inline HashPlan learned_hash(const LatentMatrix& latent, const std::vector<std::uint64_t>& counts,
                             std::uint64_t target_rows, std::uint32_t num_internal_tables,
                             MergeMode merge_mode, ClusterConfig cluster_cfg) {
    if (num_internal_tables == 0 || num_internal_tables > latent.d)
        throw std::invalid_argument("learned_hash: need 1 <= tables <= teacher dimension D");
    if (target_rows >= latent.n)
        throw std::invalid_argument("learned_hash: target_rows >= N requests no compression");
    if (counts.size() != latent.n)
        throw std::invalid_argument("learned_hash: counts length != N");

    const std::uint32_t t_count = num_internal_tables;
    HashPlan plan;
    plan.original_height = latent.n;
    plan.merge_mode = merge_mode;
    plan.method_tag = "learned(T=" + std::to_string(t_count) + "," + merge_mode_name(merge_mode) +
                      ",freq_filter=" + (cluster_cfg.use_frequency_filter ? "1" : "0") +
                      ",freq_weight=" + (cluster_cfg.use_frequency_weighting ? "1" : "0") + ")";

    for (std::uint32_t t = 0; t < t_count; ++t) {
        std::uint64_t budget;
        if (merge_mode == MergeMode::Sum) {
            budget = target_rows / t_count;
            if (t == 0) budget += target_rows % t_count;
        } else {
            budget = target_rows;
        }
        if (budget == 0) throw std::invalid_argument("learned_hash: zero row budget for a table");

        ClusterConfig cfg = cluster_cfg;
        cfg.target = budget;
        auto result = run_clustering(latent.column(t), counts, cfg);

        TableMapping tm;
        tm.rows = result.set.size();  // may undershoot the budget
        tm.mapping.assign(result.assignment.begin(), result.assignment.end());
        plan.tables.push_back(std::move(tm));
    }
    plan.validate();
    return plan;
}

/// The hashing trick with the modulo operator.
inline HashPlan modulo_hash(std::uint64_t n, std::uint64_t target_rows) {
    if (n == 0 || target_rows == 0) throw std::invalid_argument("modulo_hash: empty space");
    HashPlan plan;
    plan.original_height = n;
    plan.merge_mode = MergeMode::Sum;
    plan.method_tag = "modulo";
    TableMapping tm;
    tm.rows = std::min(n, target_rows);
    tm.mapping.resize(n);
    for (std::uint64_t id = 0; id < n; ++id) tm.mapping[id] = id % target_rows;
    plan.tables.push_back(std::move(tm));
    plan.validate();
    return plan;
}

/// Quotient-remainder compositional plan: two internal tables whose (q, r)
/// pair is unique per id.
inline HashPlan qr_hash(std::uint64_t n, std::uint64_t target_rows,
                        MergeMode merge_mode = MergeMode::Sum) {
    if (n == 0 || target_rows < 2) throw std::invalid_argument("qr_hash: need target_rows >= 2");
    HashPlan plan;
    plan.original_height = n;
    plan.merge_mode = merge_mode;
    plan.method_tag = "qr";

    TableMapping rem;
    rem.rows = std::min(n, target_rows);
    rem.mapping.resize(n);
    TableMapping quo;
    quo.rows = (n + target_rows - 1) / target_rows;
    quo.mapping.resize(n);
    for (std::uint64_t id = 0; id < n; ++id) {
        rem.mapping[id] = id % target_rows;
        quo.mapping[id] = id / target_rows;
    }
    plan.tables.push_back(std::move(rem));
    plan.tables.push_back(std::move(quo));
    plan.validate();
    return plan;
}

/// Frequency-based double hashing: the top retain_frac of ids by access
/// count get private rows in a dedicated table; everything else is double
/// hashed into two shared tables with independently seeded mixers.
inline HashPlan freq_double_hash(const std::vector<std::uint64_t>& counts, std::uint64_t n,
                                 std::uint64_t target_rows, double retain_frac,
                                 std::uint64_t seed_a, std::uint64_t seed_b) {
    if (counts.size() != n) throw std::invalid_argument("freq_double_hash: counts length != N");
    if (retain_frac < 0.0 || retain_frac >= 1.0)
        throw std::invalid_argument("freq_double_hash: retain_frac must be in [0, 1)");
    const std::uint64_t retained = static_cast<std::uint64_t>(retain_frac * static_cast<double>(n));
    if (target_rows <= retained + 1)
        throw std::invalid_argument("freq_double_hash: row budget too small for retained ids");
    const std::uint64_t shared_rows = (target_rows - retained) / 2;
    if (shared_rows == 0) throw std::invalid_argument("freq_double_hash: no rows left for shared tables");

    // Top `retained` ids by count, ties by smaller id.
    std::vector<std::uint64_t> order(n);
    std::iota(order.begin(), order.end(), std::uint64_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint64_t a, std::uint64_t b) { return counts[a] > counts[b]; });
    std::vector<std::uint64_t> retained_row(n, kSkip);
    for (std::uint64_t r = 0; r < retained; ++r) retained_row[order[r]] = r;

    HashPlan plan;
    plan.original_height = n;
    plan.merge_mode = MergeMode::Sum;
    plan.method_tag = "fdh(retain=" + std::to_string(retain_frac) + ")";

    TableMapping shared_a, shared_b;
    shared_a.rows = shared_b.rows = shared_rows;
    shared_a.mapping.assign(n, kSkip);
    shared_b.mapping.assign(n, kSkip);
    for (std::uint64_t id = 0; id < n; ++id) {
        if (retained_row[id] != kSkip) continue;
        shared_a.mapping[id] = mix64(id ^ mix64(seed_a)) % shared_rows;
        shared_b.mapping[id] = mix64(id ^ mix64(seed_b)) % shared_rows;
    }

    if (retained > 0) {
        TableMapping dedicated;
        dedicated.rows = retained;
        dedicated.mapping = std::move(retained_row);
        plan.tables.push_back(std::move(dedicated));
    }
    plan.tables.push_back(std::move(shared_a));
    plan.tables.push_back(std::move(shared_b));
    plan.validate();
    return plan;
}

/// Identity plan (no compression): one table, id -> id.
inline HashPlan identity_plan(std::uint64_t n) {
    HashPlan plan;
    plan.original_height = n;
    plan.merge_mode = MergeMode::Sum;
    plan.method_tag = "identity";
    TableMapping tm;
    tm.rows = n;
    tm.mapping.resize(n);
    std::iota(tm.mapping.begin(), tm.mapping.end(), std::uint64_t{0});
    plan.tables.push_back(std::move(tm));
    return plan;
}

/// Mark which tables are worth compressing: only those at or above the
/// cutoff height. Small tables contribute little memory but collisions in
/// them hurt quality.
inline void cutoff_filter(std::vector<TableSpec>& specs, std::uint64_t cutoff_rows) {
    for (auto& s : specs) s.compress = s.height >= cutoff_rows;
}

}  // namespace lhash

#endif  // LHASH_HASHERS_HPP
