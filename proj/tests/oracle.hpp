#ifndef LHASH_TESTS_ORACLE_HPP
#define LHASH_TESTS_ORACLE_HPP

// Test-only reference implementations, kept independent of the library's
// code paths they are used to check.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

/// Naive 1D agglomerative clustering: repeatedly merge the adjacent pair
/// with the smallest value distance (ties to the smaller left position),
/// arithmetic-mean value update, until `target` clusters remain. Returns
/// the id -> cluster-index assignment over sorted cluster order.
inline std::vector<std::uint32_t> naive_agglomerative(const std::vector<double>& values,
                                                      std::size_t target) {
    struct C {
        double value;
        std::vector<std::uint32_t> members;
    };
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    std::vector<C> clusters;
    for (std::uint32_t id : order) clusters.push_back(C{values[id], {id}});

    while (clusters.size() > target) {
        std::size_t best = 0;
        double best_dist = clusters[1].value - clusters[0].value;
        for (std::size_t i = 1; i + 1 < clusters.size(); ++i) {
            double d = clusters[i + 1].value - clusters[i].value;
            if (d < best_dist) {
                best_dist = d;
                best = i;
            }
        }
        clusters[best].value = 0.5 * (clusters[best].value + clusters[best + 1].value);
        clusters[best].members.insert(clusters[best].members.end(),
                                      clusters[best + 1].members.begin(),
                                      clusters[best + 1].members.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    }

    std::vector<std::uint32_t> assignment(values.size());
    for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::uint32_t id : clusters[i].members)
            assignment[id] = static_cast<std::uint32_t>(i);
    return assignment;
}

/// AUC by brute-force pair counting: concordant pairs count 1, ties 1/2.
inline double brute_auc(const std::vector<double>& scores,
                        const std::vector<std::uint8_t>& labels) {
    double sum = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                sum += 1.0;
            else if (scores[i] == scores[j])
                sum += 0.5;
        }
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace oracle

#endif  // LHASH_TESTS_ORACLE_HPP
