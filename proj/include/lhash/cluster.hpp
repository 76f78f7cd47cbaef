#ifndef LHASH_CLUSTER_HPP
#define LHASH_CLUSTER_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Frequency-aware 1D multi-merge agglomerative clustering. Ids live on a
// line (one latent dimension); only adjacent clusters may merge, up to K
// pairs per step, selected by a three-stage filter over frequency score,
// distance, and combined size.

namespace lhash {

struct Cluster {
    double value = 0.0;
    std::uint64_t size = 0;   // number of original ids absorbed
    std::uint64_t count = 0;  // summed access frequency
    std::vector<std::uint32_t> members;
};

struct ClusterConfig {
    std::uint64_t k = 1;         // target merges per step
    std::uint64_t target = 1;    // final cluster count
    std::uint64_t size_max = 0;  // 0 = default 4 * ceil(N / target)
    bool use_frequency_filter = true;
    bool use_frequency_weighting = true;
    double stage1_factor = 2.0;   // candidate pool = stage1_factor * k_eff
    double stage2_factor = 0.75;  // distance stage keeps stage2_factor * M
    double stage3_factor = 0.5;   // size fallback keeps stage3_factor * M

    std::uint64_t effective_size_max(std::uint64_t n) const {
        if (size_max != 0) return size_max;
        return 4 * ((n + target - 1) / target);
    }
};

/// A scored adjacent pair (right = left + 1).
struct MergeCandidate {
    std::size_t left = 0;
    double frequency_score = 1.0;
    double distance = 0.0;
    std::uint64_t combined_size = 0;
};

/// Sorted-by-value cluster sequence with conserved totals.
class ClusterSet {
public:
    ClusterSet() = default;
    explicit ClusterSet(std::vector<Cluster> clusters) : clusters_(std::move(clusters)) {
        for (const auto& c : clusters_) {
            total_size_ += c.size;
            total_count_ += c.count;
        }
    }

    std::size_t size() const { return clusters_.size(); }
    const Cluster& operator[](std::size_t i) const { return clusters_[i]; }
    const std::vector<Cluster>& clusters() const { return clusters_; }
    std::vector<Cluster>& clusters() { return clusters_; }
    std::uint64_t total_size() const { return total_size_; }
    std::uint64_t total_count() const { return total_count_; }

    bool sorted_by_value() const {
        for (std::size_t i = 1; i < clusters_.size(); ++i)
            if (clusters_[i].value < clusters_[i - 1].value) return false;
        return true;
    }

private:
    std::vector<Cluster> clusters_;
    std::uint64_t total_size_ = 0;
    std::uint64_t total_count_ = 0;
};

/// One singleton cluster per id, sorted ascending by value, ties broken by
/// ascending id so results are deterministic.
inline ClusterSet init_clusters(const std::vector<double>& values,
                                const std::vector<std::uint64_t>& counts) {
    if (values.empty() || values.size() != counts.size())
        throw std::invalid_argument("init_clusters: need N >= 1 values with matching counts");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("init_clusters: non-finite value");

    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });

    std::vector<Cluster> clusters;
    clusters.reserve(values.size());
    for (std::uint32_t id : order)
        clusters.push_back(Cluster{values[id], 1, counts[id], {id}});
    return ClusterSet(std::move(clusters));
}

/// Per-cluster normalized counts: count / ||counts||_2 + 1, all in [1, 2].
/// All-zero counts give all ones.
inline std::vector<double> norm_counts(const ClusterSet& set) {
    if (set.size() == 0) throw std::invalid_argument("norm_counts: empty set");
    double sumsq = 0.0;
    for (const auto& c : set.clusters()) {
        double x = static_cast<double>(c.count);
        sumsq += x * x;
    }
    std::vector<double> out(set.size(), 1.0);
    if (sumsq == 0.0) return out;
    double norm = std::sqrt(sumsq);
    for (std::size_t i = 0; i < set.size(); ++i)
        out[i] = static_cast<double>(set[i].count) / norm + 1.0;
    return out;
}

/// Product of the two neighbors' normalized counts; in [1, 4]. Low scores
/// mark pairs of rarely-accessed (near-random) clusters, merged first.
inline double frequency_score(const ClusterSet& set, const std::vector<double>& norm,
                              std::size_t left) {
    assert(left + 1 < set.size());
    (void)set;
    return norm[left] * norm[left + 1];
}

namespace detail {

// Keep the `keep` candidates with the smallest key, ties by smaller left
// index; result sorted by (key, left).
template <typename Key>
inline void keep_smallest(std::vector<MergeCandidate>& cands, std::size_t keep, Key key) {
    auto less = [&](const MergeCandidate& a, const MergeCandidate& b) {
        auto ka = key(a), kb = key(b);
        if (ka != kb) return ka < kb;
        return a.left < b.left;
    };
    if (keep < cands.size()) {
        std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep) - 1,
                         cands.end(), less);
        cands.resize(keep);
    }
    std::sort(cands.begin(), cands.end(), less);
}

}  // namespace detail

/// Three-stage candidate selection over all adjacent pairs:
///   1. frequency filter (optional): keep the M lowest-scoring pairs
///   2. distance: keep the floor(stage2_factor*M) closest pairs
///   3. size: pairs under size_max win (up to k_eff, closest first);
///      if none qualify, the floor(stage3_factor*M) smallest combined sizes.
/// M = floor(stage1_factor * k_eff), k_eff = min(k, |set| - target).
inline std::vector<MergeCandidate> select_candidates(const ClusterSet& set,
                                                     const ClusterConfig& cfg) {
    if (set.size() <= cfg.target)
        throw std::logic_error("select_candidates: cluster count already at or below target");

    const std::uint64_t k_eff = std::min<std::uint64_t>(cfg.k, set.size() - cfg.target);
    const std::size_t m = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.stage1_factor * static_cast<double>(k_eff)));
    const std::uint64_t size_max = cfg.effective_size_max(set.total_size());

    std::vector<MergeCandidate> cands;
    cands.reserve(set.size() - 1);
    std::vector<double> norm;
    if (cfg.use_frequency_filter) norm = norm_counts(set);
    for (std::size_t i = 0; i + 1 < set.size(); ++i) {
        MergeCandidate c;
        c.left = i;
        c.distance = set[i + 1].value - set[i].value;
        c.combined_size = set[i].size + set[i + 1].size;
        if (cfg.use_frequency_filter) c.frequency_score = norm[i] * norm[i + 1];
        cands.push_back(c);
    }

    // Stage 1: frequency.
    if (cfg.use_frequency_filter)
        detail::keep_smallest(cands, m, [](const MergeCandidate& c) { return c.frequency_score; });

    // Stage 2: distance.
    const std::size_t keep2 = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.stage2_factor * static_cast<double>(m)));
    detail::keep_smallest(cands, keep2, [](const MergeCandidate& c) { return c.distance; });

    // Stage 3: size.
    std::vector<MergeCandidate> under;
    for (const auto& c : cands)
        if (c.combined_size < size_max) under.push_back(c);
    if (!under.empty()) {
        detail::keep_smallest(under, static_cast<std::size_t>(k_eff),
                              [](const MergeCandidate& c) { return c.distance; });
        return under;
    }
    const std::size_t keep3 = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.stage3_factor * static_cast<double>(m)));
    detail::keep_smallest(cands, keep3, [](const MergeCandidate& c) { return c.combined_size; });
    return cands;
}

/// A contiguous run of cluster indices [first, last] to merge as one.
struct MergeGroup {
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive; first == last means unmerged
    std::size_t width() const { return last - first + 1; }
};

/// Unify overlapping candidates into maximal chains, then split any chain
/// whose total size exceeds size_max into pairs left to right (a trailing
/// odd cluster stays unmerged). Split pairs were all selected candidates,
/// since a chain only forms from consecutive overlapping pairs.
inline std::vector<MergeGroup> unify_and_split(const ClusterSet& set,
                                               std::vector<MergeCandidate> candidates,
                                               std::uint64_t size_max) {
    std::sort(candidates.begin(), candidates.end(),
              [](const MergeCandidate& a, const MergeCandidate& b) { return a.left < b.left; });

    std::vector<MergeGroup> chains;
    for (const auto& c : candidates) {
        if (!chains.empty() && c.left <= chains.back().last)
            chains.back().last = c.left + 1;
        else
            chains.push_back(MergeGroup{c.left, c.left + 1});
    }

    std::vector<MergeGroup> out;
    for (const auto& chain : chains) {
        std::uint64_t total = 0;
        for (std::size_t i = chain.first; i <= chain.last; ++i) total += set[i].size;
        if (total <= size_max) {
            out.push_back(chain);
            continue;
        }
        std::size_t i = chain.first;
        for (; i + 1 <= chain.last; i += 2) out.push_back(MergeGroup{i, i + 1});
        if (i == chain.last) out.push_back(MergeGroup{i, i});  // trailing odd, unmerged
    }
    return out;
}

/// Merge a contiguous group: sizes and counts sum, members union. Value is
/// the arithmetic mean, or the count-weighted mean when weighting is on
/// (arithmetic mean again if the group's total count is zero).
inline Cluster merge_group(const std::vector<Cluster>& group, bool use_frequency_weighting) {
    if (group.empty()) throw std::logic_error("merge_group: empty group");
    Cluster out;
    double value_sum = 0.0, weighted_sum = 0.0;
    for (const auto& c : group) {
        out.size += c.size;
        out.count += c.count;
        out.members.insert(out.members.end(), c.members.begin(), c.members.end());
        value_sum += c.value;
        weighted_sum += static_cast<double>(c.count) * c.value;
    }
    if (use_frequency_weighting && out.count > 0)
        out.value = weighted_sum / static_cast<double>(out.count);
    else
        out.value = value_sum / static_cast<double>(group.size());
    return out;
}

struct ClusterResult {
    ClusterSet set;
    std::vector<std::uint32_t> assignment;  // id -> final cluster index
    std::uint64_t steps = 0;
};

/// Full clustering run: filter, unify/split, merge until at most `target`
/// clusters remain. May undershoot the target when a chain merge collapses
/// several clusters in the final step; the actual count is in the result.
inline ClusterResult run_clustering(const std::vector<double>& values,
                                    const std::vector<std::uint64_t>& counts,
                                    const ClusterConfig& cfg) {
    if (cfg.target == 0 || cfg.target >= values.size())
        throw std::invalid_argument("run_clustering: need 0 < target < N");
    ClusterSet set = init_clusters(values, counts);
    const std::uint64_t n = set.total_size();
    const std::uint64_t total_count = set.total_count();
    const std::uint64_t size_max = cfg.effective_size_max(n);

    std::uint64_t steps = 0;
    while (set.size() > cfg.target) {
        auto cands = select_candidates(set, cfg);
        auto groups = unify_and_split(set, std::move(cands), size_max);

        std::vector<Cluster> next;
        next.reserve(set.size());
        std::size_t pos = 0;
        auto& cur = set.clusters();
        for (const auto& g : groups) {
            for (; pos < g.first; ++pos) next.push_back(std::move(cur[pos]));
            if (g.width() == 1) {
                next.push_back(std::move(cur[pos++]));
                continue;
            }
            std::vector<Cluster> group(std::make_move_iterator(cur.begin() + static_cast<std::ptrdiff_t>(g.first)),
                                       std::make_move_iterator(cur.begin() + static_cast<std::ptrdiff_t>(g.last) + 1));
            next.push_back(merge_group(group, cfg.use_frequency_weighting));
            pos = g.last + 1;
        }
        for (; pos < cur.size(); ++pos) next.push_back(std::move(cur[pos]));

        if (next.size() >= set.size())
            throw std::logic_error("run_clustering: step made no progress");
        set = ClusterSet(std::move(next));
        ++steps;

        // Merged values stay inside their group's range and groups are
        // contiguous, so sortedness must survive without re-sorting.
        if (!set.sorted_by_value())
            throw std::logic_error("run_clustering: sort invariant violated");
        if (set.total_size() != n || set.total_count() != total_count)
            throw std::logic_error("run_clustering: conservation invariant violated");
    }

    ClusterResult result;
    result.assignment.assign(n, 0);
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::uint32_t id : set[i].members)
            result.assignment[id] = static_cast<std::uint32_t>(i);
    result.set = std::move(set);
    result.steps = steps;
    return result;
}

}  // namespace lhash

#endif  // LHASH_CLUSTER_HPP
