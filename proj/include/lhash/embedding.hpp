#ifndef LHASH_EMBEDDING_HPP
#define LHASH_EMBEDDING_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "lhash/hash_plan.hpp"
#include "lhash/io.hpp"
#include "lhash/rng.hpp"

// Lookup-table-indirected embedding layer. A logical embedding owns one or
// more internal weight tables plus a HashPlan; forward gathers one row per
// internal table per sample and merges by sum or concat, backward expands
// gradients back onto the touched rows.

namespace lhash {

template <typename T>
struct InternalTable {
    static_assert(std::is_floating_point_v<T>);
    std::uint64_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<T> weights;        // rows * cols, row-major
    std::vector<T> adagrad_state;  // one accumulator per row

    std::span<T> row(std::uint64_t r) { return {weights.data() + r * cols, cols}; }
    std::span<const T> row(std::uint64_t r) const { return {weights.data() + r * cols, cols}; }
};

/// Uniform init in [-scale, +scale], adagrad state zeroed. Deterministic
/// given the seed.
template <typename T>
InternalTable<T> init_weights(std::uint64_t rows, std::uint32_t cols, double scale,
                              std::uint64_t seed) {
    InternalTable<T> t;
    t.rows = rows;
    t.cols = cols;
    t.weights.resize(rows * cols);
    t.adagrad_state.assign(rows, T{0});
    Rng rng(seed);
    for (auto& w : t.weights) w = static_cast<T>(rng.uniform(-scale, scale));
    return t;
}

/// Per-table sparse row gradients, coalesced in first-touch order so
/// accumulation is deterministic.
template <typename T>
struct SparseGrad {
    std::vector<std::uint64_t> rows;
    std::vector<T> grads;  // rows.size() * cols
    std::vector<std::int64_t> slot_of_row;  // dense row -> slot index, -1 if untouched

    void reset(std::uint64_t table_rows) {
        rows.clear();
        grads.clear();
        slot_of_row.assign(table_rows, -1);
    }

    std::span<T> slot(std::uint64_t row, std::uint32_t cols) {
        auto& s = slot_of_row[row];
        if (s < 0) {
            s = static_cast<std::int64_t>(rows.size());
            rows.push_back(row);
            grads.resize(grads.size() + cols, T{0});
        }
        return {grads.data() + static_cast<std::size_t>(s) * cols, cols};
    }
};

template <typename T>
class LogicalEmbedding {
public:
    LogicalEmbedding() = default;

    /// Builds internal tables sized by the plan. SUM mode: every table is
    /// output_width wide. CONCAT: the width is split evenly across tables
    /// (remainder columns to table 0).
    LogicalEmbedding(HashPlan plan, std::uint32_t output_width, double init_scale,
                     std::uint64_t seed)
        : plan_(std::move(plan)), output_width_(output_width) {
        const auto t_count = static_cast<std::uint32_t>(plan_.tables.size());
        for (std::uint32_t t = 0; t < t_count; ++t) {
            std::uint32_t cols = output_width;
            if (plan_.merge_mode == MergeMode::Concat) {
                cols = output_width / t_count;
                if (t == 0) cols += output_width % t_count;
                if (cols == 0)
                    throw std::invalid_argument("LogicalEmbedding: width too small to concat-split");
            }
            tables_.push_back(init_weights<T>(plan_.tables[t].rows, cols, init_scale,
                                              mix64(seed ^ (0xe1b0 + t))));
        }
    }

    const HashPlan& plan() const { return plan_; }
    std::uint32_t output_width() const { return output_width_; }
    std::vector<InternalTable<T>>& tables() { return tables_; }
    const std::vector<InternalTable<T>>& tables() const { return tables_; }

    /// Gather + merge for a batch of ids; output is batch x output_width.
    void forward(std::span<const std::uint32_t> ids, std::vector<T>& out) const {
        out.assign(ids.size() * output_width_, T{0});
        for (std::size_t b = 0; b < ids.size(); ++b) {
            const std::uint32_t id = ids[b];
            if (id >= plan_.original_height)
                throw std::out_of_range("embedding lookup: id " + std::to_string(id) +
                                        " out of range [0, " +
                                        std::to_string(plan_.original_height) + ")");
            T* dst = out.data() + b * output_width_;
            std::uint32_t col_off = 0;
            for (std::size_t t = 0; t < tables_.size(); ++t) {
                const std::uint64_t row = plan_.tables[t].mapping[id];
                const auto cols = tables_[t].cols;
                if (row != kSkip) {
                    auto src = tables_[t].row(row);
                    if (plan_.merge_mode == MergeMode::Sum) {
                        for (std::uint32_t c = 0; c < cols; ++c) dst[c] += src[c];
                    } else {
                        for (std::uint32_t c = 0; c < cols; ++c) dst[col_off + c] = src[c];
                    }
                }
                if (plan_.merge_mode == MergeMode::Concat) col_off += cols;
            }
        }
    }

    /// Expand upstream gradients onto internal table rows. SUM: each
    /// participating row gets the full upstream row; CONCAT: its slice.
    /// Accumulation is in sample order.
    void backward(std::span<const std::uint32_t> ids, std::span<const T> upstream,
                  std::vector<SparseGrad<T>>& grads) const {
        if (upstream.size() != ids.size() * output_width_)
            throw std::logic_error("embedding backward: upstream shape mismatch");
        grads.resize(tables_.size());
        for (std::size_t t = 0; t < tables_.size(); ++t) grads[t].reset(tables_[t].rows);

        for (std::size_t b = 0; b < ids.size(); ++b) {
            const std::uint32_t id = ids[b];
            const T* up = upstream.data() + b * output_width_;
            std::uint32_t col_off = 0;
            for (std::size_t t = 0; t < tables_.size(); ++t) {
                const std::uint64_t row = plan_.tables[t].mapping[id];
                const auto cols = tables_[t].cols;
                if (row != kSkip) {
                    auto g = grads[t].slot(row, cols);
                    const T* src = plan_.merge_mode == MergeMode::Sum ? up : up + col_off;
                    for (std::uint32_t c = 0; c < cols; ++c) g[c] += src[c];
                }
                if (plan_.merge_mode == MergeMode::Concat) col_off += cols;
            }
        }
    }

private:
    HashPlan plan_;
    std::uint32_t output_width_ = 0;
    std::vector<InternalTable<T>> tables_;
};

/// Sparse rowwise adagrad: per touched row, the state accumulates the mean
/// squared gradient entry and scales a shared step size for the whole row.
/// Untouched rows are left bit-identical.
template <typename T>
void adagrad_step(InternalTable<T>& table, const SparseGrad<T>& grads, T lr, T eps) {
    const std::uint32_t cols = table.cols;
    for (std::size_t s = 0; s < grads.rows.size(); ++s) {
        const std::uint64_t r = grads.rows[s];
        const T* g = grads.grads.data() + s * cols;
        T sumsq = 0;
        for (std::uint32_t c = 0; c < cols; ++c) sumsq += g[c] * g[c];
        table.adagrad_state[r] += sumsq / static_cast<T>(cols);
        const T step = lr / std::sqrt(table.adagrad_state[r] + eps);
        T* w = table.weights.data() + r * cols;
        for (std::uint32_t c = 0; c < cols; ++c) w[c] -= step * g[c];
    }
}

// Weight file: magic "CEMB", version u16, scalar width u8 (4 or 8),
// table count u16, then per table rows u64, cols u32, weights row-major,
// adagrad state. Little-endian.
inline constexpr std::uint16_t kWeightFormatVersion = 1;

template <typename T>
std::vector<std::uint8_t> save_weights(const std::vector<InternalTable<T>>& tables) {
    ByteWriter w;
    w.bytes("CEMB", 4);
    w.u16(kWeightFormatVersion);
    w.u8(sizeof(T));
    w.u16(static_cast<std::uint16_t>(tables.size()));
    for (const auto& t : tables) {
        w.u64(t.rows);
        w.u32(t.cols);
        for (T v : t.weights) {
            if constexpr (sizeof(T) == 4)
                w.f32(static_cast<float>(v));
            else
                w.f64(static_cast<double>(v));
        }
        for (T v : t.adagrad_state) {
            if constexpr (sizeof(T) == 4)
                w.f32(static_cast<float>(v));
            else
                w.f64(static_cast<double>(v));
        }
    }
    return w.take();
}

template <typename T>
std::vector<InternalTable<T>> load_weights(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("CEMB");
    std::uint16_t version = r.u16();
    if (version != kWeightFormatVersion)
        throw ParseError("unsupported weight version " + std::to_string(version));
    std::uint8_t scalar = r.u8();
    if (scalar != sizeof(T)) throw ParseError("weight scalar width mismatch");
    std::uint16_t count = r.u16();
    std::vector<InternalTable<T>> tables(count);
    for (auto& t : tables) {
        t.rows = r.u64();
        t.cols = r.u32();
        t.weights.resize(t.rows * t.cols);
        for (auto& v : t.weights) v = (sizeof(T) == 4) ? static_cast<T>(r.f32()) : static_cast<T>(r.f64());
        t.adagrad_state.resize(t.rows);
        for (auto& v : t.adagrad_state)
            v = (sizeof(T) == 4) ? static_cast<T>(r.f32()) : static_cast<T>(r.f64());
    }
    if (!r.eof()) throw ParseError("trailing bytes in weight stream");
    return tables;
}

}  // namespace lhash

#endif  // LHASH_EMBEDDING_HPP
