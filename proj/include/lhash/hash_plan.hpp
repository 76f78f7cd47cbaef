#ifndef LHASH_HASH_PLAN_HPP
#define LHASH_HASH_PLAN_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhash/io.hpp"

namespace lhash {

enum class MergeMode : std::uint8_t { Sum = 0, Concat = 1 };

inline const char* merge_mode_name(MergeMode m) { return m == MergeMode::Sum ? "sum" : "concat"; }

/// Sentinel for "this id has no row in this internal table".
inline constexpr std::uint64_t kSkip = std::numeric_limits<std::uint64_t>::max();

/// One internal table's id -> row lookup.
struct TableMapping {
    std::uint64_t rows = 0;
    std::vector<std::uint64_t> mapping;  // length N; kSkip where absent
};

/// A generated hash function: per-internal-table lookup arrays over the
/// original id space, plus how the gathered rows combine.
struct HashPlan {
    std::uint64_t original_height = 0;  // N
    std::vector<TableMapping> tables;
    MergeMode merge_mode = MergeMode::Sum;
    std::string method_tag;  // debug metadata; not part of the binary format

    std::uint64_t total_rows() const {
        std::uint64_t r = 0;
        for (const auto& t : tables) r += t.rows;
        return r;
    }

    /// Largest row index space across internal tables; sets the packed
    /// entry bit width.
    std::uint64_t max_rows() const {
        std::uint64_t r = 0;
        for (const auto& t : tables) r = std::max(r, t.rows);
        return r;
    }

    void validate() const {
        if (original_height == 0) throw std::invalid_argument("HashPlan: empty id space");
        if (tables.empty()) throw std::invalid_argument("HashPlan: no internal tables");
        std::vector<bool> covered(original_height, false);
        for (const auto& t : tables) {
            if (t.rows == 0) throw std::invalid_argument("HashPlan: internal table with 0 rows");
            if (t.mapping.size() != original_height)
                throw std::invalid_argument("HashPlan: mapping length != original height");
            for (std::uint64_t id = 0; id < original_height; ++id) {
                std::uint64_t row = t.mapping[id];
                if (row == kSkip) continue;
                if (row >= t.rows) throw std::invalid_argument("HashPlan: row out of range");
                covered[id] = true;
            }
        }
        for (std::uint64_t id = 0; id < original_height; ++id)
            if (!covered[id])
                throw std::invalid_argument("HashPlan: id " + std::to_string(id) +
                                            " is SKIP in every table");
    }
};

/// Smallest width in {8, 16, 32, 64} bits fitting rows-1 plus an all-ones
/// SKIP sentinel, i.e. max_rows + 1 <= 2^width.
inline int plan_entry_width(std::uint64_t max_rows) {
    for (int w : {8, 16, 32}) {
        if (max_rows + 1 <= (std::uint64_t{1} << w)) return w;
    }
    return 64;
}

/// Binary .chsh format: magic "CHSH", version u16, N u64, T u16,
/// merge_mode u8, then per table rows u64 followed by N mapping entries
/// packed at plan_entry_width(max rows over all tables). Little-endian.
inline constexpr std::uint16_t kPlanFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_plan(const HashPlan& plan) {
    plan.validate();
    ByteWriter w;
    w.bytes("CHSH", 4);
    w.u16(kPlanFormatVersion);
    w.u64(plan.original_height);
    w.u16(static_cast<std::uint16_t>(plan.tables.size()));
    w.u8(static_cast<std::uint8_t>(plan.merge_mode));
    const int width = plan_entry_width(plan.max_rows());
    for (const auto& t : plan.tables) {
        w.u64(t.rows);
        for (std::uint64_t entry : t.mapping) {
            std::uint64_t packed = entry == kSkip ? ((width == 64) ? kSkip : (std::uint64_t{1} << width) - 1)
                                                  : entry;
            switch (width) {
                case 8: w.u8(static_cast<std::uint8_t>(packed)); break;
                case 16: w.u16(static_cast<std::uint16_t>(packed)); break;
                case 32: w.u32(static_cast<std::uint32_t>(packed)); break;
                default: w.u64(packed); break;
            }
        }
    }
    return w.take();
}

inline HashPlan deserialize_plan(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("CHSH");
    std::uint16_t version = r.u16();
    if (version != kPlanFormatVersion)
        throw ParseError("unsupported plan version " + std::to_string(version));
    HashPlan plan;
    plan.original_height = r.u64();
    std::uint16_t num_tables = r.u16();
    plan.merge_mode = static_cast<MergeMode>(r.u8());
    if (plan.merge_mode != MergeMode::Sum && plan.merge_mode != MergeMode::Concat)
        throw ParseError("bad merge mode");

    // The packed width depends on max rows, which is only known after all
    // table headers; tables are interleaved with their entries, so read in
    // two passes over the raw bytes.
    plan.tables.resize(num_tables);
    // First pass cannot know entry width without rows; the width rule uses
    // the max over tables, so peek rows assuming the stream layout.
    // Layout per table: 8 bytes rows + N * (width/8) bytes. Width is the
    // same for every table, so solve for it from the total size.
    const std::size_t header = 4 + 2 + 8 + 2 + 1;
    const std::size_t body = bytes.size() - std::min(bytes.size(), header);
    bool ok = false;
    int width = 0;
    for (int w : {8, 16, 32, 64}) {
        std::size_t expect = num_tables * (8 + plan.original_height * (static_cast<std::size_t>(w) / 8));
        if (body == expect) {
            width = w;
            ok = true;
            break;
        }
    }
    if (!ok) throw ParseError("truncated stream");

    for (auto& t : plan.tables) {
        t.rows = r.u64();
        t.mapping.resize(plan.original_height);
        const std::uint64_t sentinel = (width == 64) ? kSkip : (std::uint64_t{1} << width) - 1;
        for (auto& entry : t.mapping) {
            std::uint64_t v;
            switch (width) {
                case 8: v = r.u8(); break;
                case 16: v = r.u16(); break;
                case 32: v = r.u32(); break;
                default: v = r.u64(); break;
            }
            entry = (v == sentinel) ? kSkip : v;
        }
    }
    if (plan_entry_width(plan.max_rows()) != width) throw ParseError("entry width mismatch");
    plan.validate();
    return plan;
}

/// Debug dump: full mapping plus method metadata.
inline nlohmann::json plan_to_json(const HashPlan& plan) {
    nlohmann::json j;
    j["original_height"] = plan.original_height;
    j["merge_mode"] = merge_mode_name(plan.merge_mode);
    j["method"] = plan.method_tag;
    j["tables"] = nlohmann::json::array();
    for (const auto& t : plan.tables) {
        nlohmann::json jt;
        jt["rows"] = t.rows;
        auto& m = jt["mapping"] = nlohmann::json::array();
        for (std::uint64_t e : t.mapping) {
            if (e == kSkip)
                m.push_back(nullptr);
            else
                m.push_back(e);
        }
        j["tables"].push_back(std::move(jt));
    }
    return j;
}

}  // namespace lhash

#endif  // LHASH_HASH_PLAN_HPP
