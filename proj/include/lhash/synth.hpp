#ifndef LHASH_SYNTH_HPP
#define LHASH_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhash/io.hpp"
#include "lhash/rng.hpp"

// Synthetic CTR data with planted semantic structure: every id belongs to a
// group, labels depend only on the interaction of group-level truth vectors
// (plus small per-id noise), id popularity is Zipf, and group centers drift
// day to day. Colliding ids within a group therefore loses almost nothing;
// colliding across groups destroys label-relevant signal.

namespace lhash {

struct SynthConfig {
    std::uint32_t num_features = 2;
    std::vector<std::uint64_t> vocab_sizes = {50000, 50000};  // per feature
    std::vector<std::uint64_t> group_counts = {64, 64};       // per feature
    double sigma_between = 1.0;  // group center spread
    double sigma_within = 0.1;   // per-id noise around its center
    double zipf_alpha = 1.05;
    std::uint32_t truth_dim = 4;
    double logit_scale = 1.0;
    double target_positive_rate = 0.25;
    std::uint32_t num_days = 8;
    double sigma_drift = 0.05;  // center random-walk step per day
    std::uint64_t samples_per_day = 250000;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_features == 0) throw std::invalid_argument("SynthConfig: need >= 1 feature");
        if (vocab_sizes.size() != num_features || group_counts.size() != num_features)
            throw std::invalid_argument("SynthConfig: per-feature lists must match num_features");
        for (std::uint32_t f = 0; f < num_features; ++f) {
            if (vocab_sizes[f] == 0 || group_counts[f] == 0 || group_counts[f] > vocab_sizes[f])
                throw std::invalid_argument("SynthConfig: need 1 <= groups <= vocab");
        }
        if (zipf_alpha < 0.0 || sigma_between < 0.0 || sigma_within < 0.0 || sigma_drift < 0.0)
            throw std::invalid_argument("SynthConfig: negative spread/exponent");
        if (truth_dim == 0 || num_days == 0 || samples_per_day == 0)
            throw std::invalid_argument("SynthConfig: zero dimension/days/samples");
        if (target_positive_rate <= 0.0 || target_positive_rate >= 1.0)
            throw std::invalid_argument("SynthConfig: positive rate must be in (0, 1)");
    }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
    j = nlohmann::json{{"num_features", c.num_features},
                       {"vocab_sizes", c.vocab_sizes},
                       {"group_counts", c.group_counts},
                       {"sigma_between", c.sigma_between},
                       {"sigma_within", c.sigma_within},
                       {"zipf_alpha", c.zipf_alpha},
                       {"truth_dim", c.truth_dim},
                       {"logit_scale", c.logit_scale},
                       {"target_positive_rate", c.target_positive_rate},
                       {"num_days", c.num_days},
                       {"sigma_drift", c.sigma_drift},
                       {"samples_per_day", c.samples_per_day},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
    SynthConfig d;
    c.num_features = j.value("num_features", d.num_features);
    c.vocab_sizes = j.value("vocab_sizes", d.vocab_sizes);
    c.group_counts = j.value("group_counts", d.group_counts);
    c.sigma_between = j.value("sigma_between", d.sigma_between);
    c.sigma_within = j.value("sigma_within", d.sigma_within);
    c.zipf_alpha = j.value("zipf_alpha", d.zipf_alpha);
    c.truth_dim = j.value("truth_dim", d.truth_dim);
    c.logit_scale = j.value("logit_scale", d.logit_scale);
    c.target_positive_rate = j.value("target_positive_rate", d.target_positive_rate);
    c.num_days = j.value("num_days", d.num_days);
    c.sigma_drift = j.value("sigma_drift", d.sigma_drift);
    c.samples_per_day = j.value("samples_per_day", d.samples_per_day);
    c.seed = j.value("seed", d.seed);
}

/// Planted structure: group assignment per id, fixed per-id noise, and
/// day-indexed group centers following a seeded random walk. Saved for
/// diagnostics only; training never sees it.
struct GroundTruth {
    struct Feature {
        std::vector<std::uint32_t> group;  // per id
        std::vector<double> noise;         // per id, truth_dim wide
        std::vector<double> centers;       // num_days x groups x truth_dim
        std::uint32_t num_groups = 0;
    };
    std::uint32_t truth_dim = 0;
    std::uint32_t num_days = 0;
    std::vector<Feature> features;

    /// truth(id, day) = center(group(id), day) + noise(id)
    void truth_vector(std::uint32_t feature, std::uint32_t id, std::uint32_t day,
                      double* out) const {
        const auto& f = features[feature];
        const double* c = f.centers.data() +
                          (static_cast<std::size_t>(day) * f.num_groups + f.group[id]) * truth_dim;
        const double* n = f.noise.data() + static_cast<std::size_t>(id) * truth_dim;
        for (std::uint32_t d = 0; d < truth_dim; ++d) out[d] = c[d] + n[d];
    }
};

struct SynthDataset {
    SynthConfig config;
    double calibrated_bias = 0.0;
    std::vector<std::uint16_t> day;   // per sample
    std::vector<std::uint32_t> ids;   // per sample, num_features entries
    std::vector<std::uint8_t> label;  // per sample

    std::size_t size() const { return label.size(); }
    const std::uint32_t* sample_ids(std::size_t i) const {
        return ids.data() + i * config.num_features;
    }
};

namespace detail {

/// Zipf sampler over a random popularity permutation: rank r has weight
/// (r+1)^-alpha; ids are permuted so popularity is uncorrelated with id.
struct ZipfSampler {
    std::vector<std::uint32_t> perm;  // rank -> id
    std::vector<double> cdf;

    ZipfSampler(std::uint64_t n, double alpha, Rng& rng) {
        perm.resize(n);
        std::iota(perm.begin(), perm.end(), 0u);
        for (std::uint64_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
        cdf.resize(n);
        double acc = 0.0;
        for (std::uint64_t r = 0; r < n; ++r) {
            acc += std::pow(static_cast<double>(r + 1), -alpha);
            cdf[r] = acc;
        }
        for (auto& v : cdf) v /= acc;
    }

    std::uint32_t draw(Rng& rng) const {
        double u = rng.uniform();
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t r = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                              cdf.size() - 1);
        return perm[r];
    }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Raw interaction logit (before bias) for one drawn sample.
inline double truth_logit(const GroundTruth& truth, const SynthConfig& cfg,
                          const std::uint32_t* sample, std::uint32_t day) {
    const std::uint32_t dim = cfg.truth_dim;
    std::vector<double> vecs(static_cast<std::size_t>(cfg.num_features) * dim);
    for (std::uint32_t f = 0; f < cfg.num_features; ++f)
        truth.truth_vector(f, sample[f], day, vecs.data() + f * dim);
    double z = 0.0;
    for (std::uint32_t i = 0; i < cfg.num_features; ++i)
        for (std::uint32_t j = i + 1; j < cfg.num_features; ++j) {
            double dot = 0.0;
            for (std::uint32_t d = 0; d < dim; ++d)
                dot += vecs[i * dim + d] * vecs[j * dim + d];
            z += dot;
        }
    return cfg.logit_scale * z;
}

struct GeneratedData {
    SynthDataset dataset;
    GroundTruth truth;
};

inline GeneratedData generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng root(cfg.seed);

    GroundTruth truth;
    truth.truth_dim = cfg.truth_dim;
    truth.num_days = cfg.num_days;
    truth.features.resize(cfg.num_features);
    std::vector<detail::ZipfSampler> samplers;
    samplers.reserve(cfg.num_features);

    for (std::uint32_t f = 0; f < cfg.num_features; ++f) {
        Rng rng = root.fork(0x6665ULL + f);
        auto& feat = truth.features[f];
        const std::uint64_t n = cfg.vocab_sizes[f];
        const std::uint32_t g = static_cast<std::uint32_t>(cfg.group_counts[f]);
        feat.num_groups = g;

        feat.group.resize(n);
        for (std::uint64_t id = 0; id < n; ++id)
            feat.group[id] = static_cast<std::uint32_t>(rng.uniform_int(g));

        feat.noise.resize(n * cfg.truth_dim);
        for (auto& v : feat.noise) v = rng.normal(0.0, cfg.sigma_within);

        feat.centers.resize(static_cast<std::size_t>(cfg.num_days) * g * cfg.truth_dim);
        for (std::uint32_t gi = 0; gi < g; ++gi)
            for (std::uint32_t d = 0; d < cfg.truth_dim; ++d)
                feat.centers[static_cast<std::size_t>(gi) * cfg.truth_dim + d] =
                    rng.normal(0.0, cfg.sigma_between);
        for (std::uint32_t day = 1; day < cfg.num_days; ++day) {
            const std::size_t prev = static_cast<std::size_t>(day - 1) * g * cfg.truth_dim;
            const std::size_t cur = static_cast<std::size_t>(day) * g * cfg.truth_dim;
            for (std::size_t i = 0; i < static_cast<std::size_t>(g) * cfg.truth_dim; ++i)
                feat.centers[cur + i] = feat.centers[prev + i] + rng.normal(0.0, cfg.sigma_drift);
        }

        samplers.emplace_back(n, cfg.zipf_alpha, rng);
    }

    // Calibrate the global bias on a probe so the positive rate lands near
    // the target. The probe mirrors generation: uniform day, Zipf ids.
    const std::size_t probe_size = 10000;
    std::vector<double> probe_logits(probe_size);
    {
        Rng rng = root.fork(0xca11b);
        std::vector<std::uint32_t> sample(cfg.num_features);
        for (auto& z : probe_logits) {
            const auto day = static_cast<std::uint32_t>(rng.uniform_int(cfg.num_days));
            for (std::uint32_t f = 0; f < cfg.num_features; ++f)
                sample[f] = samplers[f].draw(rng);
            z = truth_logit(truth, cfg, sample.data(), day);
        }
    }
    double lo = -40.0, hi = 40.0, bias = 0.0;
    bool calibrated = false;
    for (int iter = 0; iter < 64; ++iter) {
        bias = 0.5 * (lo + hi);
        double rate = 0.0;
        for (double z : probe_logits) rate += detail::sigmoid(z + bias);
        rate /= static_cast<double>(probe_size);
        if (std::abs(rate - cfg.target_positive_rate) <= 0.02) {
            calibrated = true;
            break;
        }
        if (rate < cfg.target_positive_rate)
            lo = bias;
        else
            hi = bias;
    }
    if (!calibrated)
        throw std::runtime_error("generate: positive-rate calibration failed after 64 steps");

    GeneratedData out;
    out.truth = std::move(truth);
    auto& ds = out.dataset;
    ds.config = cfg;
    ds.calibrated_bias = bias;
    const std::size_t total = static_cast<std::size_t>(cfg.num_days) * cfg.samples_per_day;
    ds.day.reserve(total);
    ds.ids.reserve(total * cfg.num_features);
    ds.label.reserve(total);

    std::vector<std::uint32_t> sample(cfg.num_features);
    for (std::uint32_t day = 0; day < cfg.num_days; ++day) {
        Rng rng = root.fork(0xda1ULL * 1000 + day);
        for (std::uint64_t s = 0; s < cfg.samples_per_day; ++s) {
            for (std::uint32_t f = 0; f < cfg.num_features; ++f)
                sample[f] = samplers[f].draw(rng);
            const double z = truth_logit(out.truth, cfg, sample.data(), day) + bias;
            ds.day.push_back(static_cast<std::uint16_t>(day));
            ds.ids.insert(ds.ids.end(), sample.begin(), sample.end());
            ds.label.push_back(rng.bernoulli(detail::sigmoid(z)) ? 1 : 0);
        }
    }
    return out;
}

struct SeparationReport {
    double mean_intra = 0.0;
    double mean_inter = 0.0;
    double ratio() const { return mean_inter > 0.0 ? mean_intra / mean_inter : 0.0; }
};

/// Mean distance between truth vectors at day 0, split into same-group and
/// cross-group pairs. Exact for small vocabularies, seeded pair sampling
/// above that.
inline SeparationReport separation_report(const GroundTruth& truth,
                                          std::uint64_t pair_samples = 200000) {
    SeparationReport rep;
    double intra_sum = 0.0, inter_sum = 0.0;
    std::uint64_t intra_n = 0, inter_n = 0;
    const std::uint32_t dim = truth.truth_dim;
    std::vector<double> a(dim), b(dim);

    auto add_pair = [&](std::uint32_t f, std::uint32_t i, std::uint32_t j) {
        truth.truth_vector(f, i, 0, a.data());
        truth.truth_vector(f, j, 0, b.data());
        double d2 = 0.0;
        for (std::uint32_t d = 0; d < dim; ++d) d2 += (a[d] - b[d]) * (a[d] - b[d]);
        const double dist = std::sqrt(d2);
        if (truth.features[f].group[i] == truth.features[f].group[j]) {
            intra_sum += dist;
            ++intra_n;
        } else {
            inter_sum += dist;
            ++inter_n;
        }
    };

    for (std::uint32_t f = 0; f < truth.features.size(); ++f) {
        const auto n = static_cast<std::uint32_t>(truth.features[f].group.size());
        if (static_cast<std::uint64_t>(n) * (n - 1) / 2 <= pair_samples) {
            for (std::uint32_t i = 0; i < n; ++i)
                for (std::uint32_t j = i + 1; j < n; ++j) add_pair(f, i, j);
        } else {
            Rng rng(0x5e9a ^ f);
            for (std::uint64_t s = 0; s < pair_samples; ++s) {
                auto i = static_cast<std::uint32_t>(rng.uniform_int(n));
                auto j = static_cast<std::uint32_t>(rng.uniform_int(n));
                if (i != j) add_pair(f, i, j);
            }
        }
    }
    if (intra_n > 0) rep.mean_intra = intra_sum / static_cast<double>(intra_n);
    if (inter_n > 0) rep.mean_inter = inter_sum / static_cast<double>(inter_n);
    return rep;
}

// Dataset file: magic "CSYN", version u16, config JSON string, calibrated
// bias f64, sample count u64, then per sample day u16, ids u32 each,
// label u8.
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_dataset(const SynthDataset& ds) {
    ByteWriter w;
    w.bytes("CSYN", 4);
    w.u16(kDatasetFormatVersion);
    w.str(nlohmann::json(ds.config).dump());
    w.f64(ds.calibrated_bias);
    w.u64(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        w.u16(ds.day[i]);
        const std::uint32_t* s = ds.sample_ids(i);
        for (std::uint32_t f = 0; f < ds.config.num_features; ++f) w.u32(s[f]);
        w.u8(ds.label[i]);
    }
    return w.take();
}

inline SynthDataset deserialize_dataset(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("CSYN");
    std::uint16_t version = r.u16();
    if (version != kDatasetFormatVersion)
        throw ParseError("unsupported dataset version " + std::to_string(version));
    SynthDataset ds;
    ds.config = nlohmann::json::parse(r.str()).get<SynthConfig>();
    ds.calibrated_bias = r.f64();
    const std::uint64_t count = r.u64();
    ds.day.reserve(count);
    ds.ids.reserve(count * ds.config.num_features);
    ds.label.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        ds.day.push_back(r.u16());
        for (std::uint32_t f = 0; f < ds.config.num_features; ++f) ds.ids.push_back(r.u32());
        ds.label.push_back(r.u8());
    }
    if (!r.eof()) throw ParseError("trailing bytes in dataset stream");
    return ds;
}

// GroundTruth file, diagnostics only: magic "CTRU", version, dims, then per
// feature groups, noise, and per-day centers.
inline std::vector<std::uint8_t> serialize_truth(const GroundTruth& truth) {
    ByteWriter w;
    w.bytes("CTRU", 4);
    w.u16(1);
    w.u32(truth.truth_dim);
    w.u32(truth.num_days);
    w.u16(static_cast<std::uint16_t>(truth.features.size()));
    for (const auto& f : truth.features) {
        w.u64(f.group.size());
        w.u32(f.num_groups);
        for (auto g : f.group) w.u32(g);
        for (double v : f.noise) w.f64(v);
        for (double v : f.centers) w.f64(v);
    }
    return w.take();
}

inline GroundTruth deserialize_truth(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("CTRU");
    if (r.u16() != 1) throw ParseError("unsupported truth version");
    GroundTruth truth;
    truth.truth_dim = r.u32();
    truth.num_days = r.u32();
    truth.features.resize(r.u16());
    for (auto& f : truth.features) {
        const std::uint64_t n = r.u64();
        f.num_groups = r.u32();
        f.group.resize(n);
        for (auto& g : f.group) g = r.u32();
        f.noise.resize(n * truth.truth_dim);
        for (auto& v : f.noise) v = r.f64();
        f.centers.resize(static_cast<std::size_t>(truth.num_days) * f.num_groups * truth.truth_dim);
        for (auto& v : f.centers) v = r.f64();
    }
    if (!r.eof()) throw ParseError("trailing bytes in truth stream");
    return truth;
}

}  // namespace lhash

#endif  // LHASH_SYNTH_HPP
