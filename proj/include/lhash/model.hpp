#ifndef LHASH_MODEL_HPP
#define LHASH_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhash/embedding.hpp"
#include "lhash/hashers.hpp"
#include "lhash/io.hpp"
#include "lhash/rng.hpp"
#include "lhash/synth.hpp"

// Desk-scale CTR model: one embedding per categorical feature, pairwise dot
// interactions combined by learned scalar weights plus a bias, sigmoid
// output. The same architecture serves as the full model, the low-dimension
// teacher, and the compressed student; only the hash plans differ.

namespace lhash {

struct TrainConfig {
    double lr_emb = 0.02;
    double lr_dense = 0.002;
    double adagrad_eps = 1e-8;
    std::uint64_t batch_size = 1024;
    std::uint32_t epochs = 1;
    std::uint64_t seed = 1;
    bool shuffle = true;
};

template <typename T>
struct BatchGradients;

template <typename T>
class CtrModel {
public:
    CtrModel() = default;

    /// One plan per feature; width shared by all embeddings.
    CtrModel(std::vector<HashPlan> plans, std::uint32_t width, std::uint64_t seed)
        : width_(width) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(width));
        for (std::size_t f = 0; f < plans.size(); ++f)
            embeddings_.emplace_back(std::move(plans[f]), width, scale, mix64(seed ^ (0xfea7 + f)));
        const std::size_t pairs = embeddings_.size() * (embeddings_.size() - 1) / 2;
        pair_weights_.assign(pairs, T{1});
        pair_state_.assign(pairs, T{0});
    }

    std::uint32_t width() const { return width_; }
    std::size_t num_features() const { return embeddings_.size(); }
    std::vector<LogicalEmbedding<T>>& embeddings() { return embeddings_; }
    const std::vector<LogicalEmbedding<T>>& embeddings() const { return embeddings_; }
    std::vector<T>& pair_weights() { return pair_weights_; }
    T& bias() { return bias_; }
    T bias() const { return bias_; }

    std::size_t pair_index(std::size_t i, std::size_t j) const {
        // i < j over num_features features
        const std::size_t f = embeddings_.size();
        return i * f - i * (i + 1) / 2 + (j - i - 1);
    }

    /// Click probability for one sample (one id per feature).
    double predict(std::span<const std::uint32_t> sample) const {
        const std::size_t f = embeddings_.size();
        std::vector<T> rows(f * width_);
        std::vector<T> one;
        for (std::size_t i = 0; i < f; ++i) {
            embeddings_[i].forward({&sample[i], 1}, one);
            std::copy(one.begin(), one.end(), rows.begin() + i * width_);
        }
        double z = static_cast<double>(bias_);
        for (std::size_t i = 0; i < f; ++i)
            for (std::size_t j = i + 1; j < f; ++j) {
                double dot = 0.0;
                for (std::uint32_t d = 0; d < width_; ++d)
                    dot += static_cast<double>(rows[i * width_ + d]) *
                           static_cast<double>(rows[j * width_ + d]);
                z += static_cast<double>(pair_weights_[pair_index(i, j)]) * dot;
            }
        return 1.0 / (1.0 + std::exp(-z));
    }

private:
    std::uint32_t width_ = 0;
    std::vector<LogicalEmbedding<T>> embeddings_;
    std::vector<T> pair_weights_;
    std::vector<T> pair_state_;  // scalar adagrad state per pair weight
    T bias_ = T{0};
    T bias_state_ = T{0};

    template <typename U>
    friend BatchGradients<U> compute_batch_gradients(CtrModel<U>&, std::span<const std::uint32_t>,
                                                     std::span<const std::uint8_t>);
    template <typename U>
    friend double train_batch(CtrModel<U>&, std::span<const std::uint32_t>,
                              std::span<const std::uint8_t>, const TrainConfig&);
};

/// Mean-BCE loss and its gradient over one batch, without touching the
/// model. Also the analytic side of the finite-difference checks.
template <typename T>
struct BatchGradients final {
    double loss = 0.0;
    std::vector<std::vector<SparseGrad<T>>> emb;  // per feature, per internal table
    std::vector<double> pair_grad;
    double bias_grad = 0.0;
};

template <typename T>
BatchGradients<T> compute_batch_gradients(CtrModel<T>& model, std::span<const std::uint32_t> ids,
                                          std::span<const std::uint8_t> labels) {
    const std::size_t f_count = model.num_features();
    const std::size_t batch = labels.size();
    const std::uint32_t width = model.width();
    if (ids.size() != batch * f_count)
        throw std::logic_error("compute_batch_gradients: ids shape mismatch");

    std::vector<std::vector<T>> emb_out(f_count);
    std::vector<std::vector<T>> upstream(f_count);
    std::vector<std::uint32_t> feat_ids(batch);
    for (std::size_t f = 0; f < f_count; ++f) {
        for (std::size_t b = 0; b < batch; ++b) feat_ids[b] = ids[b * f_count + f];
        model.embeddings_[f].forward(feat_ids, emb_out[f]);
        upstream[f].assign(batch * width, T{0});
    }

    BatchGradients<T> out;
    out.pair_grad.assign(model.pair_weights_.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch);

    for (std::size_t b = 0; b < batch; ++b) {
        double z = static_cast<double>(model.bias_);
        for (std::size_t i = 0; i < f_count; ++i)
            for (std::size_t j = i + 1; j < f_count; ++j) {
                double dot = 0.0;
                const T* ei = emb_out[i].data() + b * width;
                const T* ej = emb_out[j].data() + b * width;
                for (std::uint32_t d = 0; d < width; ++d)
                    dot += static_cast<double>(ei[d]) * static_cast<double>(ej[d]);
                z += static_cast<double>(model.pair_weights_[model.pair_index(i, j)]) * dot;
            }
        const double y = 1.0 / (1.0 + std::exp(-z));
        const double t = labels[b] ? 1.0 : 0.0;
        // clamped log for numerical safety at saturated outputs
        const double yc = std::min(std::max(y, 1e-12), 1.0 - 1e-12);
        out.loss -= (t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc)) * inv_b;

        const double dldz = (y - t) * inv_b;
        out.bias_grad += dldz;
        for (std::size_t i = 0; i < f_count; ++i)
            for (std::size_t j = i + 1; j < f_count; ++j) {
                const std::size_t p = model.pair_index(i, j);
                const double w = static_cast<double>(model.pair_weights_[p]);
                const T* ei = emb_out[i].data() + b * width;
                const T* ej = emb_out[j].data() + b * width;
                double dot = 0.0;
                for (std::uint32_t d = 0; d < width; ++d)
                    dot += static_cast<double>(ei[d]) * static_cast<double>(ej[d]);
                out.pair_grad[p] += dldz * dot;
                T* ui = upstream[i].data() + b * width;
                T* uj = upstream[j].data() + b * width;
                for (std::uint32_t d = 0; d < width; ++d) {
                    ui[d] += static_cast<T>(dldz * w * static_cast<double>(ej[d]));
                    uj[d] += static_cast<T>(dldz * w * static_cast<double>(ei[d]));
                }
            }
    }
    if (!std::isfinite(out.loss))
        throw std::runtime_error("train: non-finite loss (diverged); lower the learning rate");

    out.emb.resize(f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        for (std::size_t b = 0; b < batch; ++b) feat_ids[b] = ids[b * f_count + f];
        model.embeddings_[f].backward(feat_ids, upstream[f], out.emb[f]);
    }
    return out;
}

/// One gradient step over a batch (ids laid out sample-major: B x F).
/// Returns the mean binary cross-entropy before the update.
template <typename T>
double train_batch(CtrModel<T>& model, std::span<const std::uint32_t> ids,
                   std::span<const std::uint8_t> labels, const TrainConfig& cfg) {
    auto g = compute_batch_gradients(model, ids, labels);

    for (std::size_t f = 0; f < model.num_features(); ++f) {
        auto& tables = model.embeddings_[f].tables();
        for (std::size_t t = 0; t < tables.size(); ++t)
            adagrad_step(tables[t], g.emb[f][t], static_cast<T>(cfg.lr_emb),
                         static_cast<T>(cfg.adagrad_eps));
    }

    // scalar adagrad for the dense parameters
    auto dense_step = [&](T& w, T& state, double grad) {
        state += static_cast<T>(grad * grad);
        w -= static_cast<T>(cfg.lr_dense * grad /
                            std::sqrt(static_cast<double>(state) + cfg.adagrad_eps));
    };
    for (std::size_t p = 0; p < g.pair_grad.size(); ++p)
        dense_step(model.pair_weights_[p], model.pair_state_[p], g.pair_grad[p]);
    dense_step(model.bias_, model.bias_state_, g.bias_grad);
    return g.loss;
}

struct TrainResult {
    std::vector<double> epoch_loss;
    std::vector<std::vector<std::uint64_t>> access_counts;  // per feature, per id
    std::uint64_t samples_seen = 0;
};

/// Minibatch training over the given sample indices. Deterministic: the
/// shuffle is seeded and batches run in order. Access counts tally every
/// lookup, once per sample per feature per epoch.
template <typename T>
TrainResult train(CtrModel<T>& model, const SynthDataset& data,
                  std::vector<std::uint64_t> sample_indices, const TrainConfig& cfg) {
    if (sample_indices.empty()) throw std::invalid_argument("train: empty dataset selection");
    const std::size_t f_count = model.num_features();
    if (f_count != data.config.num_features)
        throw std::invalid_argument("train: model/dataset feature count mismatch");

    TrainResult result;
    result.access_counts.resize(f_count);
    for (std::size_t f = 0; f < f_count; ++f)
        result.access_counts[f].assign(data.config.vocab_sizes[f], 0);

    Rng rng(mix64(cfg.seed ^ 0x7ea1));
    std::vector<std::uint32_t> batch_ids;
    std::vector<std::uint8_t> batch_labels;

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            for (std::size_t i = sample_indices.size(); i > 1; --i)
                std::swap(sample_indices[i - 1], sample_indices[rng.uniform_int(i)]);
        }
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < sample_indices.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(sample_indices.size(),
                                             start + static_cast<std::size_t>(cfg.batch_size));
            batch_ids.clear();
            batch_labels.clear();
            for (std::size_t s = start; s < end; ++s) {
                const std::uint64_t idx = sample_indices[s];
                const std::uint32_t* sample = data.sample_ids(idx);
                for (std::size_t f = 0; f < f_count; ++f) {
                    batch_ids.push_back(sample[f]);
                    ++result.access_counts[f][sample[f]];
                }
                batch_labels.push_back(data.label[idx]);
            }
            epoch_loss += train_batch(model, batch_ids, batch_labels, cfg) *
                          static_cast<double>(end - start);
            ++batches;
            result.samples_seen += end - start;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(sample_indices.size()));
    }
    return result;
}

/// Indices of samples whose day lies in [first_day, last_day].
inline std::vector<std::uint64_t> day_window_indices(const SynthDataset& data,
                                                     std::uint32_t first_day,
                                                     std::uint32_t last_day) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < data.size(); ++i)
        if (data.day[i] >= first_day && data.day[i] <= last_day) out.push_back(i);
    return out;
}

struct TeacherArtifact {
    std::vector<LatentMatrix> latents;                      // per feature, N x D
    std::vector<std::vector<std::uint64_t>> access_counts;  // per feature
    std::uint64_t samples_seen = 0;
    std::uint32_t first_day = 0;
    std::uint32_t last_day = 0;
    std::uint64_t seed = 0;
};

/// Train a full-height, low-width teacher over a day window (optionally a
/// random subsample of it) and extract per-id latents plus access counts.
inline TeacherArtifact train_teacher(const SynthDataset& data, std::uint32_t dim,
                                     std::uint32_t first_day, std::uint32_t last_day,
                                     std::uint64_t sample_budget, const TrainConfig& cfg) {
    if (dim == 0 || dim > 8) throw std::invalid_argument("train_teacher: need D in [1, 8]");
    auto indices = day_window_indices(data, first_day, last_day);
    if (indices.empty()) throw std::invalid_argument("train_teacher: empty day window");
    if (sample_budget != 0 && sample_budget < indices.size()) {
        Rng rng(mix64(cfg.seed ^ 0x5ecf));
        for (std::size_t i = indices.size(); i > 1; --i)
            std::swap(indices[i - 1], indices[rng.uniform_int(i)]);
        indices.resize(sample_budget);
    }

    std::vector<HashPlan> plans;
    for (std::uint32_t f = 0; f < data.config.num_features; ++f)
        plans.push_back(identity_plan(data.config.vocab_sizes[f]));
    CtrModel<float> model(std::move(plans), dim, cfg.seed);
    auto result = train(model, data, std::move(indices), cfg);

    TeacherArtifact art;
    art.samples_seen = result.samples_seen;
    art.first_day = first_day;
    art.last_day = last_day;
    art.seed = cfg.seed;
    art.access_counts = std::move(result.access_counts);
    for (std::uint32_t f = 0; f < data.config.num_features; ++f) {
        const auto& table = model.embeddings()[f].tables()[0];
        LatentMatrix m;
        m.n = table.rows;
        m.d = dim;
        m.data.assign(table.weights.begin(), table.weights.end());
        art.latents.push_back(std::move(m));
    }
    return art;
}

/// AUC via the Mann-Whitney rank statistic; ties get average ranks, which
/// contributes half per tied positive/negative pair. Needs both classes.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
    const std::size_t n = scores.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::uint64_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                pos_rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::uint64_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw std::invalid_argument("auc: needs at least one positive and one negative label");
    return (pos_rank_sum - 0.5 * static_cast<double>(positives) *
                               static_cast<double>(positives + 1)) /
           (static_cast<double>(positives) * static_cast<double>(negatives));
}

struct EvalResult {
    double auc = 0.0;
    double logloss = 0.0;
    std::uint64_t samples = 0;
};

template <typename T>
EvalResult evaluate(const CtrModel<T>& model, const SynthDataset& data,
                    const std::vector<std::uint64_t>& sample_indices) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(sample_indices.size());
    labels.reserve(sample_indices.size());
    double logloss = 0.0;
    for (std::uint64_t idx : sample_indices) {
        const double y = model.predict({data.sample_ids(idx), model.num_features()});
        const double t = data.label[idx] ? 1.0 : 0.0;
        const double yc = std::min(std::max(y, 1e-12), 1.0 - 1e-12);
        logloss -= t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc);
        scores.push_back(y);
        labels.push_back(data.label[idx]);
    }
    EvalResult r;
    r.samples = sample_indices.size();
    r.logloss = sample_indices.empty() ? 0.0 : logloss / static_cast<double>(sample_indices.size());
    r.auc = auc(scores, labels);
    return r;
}

// Teacher artifact file: magic "CTEA", version u16, F u16, D u16, per
// feature N u64 + latents f64 + counts u64, then a JSON metadata string.
inline constexpr std::uint16_t kTeacherFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_teacher(const TeacherArtifact& art) {
    ByteWriter w;
    w.bytes("CTEA", 4);
    w.u16(kTeacherFormatVersion);
    w.u16(static_cast<std::uint16_t>(art.latents.size()));
    w.u16(art.latents.empty() ? 0 : static_cast<std::uint16_t>(art.latents[0].d));
    for (std::size_t f = 0; f < art.latents.size(); ++f) {
        const auto& m = art.latents[f];
        w.u64(m.n);
        for (double v : m.data) w.f64(v);
        for (std::uint64_t c : art.access_counts[f]) w.u64(c);
    }
    nlohmann::json meta{{"samples_seen", art.samples_seen},
                        {"first_day", art.first_day},
                        {"last_day", art.last_day},
                        {"seed", art.seed}};
    w.str(meta.dump());
    return w.take();
}

inline TeacherArtifact deserialize_teacher(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    r.expect_magic("CTEA");
    if (r.u16() != kTeacherFormatVersion) throw ParseError("unsupported teacher version");
    TeacherArtifact art;
    const std::uint16_t features = r.u16();
    const std::uint16_t dim = r.u16();
    for (std::uint16_t f = 0; f < features; ++f) {
        LatentMatrix m;
        m.n = r.u64();
        m.d = dim;
        m.data.resize(m.n * dim);
        for (auto& v : m.data) v = r.f64();
        std::vector<std::uint64_t> counts(m.n);
        for (auto& c : counts) c = r.u64();
        art.latents.push_back(std::move(m));
        art.access_counts.push_back(std::move(counts));
    }
    auto meta = nlohmann::json::parse(r.str());
    art.samples_seen = meta.value("samples_seen", std::uint64_t{0});
    art.first_day = meta.value("first_day", 0u);
    art.last_day = meta.value("last_day", 0u);
    art.seed = meta.value("seed", std::uint64_t{0});
    if (!r.eof()) throw ParseError("trailing bytes in teacher stream");
    return art;
}

}  // namespace lhash

#endif  // LHASH_MODEL_HPP
