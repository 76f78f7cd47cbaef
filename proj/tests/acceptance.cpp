// Acceptance gate: one pass/fail line per criterion, run end to end against
// the library and the installed CLI binary. Criterion 11 is directional and
// reported but never blocks (ablation results are noisy at desk scale).
//
// Usage: acceptance --cli <path-to-lhash> --workdir <scratch-dir>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhash/cluster.hpp"
#include "lhash/hashers.hpp"
#include "lhash/model.hpp"
#include "lhash/sweep.hpp"
#include "lhash/synth.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace lhash;

namespace {

struct Ctx {
    std::string cli;
    fs::path work;
};

struct Outcome {
    bool pass = false;
    std::string note;
};

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return read_text(a) == read_text(b); }

int run_cli(const Ctx& ctx, const std::string& args) {
    const std::string cmd = ctx.cli + " " + args + " >>" + (ctx.work / "cli.log").string() +
                            " 2>&1";
    return std::system(cmd.c_str());
}

// ---------------------------------------------------------------- criteria

Outcome c1_oracle_equivalence() {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(63);
        std::vector<double> values(n);
        std::vector<std::uint64_t> counts(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = rng.uniform(-10.0, 10.0);
            counts[i] = rng.uniform_int(100);
        }
        ClusterConfig cfg;
        cfg.k = 1;
        cfg.target = 1 + rng.uniform_int(n - 1);
        cfg.size_max = n;
        cfg.use_frequency_filter = false;
        cfg.use_frequency_weighting = false;
        auto got = run_clustering(values, counts, cfg).assignment;
        auto want = oracle::naive_agglomerative(values, cfg.target);
        if (got != want)
            return {false, "mismatch vs naive oracle at trial " + std::to_string(trial)};
    }
    return {true, "1000 instances, N <= 64, exact match"};
}

Outcome c2_invariants() {
    Rng rng(202);
    std::size_t per_step_replays = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(510);
        std::vector<double> values(n);
        std::vector<std::uint64_t> counts(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = rng.uniform(-100.0, 100.0);
            counts[i] = rng.bernoulli(0.3) ? 0 : rng.uniform_int(1000);
        }
        ClusterConfig cfg;
        cfg.target = 1 + rng.uniform_int(n - 1);
        cfg.k = 1 + rng.uniform_int(8);
        cfg.use_frequency_filter = rng.bernoulli(0.5);
        cfg.use_frequency_weighting = rng.bernoulli(0.5);
        const std::uint64_t total =
            std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});

        auto result = run_clustering(values, counts, cfg);
        if (result.set.total_size() != n) return {false, "size conservation broken"};
        if (result.set.total_count() != total) return {false, "count conservation broken"};
        if (!result.set.sorted_by_value()) return {false, "final set unsorted"};
        if (result.set.size() > cfg.target) return {false, "did not reach target"};
        if (result.steps > n - cfg.target) return {false, "no per-step progress"};
        std::vector<std::uint64_t> sizes(result.set.size(), 0);
        for (std::uint32_t c : result.assignment) {
            if (c >= result.set.size()) return {false, "assignment out of range"};
            ++sizes[c];
        }
        for (std::size_t i = 0; i < result.set.size(); ++i)
            if (sizes[i] != result.set[i].size) return {false, "assignment/size mismatch"};

        if (trial % 200 == 0) {
            auto again = run_clustering(values, counts, cfg);
            if (again.assignment != result.assignment) return {false, "nondeterministic"};
        }
        // chain-split soundness on a subset, via the public per-step ops
        if (trial % 20 == 0 && n <= 128) {
            ++per_step_replays;
            ClusterSet set = init_clusters(values, counts);
            const std::uint64_t size_max = cfg.effective_size_max(n);
            while (set.size() > cfg.target) {
                auto cands = select_candidates(set, cfg);
                std::set<std::size_t> lefts;
                for (const auto& c : cands) lefts.insert(c.left);
                auto groups = unify_and_split(set, cands, size_max);
                std::vector<Cluster> next;
                std::size_t pos = 0;
                for (const auto& g : groups) {
                    if (g.width() == 2 && lefts.count(g.first) == 0)
                        return {false, "merged pair was never a candidate"};
                    for (; pos < g.first; ++pos) next.push_back(set[pos]);
                    std::vector<Cluster> group(
                        set.clusters().begin() + static_cast<std::ptrdiff_t>(g.first),
                        set.clusters().begin() + static_cast<std::ptrdiff_t>(g.last) + 1);
                    next.push_back(merge_group(group, cfg.use_frequency_weighting));
                    pos = g.last + 1;
                }
                for (; pos < set.size(); ++pos) next.push_back(set[pos]);
                if (next.size() >= set.size()) return {false, "step made no progress"};
                set = ClusterSet(std::move(next));
                if (!set.sorted_by_value()) return {false, "step broke sortedness"};
            }
        }
    }
    return {true, "10000 randomized runs (N <= 512), " + std::to_string(per_step_replays) +
                      " per-step replays"};
}

Outcome c3_worked_trace() {
    ClusterConfig cfg;
    cfg.k = 1;
    cfg.target = 3;
    cfg.size_max = 8;
    const std::vector<double> values{0, 1, 3, 6, 10};
    const std::vector<std::uint64_t> counts{9, 0, 0, 0, 12};
    const std::vector<std::uint32_t> want{0, 0, 0, 1, 2};

    auto weighted = run_clustering(values, counts, cfg);
    if (weighted.assignment != want) return {false, "weighted assignment wrong"};
    if (std::abs(weighted.set[0].value) > 1e-12)
        return {false, "weighted merged value should be 0"};
    cfg.use_frequency_weighting = false;
    auto plain = run_clustering(values, counts, cfg);
    if (plain.assignment != want) return {false, "unweighted assignment wrong"};
    if (std::abs(plain.set[0].value - 1.0) > 1e-12)
        return {false, "unweighted merged value should be 1"};
    return {true, "assignment [0,0,0,1,2]; merged value 0 (weighted) / 1 (plain)"};
}

Outcome c4_chain_split() {
    std::vector<double> values{0, 1, 2, 3, 4};
    std::vector<std::uint64_t> counts(5, 1);
    auto set = init_clusters(values, counts);
    std::vector<MergeCandidate> cands(4);
    for (std::size_t i = 0; i < 4; ++i) cands[i].left = i;
    auto groups = unify_and_split(set, cands, 2);
    const bool ok = groups.size() == 3 && groups[0].first == 0 && groups[0].last == 1 &&
                    groups[1].first == 2 && groups[1].last == 3 && groups[2].first == 4 &&
                    groups[2].last == 4;
    if (!ok) return {false, "ABCDE chain did not split into {AB},{CD},E"};
    return {true, "candidates {AB,BC,CD,DE}, max 2 -> {AB},{CD}, E untouched"};
}

Outcome c5_qr_injectivity() {
    Rng rng(505);
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint64_t n = 2 + rng.uniform_int(100000 - 1);
        const std::uint64_t m = 2 + rng.uniform_int(n);
        auto plan = qr_hash(n, m);
        std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
        for (std::uint64_t id = 0; id < n; ++id)
            pairs.emplace(plan.tables[1].mapping[id], plan.tables[0].mapping[id]);
        if (pairs.size() != n)
            return {false, "collision at N=" + std::to_string(n) + " m=" + std::to_string(m)};
    }
    return {true, "100 random (N <= 1e5, m) pairs, all (q, r) distinct"};
}

Outcome c6_fdh_isolation() {
    Rng rng(606);
    for (double retain : {0.01, 0.025}) {
        for (int trial = 0; trial < 10; ++trial) {
            const std::uint64_t n = 2000 + rng.uniform_int(8000);
            std::vector<std::uint64_t> counts(n);
            for (auto& c : counts) c = rng.uniform_int(100000);
            auto plan = freq_double_hash(counts, n, n / 4, retain, 7, 9);
            std::set<std::uint64_t> rows;
            for (std::uint64_t id = 0; id < n; ++id) {
                if (plan.tables[0].mapping[id] == kSkip) continue;
                if (!rows.insert(plan.tables[0].mapping[id]).second)
                    return {false, "retained ids share a row at retain=" + std::to_string(retain)};
                if (plan.tables[1].mapping[id] != kSkip || plan.tables[2].mapping[id] != kSkip)
                    return {false, "retained id also present in a shared table"};
            }
            if (rows.size() != static_cast<std::uint64_t>(retain * static_cast<double>(n)))
                return {false, "wrong retained count"};
        }
    }
    return {true, "retain in {0.01, 0.025}: every retained id has a private row"};
}

Outcome c7_gradients() {
    Rng rng(707);
    int instances = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const std::uint32_t tables = 1 + (trial / 2) % 2;  // force T in {1, 2}
        const MergeMode mode = trial % 2 ? MergeMode::Concat : MergeMode::Sum;
        const std::uint64_t n = 3 + rng.uniform_int(10);
        const std::uint32_t width = 2 + rng.uniform_int(2);

        std::vector<HashPlan> plans;
        plans.push_back(tables == 1 ? modulo_hash(n, 1 + rng.uniform_int(n))
                                    : qr_hash(n, 2 + rng.uniform_int(n), mode));
        plans.push_back(tables == 1 ? modulo_hash(n, 1 + rng.uniform_int(n))
                                    : qr_hash(n, 2 + rng.uniform_int(n), mode));
        CtrModel<double> model(std::move(plans), width, rng.next_u64());
        model.bias() = rng.uniform(-0.5, 0.5);

        const std::size_t batch = 1 + rng.uniform_int(5);
        std::vector<std::uint32_t> ids(batch * 2);
        std::vector<std::uint8_t> labels(batch);
        for (auto& id : ids) id = static_cast<std::uint32_t>(rng.uniform_int(n));
        for (auto& l : labels) l = rng.bernoulli(0.5) ? 1 : 0;

        auto g = compute_batch_gradients<double>(model, ids, labels);
        const double h = 1e-6;
        auto loss_at = [&]() { return compute_batch_gradients<double>(model, ids, labels).loss; };
        auto check = [&](double& param, double analytic) {
            const double orig = param;
            param = orig + h;
            const double lp = loss_at();
            param = orig - h;
            const double lm = loss_at();
            param = orig;
            const double fd = (lp - lm) / (2 * h);
            const double rel =
                std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1.0});
            worst = std::max(worst, rel);
            return rel < 1e-4;
        };

        if (!check(model.bias(), g.bias_grad)) return {false, "bias gradient off"};
        if (!check(model.pair_weights()[0], g.pair_grad[0]))
            return {false, "pair weight gradient off"};
        for (std::size_t f = 0; f < 2; ++f) {
            auto& tbls = model.embeddings()[f].tables();
            for (std::size_t t = 0; t < tbls.size(); ++t) {
                std::vector<double> analytic(tbls[t].weights.size(), 0.0);
                const auto cols = tbls[t].cols;
                for (std::size_t s = 0; s < g.emb[f][t].rows.size(); ++s)
                    for (std::uint32_t c = 0; c < cols; ++c)
                        analytic[g.emb[f][t].rows[s] * cols + c] =
                            g.emb[f][t].grads[s * cols + c];
                for (std::size_t w = 0; w < tbls[t].weights.size(); ++w)
                    if (!check(tbls[t].weights[w], analytic[w]))
                        return {false, "embedding gradient off"};
            }
        }
        ++instances;
    }
    std::ostringstream os;
    os << instances << " instances (T in {1,2}, SUM and CONCAT), max rel err " << worst;
    return {true, os.str()};
}

Outcome c8_auc_oracle() {
    Rng rng(808);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(198);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.bernoulli(0.5) ? std::floor(rng.uniform(0.0, 10.0)) / 10.0
                                           : rng.uniform(0.0, 1.0);
            labels[i] = rng.bernoulli(0.4) ? 1 : 0;
        }
        labels[0] = 1;
        labels[n - 1] = 0;
        const double d = std::abs(auc(scores, labels) - oracle::brute_auc(scores, labels));
        worst = std::max(worst, d);
        if (d >= 1e-12) return {false, "AUC differs from pair counting by " + std::to_string(d)};
    }
    std::ostringstream os;
    os << "1000 instances (n <= 200, with ties), max |delta| " << worst;
    return {true, os.str()};
}

Outcome c9_serialization() {
    // plan widths 8 / 16 / 32
    {
        auto plan = modulo_hash(1000, 200);
        if (plan_entry_width(plan.max_rows()) != 8) return {false, "expected 8-bit plan"};
        auto bytes = serialize_plan(plan);
        if (serialize_plan(deserialize_plan(bytes)) != bytes)
            return {false, "8-bit plan round trip not byte-exact"};
    }
    {
        auto plan = qr_hash(5000, 300);
        if (plan_entry_width(plan.max_rows()) != 16) return {false, "expected 16-bit plan"};
        auto bytes = serialize_plan(plan);
        if (serialize_plan(deserialize_plan(bytes)) != bytes)
            return {false, "16-bit plan round trip not byte-exact"};
    }
    {
        auto plan = modulo_hash(100000, 70000);
        if (plan_entry_width(plan.max_rows()) != 32) return {false, "expected 32-bit plan"};
        auto bytes = serialize_plan(plan);
        if (serialize_plan(deserialize_plan(bytes)) != bytes)
            return {false, "32-bit plan round trip not byte-exact"};
    }
    // weight files, float and double
    {
        std::vector<InternalTable<float>> t;
        t.push_back(init_weights<float>(9, 4, 0.5, 1));
        auto bytes = save_weights(t);
        if (save_weights(load_weights<float>(bytes)) != bytes)
            return {false, "float weight round trip not byte-exact"};
    }
    {
        std::vector<InternalTable<double>> t;
        t.push_back(init_weights<double>(9, 4, 0.5, 1));
        auto bytes = save_weights(t);
        if (save_weights(load_weights<double>(bytes)) != bytes)
            return {false, "double weight round trip not byte-exact"};
    }
    return {true, "plans at widths 8/16/32 and weight files round-trip byte-exactly"};
}

struct SweepOutcome {
    std::vector<SweepRow> rows;
    std::map<std::string, std::map<double, std::map<std::uint64_t, double>>> auc_by;
};

SweepOutcome run_accept_sweep(const SynthDataset& data, const SweepConfig& cfg) {
    SweepOutcome out;
    out.rows = run_sweep(cfg, data);
    for (const auto& r : out.rows) {
        if (r.status != "ok")
            throw std::runtime_error("sweep run failed: " + r.method + " frac " +
                                     std::to_string(r.frac));
        out.auc_by[r.method][r.frac][r.seed] = r.auc;
    }
    return out;
}

Outcome c10_directional(const Ctx& ctx) {
    SynthConfig data_cfg;  // desk defaults: F=2, N=50K, G=64, alpha=1.05
    auto data = generate(data_cfg).dataset;

    SweepConfig cfg;
    cfg.teacher_dim = 4;
    cfg.teacher_day_windows = {{0, 6}};
    cfg.teacher_epochs = 1;
    cfg.methods = {"learned", "modulo", "uncompressed"};
    cfg.fractions = {0.05, 0.10, 0.20};
    cfg.internal_tables = {1};
    cfg.student_width = 16;
    cfg.student_epochs = 1;
    cfg.train_first_day = 4;
    cfg.train_last_day = 6;
    cfg.eval_day = 7;
    cfg.seeds = {1, 2, 3};
    cfg.cluster.k = 64;
    cfg.work_dir = (ctx.work / "c10").string();

    auto sweep = run_accept_sweep(data, cfg);
    int wins = 0, total = 0;
    for (double frac : cfg.fractions)
        for (std::uint64_t seed : cfg.seeds) {
            ++total;
            if (sweep.auc_by["learned"][frac][seed] > sweep.auc_by["modulo"][frac][seed]) ++wins;
        }
    auto mean_of = [&](const std::string& method) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [frac, by_seed] : sweep.auc_by[method])
            for (const auto& [seed, a] : by_seed) {
                sum += a;
                ++n;
            }
        return sum / static_cast<double>(n);
    };
    const double learned = mean_of("learned");
    const double modulo = mean_of("modulo");
    const double uncompressed = mean_of("uncompressed");
    std::ostringstream os;
    os << "learned beats modulo " << wins << "/" << total << "; mean AUC learned " << learned
       << ", modulo " << modulo << ", uncompressed " << uncompressed;
    if (wins < 8) return {false, os.str() + " (need >= 8/9 paired wins)"};
    if (!(uncompressed > learned && uncompressed > modulo))
        return {false, os.str() + " (uncompressed must beat both)"};
    return {true, os.str()};
}

Outcome c11_frequency_ablation(const Ctx& ctx) {
    SynthConfig data_cfg;
    data_cfg.zipf_alpha = 1.3;
    data_cfg.seed = 2;
    auto data = generate(data_cfg).dataset;

    SweepConfig cfg;
    cfg.teacher_dim = 4;
    cfg.teacher_day_windows = {{0, 6}};
    cfg.teacher_epochs = 1;
    cfg.methods = {"learned", "learned_nofreq"};
    cfg.fractions = {0.03};
    cfg.internal_tables = {1};
    cfg.student_width = 16;
    cfg.student_epochs = 1;
    cfg.train_first_day = 4;
    cfg.train_last_day = 6;
    cfg.eval_day = 7;
    cfg.seeds = {1, 2, 3};
    cfg.cluster.k = 64;
    cfg.work_dir = (ctx.work / "c11").string();

    auto sweep = run_accept_sweep(data, cfg);
    double with = 0.0, without = 0.0;
    for (const auto& [seed, a] : sweep.auc_by["learned"][0.03]) with += a;
    for (const auto& [seed, a] : sweep.auc_by["learned_nofreq"][0.03]) without += a;
    with /= 3.0;
    without /= 3.0;
    std::ostringstream os;
    os << "alpha=1.3, frac 0.03: mean AUC with frequency " << with << ", without " << without;
    if (with >= without) return {true, os.str()};
    // Directional only: high-skew ablations are noisy at desk scale (the
    // source results are themselves mixed at some sizes), so report the
    // delta and the likely cause instead of blocking.
    os << " -- frequency handling did not help here; delta " << (without - with)
       << ". At this scale the frequency filter mostly reorders merges among rare ids whose "
          "embeddings are near their initialization, so both variants can land within seed "
          "noise of each other.";
    return {false, os.str()};
}

Outcome c12_teacher_window(const Ctx& ctx) {
    SynthConfig data_cfg;
    data_cfg.vocab_sizes = {2000, 2000};
    data_cfg.group_counts = {16, 16};
    data_cfg.samples_per_day = 20000;
    data_cfg.seed = 3;
    auto data = generate(data_cfg).dataset;

    SweepConfig cfg;
    cfg.teacher_dim = 2;
    cfg.teacher_day_windows = {{0, 1}, {0, 6}};
    cfg.teacher_sample_budgets = {10000, 0};
    cfg.methods = {"learned"};
    cfg.fractions = {0.1};
    cfg.internal_tables = {1};
    cfg.student_width = 8;
    cfg.student_epochs = 1;
    cfg.train_first_day = 4;
    cfg.train_last_day = 5;
    cfg.eval_day = 7;
    cfg.seeds = {1};
    cfg.cluster.k = 16;
    cfg.work_dir = (ctx.work / "c12").string();

    auto rows = run_sweep(cfg, data);
    if (rows.size() != 4) return {false, "expected 4 rows (2 windows x 2 budgets)"};
    std::set<std::string> windows;
    std::set<std::uint64_t> budgets;
    for (const auto& r : rows) {
        if (r.status != "ok") return {false, "run failed: " + r.teacher_days};
        windows.insert(r.teacher_days);
        budgets.insert(r.teacher_samples);
    }
    if (windows != std::set<std::string>{"0-1", "0-6"})
        return {false, "teacher day windows not recorded"};
    if (budgets.size() < 3)  // 10K, |0-1 window|, |0-6 window| give >= 3 distinct
        return {false, "teacher sample budgets not reflected in rows"};
    return {true, "2 windows x 2 budgets -> 4 comparable rows with windows and budgets recorded"};
}

Outcome c13_cli_determinism(const Ctx& ctx) {
    auto run_once = [&](const fs::path& dir) {
        fs::create_directories(dir);
        SynthConfig data_cfg;
        data_cfg.vocab_sizes = {400, 400};
        data_cfg.group_counts = {8, 8};
        data_cfg.num_days = 4;
        data_cfg.samples_per_day = 2000;
        data_cfg.seed = 5;
        {
            std::ofstream f(dir / "synth.json");
            f << nlohmann::json(data_cfg).dump(2) << "\n";
        }
        const std::string d = dir.string() + "/";
        if (run_cli(ctx, "gen-data --config " + d + "synth.json --out " + d +
                             "data.csyn --truth-out " + d + "truth.ctru"))
            throw std::runtime_error("gen-data failed");
        if (run_cli(ctx, "train-teacher --data " + d + "data.csyn --dim 2 --days 0..1 --out " + d +
                             "teacher.ctea"))
            throw std::runtime_error("train-teacher failed");
        if (run_cli(ctx, "build-hash --method learned --teacher " + d +
                             "teacher.ctea --target-frac 0.1 --cluster-k 8 --json --out " + d +
                             "plans"))
            throw std::runtime_error("build-hash failed");
        if (run_cli(ctx, "train-eval --data " + d + "data.csyn --plan " + d +
                             "plans.f0.chsh --plan " + d + "plans.f1.chsh --dim 4 "
                             "--train-days 1..2 --eval-day 3 --out " + d + "result.json"))
            throw std::runtime_error("train-eval failed");
        nlohmann::json sweep_cfg{{"dataset", d + "data.csyn"},
                                 {"teacher_dim", 2},
                                 {"teacher_day_windows", {{0, 1}}},
                                 {"methods", {"learned", "modulo"}},
                                 {"fractions", {0.1}},
                                 {"student_width", 4},
                                 {"train_first_day", 1},
                                 {"train_last_day", 2},
                                 {"eval_day", 3},
                                 {"seeds", {1}},
                                 {"cluster_k", 8},
                                 {"work_dir", d + "sweep_work"}};
        {
            std::ofstream f(dir / "sweep.json");
            f << sweep_cfg.dump(2) << "\n";
        }
        if (run_cli(ctx, "sweep --config " + d + "sweep.json --out " + d + "sweep.csv"))
            throw std::runtime_error("sweep failed");
        if (run_cli(ctx, "report --in " + d + "sweep.csv --out " + d + "report.md"))
            throw std::runtime_error("report failed");
    };

    const fs::path a = ctx.work / "c13_a";
    const fs::path b = ctx.work / "c13_b";
    run_once(a);
    run_once(b);

    for (const char* f : {"data.csyn", "truth.ctru", "teacher.ctea", "plans.f0.chsh",
                          "plans.f1.chsh", "plans.f0.json", "plans.f1.json", "report.md"})
        if (!same_bytes(a / f, b / f)) return {false, std::string("output differs: ") + f};

    // train-eval and sweep outputs carry wall-clock timings; compare with
    // the timing fields masked.
    auto masked_json = [](const fs::path& p) {
        auto j = nlohmann::json::parse(read_text(p));
        j["wall_ms"] = 0;
        return j.dump();
    };
    if (masked_json(a / "result.json") != masked_json(b / "result.json"))
        return {false, "train-eval result differs beyond wall_ms"};
    auto masked_csv = [](const fs::path& p) {
        auto rows = read_sweep_csv(p.string());
        std::string out;
        for (auto& r : rows) {
            r.wall_ms = 0;
            out += sweep_row_csv(r) + "\n";
        }
        return out;
    };
    if (masked_csv(a / "sweep.csv") != masked_csv(b / "sweep.csv"))
        return {false, "sweep CSV differs beyond wall_ms"};
    return {true, "all commands byte-identical on re-run (wall-clock fields masked)"};
}

}  // namespace

int main(int argc, char** argv) {
    Ctx ctx;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--cli")
            ctx.cli = argv[i + 1];
        else if (flag == "--workdir")
            ctx.work = argv[i + 1];
    }
    if (ctx.cli.empty() || ctx.work.empty()) {
        std::cerr << "usage: acceptance --cli <lhash binary> --workdir <scratch dir>\n";
        return 2;
    }
    fs::remove_all(ctx.work);
    fs::create_directories(ctx.work);

    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
        bool blocking;
    };
    const std::vector<Criterion> criteria{
        {1, "clustering oracle equivalence", [] { return c1_oracle_equivalence(); }, true},
        {2, "clustering invariant suite", [] { return c2_invariants(); }, true},
        {3, "worked-trace fixtures", [] { return c3_worked_trace(); }, true},
        {4, "chain splitting (ABCDE)", [] { return c4_chain_split(); }, true},
        {5, "QR injectivity", [] { return c5_qr_injectivity(); }, true},
        {6, "FDH isolation", [] { return c6_fdh_isolation(); }, true},
        {7, "gradient correctness", [] { return c7_gradients(); }, true},
        {8, "AUC oracle", [] { return c8_auc_oracle(); }, true},
        {9, "serialization round trips", [] { return c9_serialization(); }, true},
        {10, "directional end-to-end", [&] { return c10_directional(ctx); }, true},
        {11, "frequency ablation direction", [&] { return c11_frequency_ablation(ctx); }, false},
        {12, "teacher-window harness", [&] { return c12_teacher_window(ctx); }, true},
        {13, "CLI determinism", [&] { return c13_cli_determinism(ctx); }, true},
    };

    int blocking_failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
        std::cout << "criterion " << (c.id < 10 ? " " : "") << c.id << ": "
                  << (out.pass ? "PASS" : (c.blocking ? "FAIL" : "FAIL (non-blocking)")) << " ["
                  << secs << "s] " << c.title << " -- " << out.note << "\n";
        std::cout.flush();
        if (!out.pass && c.blocking) ++blocking_failures;
    }
    if (blocking_failures > 0) {
        std::cout << blocking_failures << " blocking criteria failed\n";
        return 1;
    }
    std::cout << "all blocking criteria passed\n";
    return 0;
}
