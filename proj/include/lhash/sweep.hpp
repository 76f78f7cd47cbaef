#ifndef LHASH_SWEEP_HPP
#define LHASH_SWEEP_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lhash/hashers.hpp"
#include "lhash/model.hpp"
#include "lhash/synth.hpp"

// Experiment driver: methods x size fractions x internal-table counts x
// seeds x teacher settings, each run trained and evaluated independently,
// results persisted per run and assembled into one CSV.

namespace lhash {

/// A compression method selected on the command line or in a sweep config.
struct MethodSpec {
    enum class Kind { Learned, Modulo, Qr, Fdh, Uncompressed } kind = Kind::Learned;
    bool freq_filter = true;
    bool freq_weight = true;
    double fdh_retain = 0.0;
    std::string name;

    static MethodSpec parse(const std::string& s) {
        MethodSpec m;
        m.name = s;
        if (s == "learned") {
            m.kind = Kind::Learned;
        } else if (s == "learned_nofreq") {
            m.kind = Kind::Learned;
            m.freq_filter = m.freq_weight = false;
        } else if (s == "learned_weight_only") {
            m.kind = Kind::Learned;
            m.freq_filter = false;
        } else if (s == "learned_filter_only") {
            m.kind = Kind::Learned;
            m.freq_weight = false;
        } else if (s == "modulo") {
            m.kind = Kind::Modulo;
        } else if (s == "qr") {
            m.kind = Kind::Qr;
        } else if (s == "uncompressed") {
            m.kind = Kind::Uncompressed;
        } else if (s.rfind("fdh", 0) == 0) {
            m.kind = Kind::Fdh;
            m.fdh_retain = 0.0;
            auto sep = s.find(':');
            if (sep == std::string::npos) sep = s.find('(');
            if (sep != std::string::npos) m.fdh_retain = std::stod(s.substr(sep + 1));
        } else {
            throw std::invalid_argument("unknown method: " + s);
        }
        return m;
    }
};

/// Build one plan per feature for a method. Features below the cutoff
/// height keep identity plans.
inline std::vector<HashPlan> build_plans(const MethodSpec& method, const TeacherArtifact& teacher,
                                         double frac, std::uint32_t internal_tables,
                                         std::uint64_t cutoff_rows, const ClusterConfig& cluster_base,
                                         MergeMode merge_mode = MergeMode::Sum,
                                         std::uint64_t fdh_seed = 17) {
    std::vector<HashPlan> plans;
    for (std::size_t f = 0; f < teacher.latents.size(); ++f) {
        const std::uint64_t n = teacher.latents[f].n;
        if (method.kind == MethodSpec::Kind::Uncompressed || n < cutoff_rows) {
            plans.push_back(identity_plan(n));
            continue;
        }
        const auto target_rows =
            static_cast<std::uint64_t>(std::llround(frac * static_cast<double>(n)));
        if (target_rows >= n) {
            plans.push_back(identity_plan(n));
            continue;
        }
        if (target_rows == 0) throw std::invalid_argument("build_plans: fraction too small");
        switch (method.kind) {
            case MethodSpec::Kind::Learned: {
                ClusterConfig cfg = cluster_base;
                cfg.use_frequency_filter = method.freq_filter;
                cfg.use_frequency_weighting = method.freq_weight;
                plans.push_back(learned_hash(teacher.latents[f], teacher.access_counts[f],
                                             target_rows, internal_tables, merge_mode, cfg));
                break;
            }
            case MethodSpec::Kind::Modulo:
                plans.push_back(modulo_hash(n, target_rows));
                break;
            case MethodSpec::Kind::Qr:
                plans.push_back(qr_hash(n, target_rows, merge_mode));
                break;
            case MethodSpec::Kind::Fdh:
                plans.push_back(freq_double_hash(teacher.access_counts[f], n, target_rows,
                                                 method.fdh_retain, mix64(fdh_seed),
                                                 mix64(fdh_seed + 1)));
                break;
            default:
                break;
        }
    }
    return plans;
}

inline std::uint64_t plans_total_rows(const std::vector<HashPlan>& plans) {
    std::uint64_t rows = 0;
    for (const auto& p : plans) rows += p.total_rows();
    return rows;
}

/// Bytes spent on id -> row lookup arrays (H * N entries at the packed
/// width), reported alongside weight rows so total size accounting is
/// visible. Identity plans carry no lookup table.
inline std::uint64_t plans_lookup_bytes(const std::vector<HashPlan>& plans) {
    std::uint64_t bytes = 0;
    for (const auto& p : plans) {
        if (p.method_tag == "identity") continue;
        const auto width = static_cast<std::uint64_t>(plan_entry_width(p.max_rows()));
        bytes += p.tables.size() * p.original_height * (width / 8);
    }
    return bytes;
}

struct SweepConfig {
    std::string dataset_path;
    std::uint32_t teacher_dim = 4;
    std::vector<std::uint64_t> teacher_sample_budgets = {0};       // 0 = whole window
    std::vector<std::pair<std::uint32_t, std::uint32_t>> teacher_day_windows = {{0, 6}};
    std::uint32_t teacher_epochs = 1;
    std::vector<std::string> methods = {"learned", "modulo"};
    std::vector<double> fractions = {0.05, 0.1, 0.2};
    std::vector<std::uint32_t> internal_tables = {1};
    std::uint32_t student_width = 16;
    std::uint32_t student_epochs = 1;
    std::uint32_t train_first_day = 4, train_last_day = 4;
    std::uint32_t eval_day = 7;
    std::uint64_t cutoff_rows = 0;
    std::vector<std::uint64_t> seeds = {1, 2};
    std::uint64_t batch_size = 1024;
    ClusterConfig cluster;  // k/size_max defaults; target set per run
    std::string work_dir = "sweep_work";

    void validate() const {
        if (seeds.empty()) throw std::invalid_argument("SweepConfig: need >= 1 seed");
        if (methods.empty()) throw std::invalid_argument("SweepConfig: need >= 1 method");
        for (double f : fractions)
            if (f <= 0.0 || f >= 1.0)
                throw std::invalid_argument("SweepConfig: fractions must be in (0, 1)");
        for (const auto& m : methods) MethodSpec::parse(m);  // throws on unknown
    }
};

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig c;
    c.dataset_path = j.value("dataset", c.dataset_path);
    c.teacher_dim = j.value("teacher_dim", c.teacher_dim);
    c.teacher_sample_budgets =
        j.value("teacher_sample_budgets", c.teacher_sample_budgets);
    if (j.contains("teacher_day_windows")) {
        c.teacher_day_windows.clear();
        for (const auto& w : j.at("teacher_day_windows"))
            c.teacher_day_windows.emplace_back(w.at(0).get<std::uint32_t>(),
                                               w.at(1).get<std::uint32_t>());
    }
    c.teacher_epochs = j.value("teacher_epochs", c.teacher_epochs);
    c.methods = j.value("methods", c.methods);
    c.fractions = j.value("fractions", c.fractions);
    c.internal_tables = j.value("internal_tables", c.internal_tables);
    c.student_width = j.value("student_width", c.student_width);
    c.student_epochs = j.value("student_epochs", c.student_epochs);
    c.train_first_day = j.value("train_first_day", c.train_first_day);
    c.train_last_day = j.value("train_last_day", c.train_last_day);
    c.eval_day = j.value("eval_day", c.eval_day);
    c.cutoff_rows = j.value("cutoff_rows", c.cutoff_rows);
    c.seeds = j.value("seeds", c.seeds);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.cluster.k = j.value("cluster_k", std::uint64_t{64});
    c.cluster.size_max = j.value("cluster_size_max", std::uint64_t{0});
    c.work_dir = j.value("work_dir", c.work_dir);
    c.validate();
    return c;
}

struct SweepRow {
    std::string method;
    double frac = 0.0;
    std::uint32_t tables = 1;
    std::uint64_t seed = 0;
    std::string teacher_days;
    std::uint64_t teacher_samples = 0;
    double auc = 0.0;
    double logloss = 0.0;
    std::uint64_t rows_total = 0;
    std::uint64_t lookup_bytes = 0;
    std::uint64_t wall_ms = 0;
    std::string status = "ok";
};

inline const char* kSweepCsvHeader =
    "method,frac,tables,seed,teacher_days,teacher_samples,auc,logloss,rows_total,lookup_bytes,"
    "wall_ms,status";

inline std::string sweep_row_csv(const SweepRow& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.method << ',' << r.frac << ',' << r.tables << ',' << r.seed << ',' << r.teacher_days
       << ',' << r.teacher_samples << ',' << r.auc << ',' << r.logloss << ',' << r.rows_total
       << ',' << r.lookup_bytes << ',' << r.wall_ms << ',' << r.status;
    return os.str();
}

/// One train + eval pass for a prepared plan set. Seed covers student
/// initialization and shuffling.
inline EvalResult train_eval_student(const SynthDataset& data, std::vector<HashPlan> plans,
                                     std::uint32_t width, std::uint32_t epochs,
                                     std::uint32_t train_first, std::uint32_t train_last,
                                     std::uint32_t eval_day, std::uint64_t seed,
                                     std::uint64_t batch_size = 1024) {
    CtrModel<float> model(std::move(plans), width, seed);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg.batch_size = batch_size;
    train(model, data, day_window_indices(data, train_first, train_last), cfg);
    return evaluate(model, data, day_window_indices(data, eval_day, eval_day));
}

namespace detail {

struct RunKey {
    std::string method;
    double frac;
    std::uint32_t tables;
    std::uint64_t seed;
    std::uint32_t window_first, window_last;
    std::uint64_t budget;

    std::string id() const {
        std::ostringstream os;
        os.precision(10);
        os << method << '|' << frac << '|' << tables << '|' << seed << '|' << window_first << '-'
           << window_last << '|' << budget;
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : os.str()) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
        std::ostringstream hex;
        hex << std::hex << h;
        return hex.str();
    }
};

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

/// Full grid run. Resumable: each run's result lives in its own JSON file
/// keyed by the parameter tuple; existing files are skipped and the CSV is
/// reassembled from all artifacts, so the final CSV does not depend on how
/// often the sweep was interrupted. `jobs` > 1 runs students concurrently;
/// every run touches only its own artifact file.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg, const SynthDataset& data,
                                       unsigned jobs = 1) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.work_dir);

    // Teachers are shared across runs: one per (window, budget).
    std::map<std::string, TeacherArtifact> teachers;
    for (const auto& [first, last] : cfg.teacher_day_windows) {
        for (std::uint64_t budget : cfg.teacher_sample_budgets) {
            std::ostringstream key;
            key << first << '-' << last << '@' << budget;
            fs::path cache = fs::path(cfg.work_dir) /
                             ("teacher_" + std::to_string(cfg.teacher_dim) + "_" + key.str() + ".ctea");
            if (fs::exists(cache)) {
                teachers[key.str()] = deserialize_teacher(read_file(cache.string()));
            } else {
                TrainConfig tc;
                tc.epochs = cfg.teacher_epochs;
                tc.seed = 42;
                tc.batch_size = cfg.batch_size;
                auto art = train_teacher(data, cfg.teacher_dim, first, last, budget, tc);
                write_file(cache.string(), serialize_teacher(art));
                teachers[key.str()] = std::move(art);
            }
        }
    }

    struct Pending {
        detail::RunKey key;
        const TeacherArtifact* teacher;
    };
    std::vector<Pending> runs;
    for (const auto& [first, last] : cfg.teacher_day_windows)
        for (std::uint64_t budget : cfg.teacher_sample_budgets)
            for (const auto& method : cfg.methods)
                for (double frac : cfg.fractions)
                    for (std::size_t ti = 0; ti < cfg.internal_tables.size(); ++ti) {
                        const auto spec = MethodSpec::parse(method);
                        // Baselines have a fixed internal-table count; run
                        // them once regardless of the learned T axis.
                        if (spec.kind != MethodSpec::Kind::Learned && ti > 0) continue;
                        for (std::uint64_t seed : cfg.seeds) {
                            std::ostringstream tkey;
                            tkey << first << '-' << last << '@' << budget;
                            runs.push_back(Pending{
                                detail::RunKey{method, frac, cfg.internal_tables[ti], seed, first,
                                               last, budget},
                                &teachers.at(tkey.str())});
                        }
                    }

    std::mutex plan_mutex;
    std::map<std::string, std::vector<HashPlan>> plan_cache;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            const auto& run = runs[i];
            fs::path artifact = fs::path(cfg.work_dir) / ("run_" + run.key.id() + ".json");
            if (fs::exists(artifact)) continue;

            SweepRow row;
            row.method = run.key.method;
            row.frac = run.key.frac;
            row.tables = run.key.tables;
            row.seed = run.key.seed;
            row.teacher_days =
                std::to_string(run.key.window_first) + "-" + std::to_string(run.key.window_last);
            row.teacher_samples = run.teacher->samples_seen;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                std::vector<HashPlan> plans;
                {
                    std::ostringstream pk;
                    pk.precision(10);
                    pk << run.key.method << '|' << run.key.frac << '|' << run.key.tables << '|'
                       << run.key.window_first << '-' << run.key.window_last << '|'
                       << run.key.budget;
                    std::lock_guard lock(plan_mutex);
                    auto it = plan_cache.find(pk.str());
                    if (it == plan_cache.end()) {
                        auto spec = MethodSpec::parse(run.key.method);
                        it = plan_cache
                                 .emplace(pk.str(),
                                          build_plans(spec, *run.teacher, run.key.frac,
                                                      run.key.tables, cfg.cutoff_rows, cfg.cluster))
                                 .first;
                    }
                    plans = it->second;
                }
                row.rows_total = plans_total_rows(plans);
                row.lookup_bytes = plans_lookup_bytes(plans);
                auto eval = train_eval_student(data, std::move(plans), cfg.student_width,
                                               cfg.student_epochs, cfg.train_first_day,
                                               cfg.train_last_day, cfg.eval_day, run.key.seed,
                                               cfg.batch_size);
                row.auc = eval.auc;
                row.logloss = eval.logloss;
            } catch (const std::exception& e) {
                row.status = "failed";
                nlohmann::json err{{"error", e.what()}};
                row.auc = 0.0;
                row.logloss = 0.0;
            }
            row.wall_ms = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count());

            nlohmann::json j{{"method", row.method},
                             {"frac", row.frac},
                             {"tables", row.tables},
                             {"seed", row.seed},
                             {"teacher_days", row.teacher_days},
                             {"teacher_samples", row.teacher_samples},
                             {"auc", row.auc},
                             {"logloss", row.logloss},
                             {"rows_total", row.rows_total},
                             {"lookup_bytes", row.lookup_bytes},
                             {"wall_ms", row.wall_ms},
                             {"status", row.status}};
            detail::atomic_write(artifact, j.dump(2));
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Assemble rows from artifacts in deterministic grid order.
    std::vector<SweepRow> rows;
    for (const auto& run : runs) {
        fs::path artifact = fs::path(cfg.work_dir) / ("run_" + run.key.id() + ".json");
        std::ifstream f(artifact);
        if (!f) throw std::runtime_error("sweep: missing artifact " + artifact.string());
        auto j = nlohmann::json::parse(f);
        SweepRow row;
        row.method = j.at("method");
        row.frac = j.at("frac");
        row.tables = j.at("tables");
        row.seed = j.at("seed");
        row.teacher_days = j.at("teacher_days");
        row.teacher_samples = j.at("teacher_samples");
        row.auc = j.at("auc");
        row.logloss = j.at("logloss");
        row.rows_total = j.at("rows_total");
        row.lookup_bytes = j.at("lookup_bytes");
        row.wall_ms = j.at("wall_ms");
        row.status = j.at("status");
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << kSweepCsvHeader << '\n';
    for (const auto& r : rows) os << sweep_row_csv(r) << '\n';
    detail::atomic_write(path, os.str());
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty CSV: " + path);
    if (line != kSweepCsvHeader) throw std::runtime_error("unexpected CSV header in " + path);
    std::vector<SweepRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() != 12) throw std::runtime_error("malformed CSV row: " + line);
        SweepRow r;
        r.method = cols[0];
        r.frac = std::stod(cols[1]);
        r.tables = static_cast<std::uint32_t>(std::stoul(cols[2]));
        r.seed = std::stoull(cols[3]);
        r.teacher_days = cols[4];
        r.teacher_samples = std::stoull(cols[5]);
        r.auc = std::stod(cols[6]);
        r.logloss = std::stod(cols[7]);
        r.rows_total = std::stoull(cols[8]);
        r.lookup_bytes = std::stoull(cols[9]);
        r.wall_ms = std::stoull(cols[10]);
        r.status = cols[11];
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Markdown summary: mean +/- sample stddev AUC per (method, frac), best
/// method flagged per frac.
inline std::string sweep_report(const std::vector<SweepRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("report: no rows");
    struct Agg {
        std::vector<double> aucs;
    };
    std::map<double, std::map<std::string, Agg>> by_frac;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        by_frac[r.frac][r.method].aucs.push_back(r.auc);
    }
    std::ostringstream os;
    os << "# Sweep summary\n\n";
    os << "| frac | method | mean AUC | stddev | runs | best |\n";
    os << "|------|--------|----------|--------|------|------|\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& [frac, methods] : by_frac) {
        std::string best;
        double best_auc = -1.0;
        for (const auto& [name, agg] : methods) {
            double mean = 0.0;
            for (double a : agg.aucs) mean += a;
            mean /= static_cast<double>(agg.aucs.size());
            if (mean > best_auc) {
                best_auc = mean;
                best = name;
            }
        }
        for (const auto& [name, agg] : methods) {
            double mean = 0.0;
            for (double a : agg.aucs) mean += a;
            mean /= static_cast<double>(agg.aucs.size());
            std::string stddev = "";
            if (agg.aucs.size() > 1) {
                double ss = 0.0;
                for (double a : agg.aucs) ss += (a - mean) * (a - mean);
                std::ostringstream sd;
                sd.precision(6);
                sd << std::fixed << std::sqrt(ss / static_cast<double>(agg.aucs.size() - 1));
                stddev = sd.str();
            }
            os << "| " << frac << " | " << name << " | " << mean << " | " << stddev << " | "
               << agg.aucs.size() << " | " << (name == best ? "*" : "") << " |\n";
        }
    }
    return os.str();
}

}  // namespace lhash

#endif  // LHASH_SWEEP_HPP
