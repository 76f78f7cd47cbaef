// lhash command line: synthetic data generation, teacher training, hash
// plan construction, student train/eval, sweeps, and reports.
//
// Exit codes: 0 ok, 2 usage/config error, 3 runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lhash/hashers.hpp"
#include "lhash/model.hpp"
#include "lhash/sweep.hpp"
#include "lhash/synth.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<std::uint32_t, std::uint32_t> parse_day_range(const std::string& s) {
    auto sep = s.find("..");
    if (sep == std::string::npos) {
        auto day = static_cast<std::uint32_t>(std::stoul(s));
        return {day, day};
    }
    return {static_cast<std::uint32_t>(std::stoul(s.substr(0, sep))),
            static_cast<std::uint32_t>(std::stoul(s.substr(sep + 2)))};
}

void check_day_range(const lhash::SynthDataset& data, std::uint32_t first, std::uint32_t last,
                     const char* what) {
    if (first > last || last >= data.config.num_days)
        throw UsageError(std::string(what) + " day range " + std::to_string(first) + ".." +
                         std::to_string(last) + " outside dataset (days 0.." +
                         std::to_string(data.config.num_days - 1) + ")");
}

int cmd_gen_data(const std::string& config_path, const std::string& out,
                 const std::string& truth_out) {
    std::ifstream f(config_path);
    if (!f) throw UsageError("cannot open config: " + config_path);
    lhash::SynthConfig cfg;
    try {
        cfg = nlohmann::json::parse(f).get<lhash::SynthConfig>();
        cfg.validate();
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad config: ") + e.what());
    }
    auto gen = lhash::generate(cfg);
    lhash::write_file(out, lhash::serialize_dataset(gen.dataset));
    if (!truth_out.empty()) lhash::write_file(truth_out, lhash::serialize_truth(gen.truth));
    auto sep = lhash::separation_report(gen.truth);
    std::cout << "wrote " << gen.dataset.size() << " samples to " << out
              << " (positive rate " << [&] {
                     double p = 0;
                     for (auto l : gen.dataset.label) p += l;
                     return p / static_cast<double>(gen.dataset.size());
                 }() << ", separation ratio " << sep.ratio() << ")\n";
    return 0;
}

int cmd_train_teacher(const std::string& data_path, std::uint32_t dim, std::uint64_t samples,
                      const std::string& days, const std::string& out, std::uint32_t epochs,
                      std::uint64_t seed) {
    auto data = lhash::deserialize_dataset(lhash::read_file(data_path));
    auto [first, last] = parse_day_range(days);
    check_day_range(data, first, last, "teacher");
    auto window = lhash::day_window_indices(data, first, last);
    if (samples > window.size()) {
        std::cerr << "warning: --samples " << samples << " exceeds window size " << window.size()
                  << "; using all samples\n";
        samples = 0;
    }
    lhash::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    auto art = lhash::train_teacher(data, dim, first, last, samples, cfg);
    lhash::write_file(out, lhash::serialize_teacher(art));
    std::cout << "teacher trained on days " << first << ".." << last << " (" << art.samples_seen
              << " samples, D=" << dim << ") -> " << out << "\n";
    return 0;
}

int cmd_build_hash(const std::string& method_str, const std::string& teacher_path, double frac,
                   std::uint32_t tables, double retain_frac, std::uint64_t cutoff,
                   const std::string& out_prefix, const std::string& merge, std::uint64_t cluster_k,
                   std::uint64_t size_max, bool dump_json) {
    lhash::MethodSpec method;
    try {
        method = lhash::MethodSpec::parse(method_str);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    if (method.kind == lhash::MethodSpec::Kind::Fdh && retain_frac >= 0.0)
        method.fdh_retain = retain_frac;
    if (frac <= 0.0 || frac > 1.0) throw UsageError("--target-frac must be in (0, 1]");

    auto teacher = lhash::deserialize_teacher(lhash::read_file(teacher_path));
    if (method.kind == lhash::MethodSpec::Kind::Learned && !teacher.latents.empty() &&
        tables > teacher.latents[0].d)
        throw UsageError("--tables " + std::to_string(tables) + " exceeds teacher dimension D=" +
                         std::to_string(teacher.latents[0].d));
    if (frac == 1.0)
        std::cerr << "warning: --target-frac 1.0 requests no compression; emitting identity plans\n";

    lhash::ClusterConfig cluster;
    cluster.k = cluster_k;
    cluster.size_max = size_max;
    lhash::MergeMode mode = merge == "concat" ? lhash::MergeMode::Concat : lhash::MergeMode::Sum;
    auto plans = lhash::build_plans(method, teacher, frac, tables, cutoff, cluster, mode);

    for (std::size_t f = 0; f < plans.size(); ++f) {
        const std::string path = out_prefix + ".f" + std::to_string(f) + ".chsh";
        lhash::write_file(path, lhash::serialize_plan(plans[f]));
        if (dump_json) {
            std::ofstream jf(out_prefix + ".f" + std::to_string(f) + ".json");
            jf << lhash::plan_to_json(plans[f]).dump(2) << "\n";
        }
        std::cout << "feature " << f << ": " << plans[f].total_rows() << " rows across "
                  << plans[f].tables.size() << " internal table(s) -> " << path << "\n";
    }
    return 0;
}

int cmd_train_eval(const std::string& data_path, const std::vector<std::string>& plan_paths,
                   std::uint32_t dim, const std::string& train_days, std::uint32_t eval_day,
                   std::uint64_t seed, const std::string& out, std::uint32_t epochs,
                   std::uint64_t batch) {
    auto data = lhash::deserialize_dataset(lhash::read_file(data_path));
    auto [first, last] = parse_day_range(train_days);
    check_day_range(data, first, last, "training");
    check_day_range(data, eval_day, eval_day, "eval");
    if (eval_day <= last)
        std::cerr << "warning: eval day " << eval_day
                  << " is not after the training window (allowed for diagnostics)\n";

    std::vector<lhash::HashPlan> plans;
    if (plan_paths.empty()) {
        for (std::uint32_t f = 0; f < data.config.num_features; ++f)
            plans.push_back(lhash::identity_plan(data.config.vocab_sizes[f]));
    } else {
        if (plan_paths.size() != data.config.num_features)
            throw UsageError("need one --plan per feature (" +
                             std::to_string(data.config.num_features) + ")");
        for (const auto& p : plan_paths)
            plans.push_back(lhash::deserialize_plan(lhash::read_file(p)));
    }
    const std::uint64_t rows_total = lhash::plans_total_rows(plans);
    const std::uint64_t lookup_bytes = lhash::plans_lookup_bytes(plans);

    const auto t0 = std::chrono::steady_clock::now();
    auto eval = lhash::train_eval_student(data, std::move(plans), dim, epochs, first, last,
                                          eval_day, seed, batch);
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

    nlohmann::json j{{"method", plan_paths.empty() ? "uncompressed" : "from-plan"},
                     {"frac", 0.0},
                     {"tables", plan_paths.size()},
                     {"seed", seed},
                     {"teacher_days", ""},
                     {"teacher_samples", 0},
                     {"auc", eval.auc},
                     {"logloss", eval.logloss},
                     {"rows_total", rows_total},
                     {"lookup_bytes", lookup_bytes},
                     {"wall_ms", wall_ms},
                     {"status", "ok"},
                     {"train_days", train_days},
                     {"eval_day", eval_day},
                     {"eval_samples", eval.samples}};
    if (out.empty())
        std::cout << j.dump(2) << "\n";
    else {
        std::ofstream f(out, std::ios::trunc);
        f << j.dump(2) << "\n";
        std::cout << "auc " << eval.auc << " logloss " << eval.logloss << " -> " << out << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_csv, unsigned jobs) {
    std::ifstream f(config_path);
    if (!f) throw UsageError("cannot open sweep config: " + config_path);
    lhash::SweepConfig cfg;
    try {
        cfg = lhash::sweep_config_from_json(nlohmann::json::parse(f));
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad sweep config: ") + e.what());
    }
    if (cfg.dataset_path.empty()) throw UsageError("sweep config missing 'dataset'");
    auto data = lhash::deserialize_dataset(lhash::read_file(cfg.dataset_path));
    auto rows = lhash::run_sweep(cfg, data, jobs);
    lhash::write_sweep_csv(out_csv, rows);
    std::cout << rows.size() << " rows -> " << out_csv << "\n";
    return 0;
}

int cmd_report(const std::string& in_csv, const std::string& out_md) {
    auto rows = lhash::read_sweep_csv(in_csv);
    auto report = lhash::sweep_report(rows);
    if (out_md.empty())
        std::cout << report;
    else {
        std::ofstream f(out_md, std::ios::trunc);
        f << report;
        std::cout << "report -> " << out_md << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned hash functions for embedding table height compression"};
    app.require_subcommand(1);

    std::string config, out, truth_out, data_path, days = "0..0", teacher_path, method = "learned";
    std::string merge = "sum", in_csv;
    std::vector<std::string> plan_paths;
    std::uint32_t dim = 4, tables = 1, eval_day = 0, epochs = 1;
    std::uint64_t samples = 0, seed = 1, cutoff = 0, cluster_k = 64, size_max = 0, batch = 1024;
    double frac = 0.1, retain_frac = -1.0;
    unsigned jobs = 1;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic CTR dataset");
    gen->add_option("--config", config, "SynthConfig JSON path")->required();
    gen->add_option("--out", out, "output dataset path")->required();
    gen->add_option("--truth-out", truth_out, "optional ground-truth dump (diagnostics)");

    auto* tt = app.add_subcommand("train-teacher", "train a low-dimension teacher model");
    tt->add_option("--data", data_path)->required();
    tt->add_option("--dim", dim, "teacher embedding width D");
    tt->add_option("--samples", samples, "sample budget (0 = whole window)");
    tt->add_option("--days", days, "training day window a..b");
    tt->add_option("--epochs", epochs);
    tt->add_option("--seed", seed);
    tt->add_option("--out", out)->required();

    auto* bh = app.add_subcommand("build-hash", "build hash plans from a teacher artifact");
    bh->add_option("--method", method, "learned|learned_nofreq|learned_weight_only|"
                                       "learned_filter_only|modulo|qr|fdh|uncompressed");
    bh->add_option("--teacher", teacher_path)->required();
    bh->add_option("--target-frac", frac, "compressed height / original height");
    bh->add_option("--tables", tables, "internal tables (learned method)");
    bh->add_option("--retain-frac", retain_frac, "FDH high-frequency retention fraction");
    bh->add_option("--cutoff", cutoff, "skip tables shorter than this (identity plan)");
    bh->add_option("--merge", merge, "sum|concat");
    bh->add_option("--cluster-k", cluster_k, "merges per clustering step");
    bh->add_option("--size-max", size_max, "max cluster size (0 = 4*ceil(N/target))");
    bool dump_json = false;
    bh->add_flag("--json", dump_json, "also dump plans as JSON");
    bh->add_option("--out", out, "output path prefix (<prefix>.f<k>.chsh)")->required();

    auto* te = app.add_subcommand("train-eval", "train a student through plans and evaluate");
    te->add_option("--data", data_path)->required();
    te->add_option("--plan", plan_paths, "plan file per feature; omit for uncompressed");
    te->add_option("--dim", dim, "student embedding width");
    te->add_option("--train-days", days, "training day window a..b");
    te->add_option("--eval-day", eval_day)->required();
    te->add_option("--seed", seed);
    te->add_option("--epochs", epochs);
    te->add_option("--batch", batch);
    te->add_option("--out", out, "result JSON path (stdout if omitted)");

    auto* sw = app.add_subcommand("sweep", "run a full method x fraction x seed grid");
    sw->add_option("--config", config, "SweepConfig JSON path")->required();
    sw->add_option("--out", out, "output CSV path")->required();
    sw->add_option("--jobs", jobs, "concurrent runs");

    auto* rp = app.add_subcommand("report", "summarize a sweep CSV as markdown");
    rp->add_option("--in", in_csv, "sweep CSV path")->required();
    rp->add_option("--out", out, "markdown output (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config, out, truth_out);
        if (tt->parsed()) return cmd_train_teacher(data_path, dim, samples, days, out, epochs, seed);
        if (bh->parsed())
            return cmd_build_hash(method, teacher_path, frac, tables, retain_frac, cutoff, out,
                                  merge, cluster_k, size_max, dump_json);
        if (te->parsed())
            return cmd_train_eval(data_path, plan_paths, dim, days, eval_day, seed, out, epochs,
                                  batch);
        if (sw->parsed()) return cmd_sweep(config, out, jobs);
        if (rp->parsed()) return cmd_report(in_csv, out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
