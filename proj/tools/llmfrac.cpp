// llmfrac: estimates the population fraction of LLM-generated or heavily
// LLM-modified documents in a corpus, from a token-occurrence mixture model
// fit on a pre-LLM human corpus and a prompt-generated LLM parallel corpus.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "llmfrac/analysis.hpp"
#include "llmfrac/calibration.hpp"
#include "llmfrac/corpus.hpp"
#include "llmfrac/errors.hpp"
#include "llmfrac/estimator.hpp"
#include "llmfrac/generation.hpp"
#include "llmfrac/kernels.hpp"
#include "llmfrac/model.hpp"
#include "llmfrac/parallel.hpp"

namespace {

using json = nlohmann::json;
using namespace llmfrac;

struct GlobalOptions {
    std::string config_path;
    unsigned threads = 0;
    std::string kernel = "auto";
    bool json_errors = false;
    bool to_stdout = false;

    std::uint64_t seed = 0;
    bool seed_set = false;
};

struct Settings {
    FitConfig fit;
    BucketSpec bucket;

    std::string grid = "0:0.25:0.025";
    int n_per_mix = 1000;
    int replicates = 3;
    std::string holdout_cutoff = "2022-11-30";

    int boot = 1000;
    double level = 0.95;

    GenClientConfig gen;
    std::string gen_mode = "mock";
    std::string cache_dir;
};

std::vector<double> parse_grid(const std::string& spec) {
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0) {
        raise(Errc::invalid_argument, "--grid wants start:stop:step, got '" + spec + "'");
    }
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double v = start + static_cast<double>(i) * step;
        if (v > stop + step * 1e-9) break;
        grid.push_back(v);
    }
    if (grid.empty()) raise(Errc::invalid_argument, "empty grid: '" + spec + "'");
    return grid;
}

// Config file mirrors the flag names; flags given on the command line win.
void load_config_file(const std::string& path, GlobalOptions& global, Settings& s) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) raise(Errc::invalid_argument, path + ": not a JSON object");

    if (j.contains("seed")) {
        global.seed = j["seed"].get<std::uint64_t>();
        global.seed_set = true;
    }
    if (j.contains("threads")) global.threads = j["threads"].get<unsigned>();
    if (j.contains("kernel")) global.kernel = j["kernel"].get<std::string>();

    if (j.contains("fit")) {
        const json& f = j["fit"];
        if (f.contains("unit")) s.fit.unit = unit_from_name(f["unit"].get<std::string>());
        if (f.contains("min_df")) s.fit.min_df = f["min_df"].get<int>();
        if (f.contains("max_vocab")) s.fit.max_vocab = f["max_vocab"].get<int>();
        if (f.contains("smoothing_beta")) s.fit.smoothing_beta = f["smoothing_beta"].get<double>();
        if (f.contains("clamp_epsilon")) s.fit.clamp_epsilon = f["clamp_epsilon"].get<double>();
        if (f.contains("min_docs")) s.fit.min_docs = f["min_docs"].get<int>();
    }
    if (j.contains("bucket")) {
        const json& b = j["bucket"];
        if (b.contains("granularity")) {
            s.bucket.granularity = granularity_from_name(b["granularity"].get<std::string>());
        }
        if (b.contains("n_max_per_bucket")) s.bucket.n_max_per_bucket = b["n_max_per_bucket"].get<int>();
        if (b.contains("min_units_per_bucket")) {
            s.bucket.min_units_per_bucket = b["min_units_per_bucket"].get<int>();
        }
    }
    if (j.contains("calibration")) {
        const json& c = j["calibration"];
        if (c.contains("grid")) s.grid = c["grid"].get<std::string>();
        if (c.contains("n_per_mix")) s.n_per_mix = c["n_per_mix"].get<int>();
        if (c.contains("replicates")) s.replicates = c["replicates"].get<int>();
        if (c.contains("holdout_cutoff")) s.holdout_cutoff = c["holdout_cutoff"].get<std::string>();
    }
    if (j.contains("bootstrap")) {
        const json& b = j["bootstrap"];
        if (b.contains("B")) s.boot = b["B"].get<int>();
        if (b.contains("level")) s.level = b["level"].get<double>();
    }
    if (j.contains("generation")) {
        const json& g = j["generation"];
        if (g.contains("endpoint_url")) s.gen.endpoint_url = g["endpoint_url"].get<std::string>();
        if (g.contains("model_id")) s.gen.model_id = g["model_id"].get<std::string>();
        if (g.contains("api_key_env_var")) s.gen.api_key_env_var = g["api_key_env_var"].get<std::string>();
        if (g.contains("max_concurrent")) s.gen.max_concurrent = g["max_concurrent"].get<int>();
        if (g.contains("requests_per_minute")) {
            s.gen.requests_per_minute = g["requests_per_minute"].get<int>();
        }
        if (g.contains("cache_dir")) s.cache_dir = g["cache_dir"].get<std::string>();
        if (g.contains("mode")) s.gen_mode = g["mode"].get<std::string>();
        if (g.contains("prompts")) {
            s.gen.prompts.stage1 = g["prompts"].at("stage1").get<std::string>();
            s.gen.prompts.stage2 = g["prompts"].at("stage2").get<std::string>();
        }
    }
}

json fit_config_json(const FitConfig& cfg) {
    return json{{"unit", unit_name(cfg.unit)},
                {"min_df", cfg.min_df},
                {"max_vocab", cfg.max_vocab},
                {"smoothing_beta", cfg.smoothing_beta},
                {"clamp_epsilon", cfg.clamp_epsilon},
                {"min_docs", cfg.min_docs}};
}

// Effective settings echoed into every output. Execution-only knobs
// (threads) are excluded: they must never change output bytes.
json provenance_json(const std::string& command, const GlobalOptions& global, json config) {
    json p{{"command", command}, {"config", std::move(config)},
           {"kernel", kernels::active().name}};
    if (global.seed_set) p["seed"] = global.seed;
    return p;
}

void write_output(const json& j, const std::string& out_path, bool to_stdout) {
    std::ofstream out(out_path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + out_path);
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::io_error, "write failed: " + out_path);
    if (to_stdout) std::cout << j.dump(2) << '\n';
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_seed(const GlobalOptions& global) {
    if (!global.seed_set) {
        throw UsageError("--seed is required for stochastic commands (no time-based seeding)");
    }
}

void report_load(const LoadReport& rep, const std::string& path) {
    if (!rep.errors.empty()) {
        std::cerr << path << ": skipped " << rep.errors.size() << " invalid line(s); first at line "
                  << rep.errors.front().line << ": " << rep.errors.front().reason << '\n';
    }
}

Corpus load_checked(const std::string& path) {
    LoadReport rep;
    Corpus c = load_corpus(path, &rep);
    report_load(rep, path);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    GlobalOptions global;
    Settings s;

    // The config file provides defaults, so it must load before CLI11
    // binds option defaults; flags then override.
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        try {
            if (arg == "--config" && i + 1 < argc) {
                load_config_file(argv[i + 1], global, s);
            } else if (arg.rfind("--config=", 0) == 0) {
                load_config_file(arg.substr(9), global, s);
            }
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }

    CLI::App app{"Population-level estimator of the LLM-generated fraction of a text corpus"};
    app.require_subcommand(1);
    // global flags (--seed, --threads, ...) may follow the subcommand
    app.fallthrough();
    app.add_option("--config", global.config_path, "JSON config file; flags override its values");
    app.add_option("--threads", global.threads, "worker thread cap (never changes results)");
    app.add_option("--kernel", global.kernel, "compute kernels: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
    app.add_flag("--json-errors", global.json_errors, "emit errors as JSON on stderr");
    app.add_flag("--stdout", global.to_stdout, "also print the primary JSON result to stdout");
    auto* seed_opt = app.add_option("--seed", global.seed, "seed for all randomized steps");

    std::string human_path, llm_path, corpus_path, model_path, out_path, csv_path;
    std::string in_path, a_path, b_path, by = "month", groupby, unit_name_arg;

    std::function<void()> action;

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit the human/LLM token-occurrence model");
    fit_cmd->fallthrough();
    fit_cmd->add_option("--human", human_path, "pre-LLM human corpus (JSONL)")->required();
    fit_cmd->add_option("--llm", llm_path, "LLM parallel corpus (JSONL)")->required();
    fit_cmd->add_option("--out", out_path, "output model JSON")->required();
    fit_cmd->add_option("--unit", unit_name_arg, "estimation unit: document|sentence");
    fit_cmd->add_option("--min-df", s.fit.min_df, "minimum per-corpus document frequency");
    fit_cmd->add_option("--max-vocab", s.fit.max_vocab, "vocabulary cap");
    fit_cmd->add_option("--beta", s.fit.smoothing_beta, "smoothing pseudocount");
    fit_cmd->add_option("--epsilon", s.fit.clamp_epsilon, "probability clamp");
    fit_cmd->add_option("--min-docs", s.fit.min_docs, "minimum units per training corpus");
    fit_cmd->callback([&] {
        action = [&] {
            if (!unit_name_arg.empty()) s.fit.unit = unit_from_name(unit_name_arg);
            Corpus human = load_checked(human_path);
            Corpus llm = load_checked(llm_path);
            TokenModel model = fit(human, llm, s.fit);
            save_model(model, out_path);
            std::cerr << "model: " << model.vocab().size() << " tokens, "
                      << model.provenance().human_units << " human units, "
                      << model.provenance().llm_units << " llm units -> " << out_path << '\n';
            if (global.to_stdout) {
                std::ifstream in(out_path);
                std::cout << in.rdbuf();
            }
        };
    });

    // estimate
    auto* est_cmd = app.add_subcommand("estimate", "estimate alpha with a bootstrap CI");
    est_cmd->fallthrough();
    est_cmd->add_option("--model", model_path, "model JSON")->required();
    est_cmd->add_option("--corpus", corpus_path, "target corpus (JSONL)")->required();
    est_cmd->add_option("--out", out_path, "output JSON")->required();
    est_cmd->add_option("--boot", s.boot, "bootstrap replicates");
    est_cmd->add_option("--level", s.level, "confidence level");
    est_cmd->callback([&] {
        action = [&] {
            require_seed(global);
            TokenModel model = load_model(model_path);
            Corpus corpus = load_checked(corpus_path);
            EstimateResult result = bootstrap_ci(model, corpus, s.boot, s.level, global.seed);
            json out = result.to_json();
            out["provenance"] = provenance_json(
                "estimate", global,
                json{{"model", model_path}, {"corpus", corpus_path}, {"B", s.boot},
                     {"level", s.level}, {"unit", unit_name(model.config().unit)},
                     {"fit", fit_config_json(model.config())}});
            write_output(out, out_path, global.to_stdout);
        };
    });

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "known-mixture validation grid");
    cal_cmd->fallthrough();
    cal_cmd->add_option("--model", model_path, "model JSON")->required();
    cal_cmd->add_option("--human-holdout", human_path, "held-out human corpus (JSONL)")->required();
    cal_cmd->add_option("--llm-holdout", llm_path, "held-out LLM corpus (JSONL)")->required();
    cal_cmd->add_option("--out", out_path, "output JSON")->required();
    cal_cmd->add_option("--csv", csv_path, "also export rows as CSV");
    cal_cmd->add_option("--grid", s.grid, "alpha grid start:stop:step");
    cal_cmd->add_option("--n-per-mix", s.n_per_mix, "mixture size per grid point");
    cal_cmd->add_option("--replicates", s.replicates, "replicates per grid point");
    cal_cmd->add_option("--boot", s.boot, "bootstrap replicates per mixture");
    cal_cmd->add_option("--level", s.level, "confidence level");
    cal_cmd->add_option("--cutoff", s.holdout_cutoff, "holdout date ceiling (YYYY-MM-DD)");
    cal_cmd->callback([&] {
        action = [&] {
            require_seed(global);
            TokenModel model = load_model(model_path);
            Corpus human = load_checked(human_path);
            Corpus llm = load_checked(llm_path);
            CalibrationSpec spec;
            spec.alpha_grid = parse_grid(s.grid);
            spec.n_per_mix = s.n_per_mix;
            spec.replicates = s.replicates;
            spec.seed = global.seed;
            spec.holdout_cutoff = Date::parse(s.holdout_cutoff);
            spec.n_bootstrap = s.boot;
            spec.level = s.level;
            CalibrationReport report = run_calibration(model, human, llm, spec);

            json rows = json::array();
            for (const CalibrationRow& r : report.rows) {
                rows.push_back(json{{"alpha_true", r.alpha_true},
                                    {"alpha_hat", r.alpha_hat},
                                    {"ci_half_width", r.ci_half_width},
                                    {"abs_error", r.abs_error},
                                    {"replicate", r.replicate},
                                    {"seed", r.seed}});
            }
            json out{{"rows", rows}, {"summary", report.summary_json()}};
            out["provenance"] = provenance_json(
                "calibrate", global,
                json{{"model", model_path}, {"grid", s.grid}, {"n_per_mix", s.n_per_mix},
                     {"replicates", s.replicates}, {"B", s.boot}, {"level", s.level},
                     {"holdout_cutoff", s.holdout_cutoff},
                     {"unit", unit_name(model.config().unit)}});
            write_output(out, out_path, global.to_stdout);
            if (!csv_path.empty()) write_calibration_csv(report, csv_path);
        };
    });

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "build the LLM parallel corpus");
    gen_cmd->fallthrough();
    gen_cmd->add_option("--in", in_path, "source corpus (JSONL)")->required();
    gen_cmd->add_option("--out", out_path, "output corpus (JSONL)")->required();
    gen_cmd->add_option("--mode", s.gen_mode, "mock|live")
        ->check(CLI::IsMember({"mock", "live"}));
    gen_cmd->add_option("--endpoint", s.gen.endpoint_url, "chat-completion endpoint URL");
    gen_cmd->add_option("--model-id", s.gen.model_id, "generator model identifier");
    gen_cmd->add_option("--api-key-env", s.gen.api_key_env_var, "env var holding the API key");
    gen_cmd->add_option("--max-concurrent", s.gen.max_concurrent, "in-flight request cap");
    gen_cmd->add_option("--rpm", s.gen.requests_per_minute, "requests per minute");
    gen_cmd->add_option("--cache-dir", s.cache_dir, "response cache directory");
    gen_cmd->callback([&] {
        action = [&] {
            GenClientConfig cfg = s.gen;
            cfg.mode = s.gen_mode == "live" ? GenClientConfig::Mode::live
                                            : GenClientConfig::Mode::mock;
            cfg.cache_dir = s.cache_dir;
            Corpus source = load_checked(in_path);
            GenClient client(cfg);
            GenerationReport report;
            Corpus parallel = client.generate_parallel_corpus(source, &report);
            save_corpus(parallel, out_path);
            std::cerr << "generated " << parallel.size() << "/" << source.size() << " docs";
            if (cfg.mode == GenClientConfig::Mode::live) {
                std::cerr << " (" << report.requests_sent << " requests, " << report.cache_hits
                          << " cache hits)";
            }
            std::cerr << " -> " << out_path << '\n';
            if (!report.failures.empty()) {
                json fails = json::array();
                for (const GenFailure& f : report.failures) {
                    fails.push_back(json{{"id", f.doc_id}, {"reason", f.reason}});
                }
                std::ofstream ferr(out_path + ".errors.json");
                ferr << fails.dump(2) << '\n';
                std::cerr << report.failures.size() << " failure(s) -> " << out_path
                          << ".errors.json\n";
            }
        };
    });

    // trend
    auto* trend_cmd = app.add_subcommand("trend", "per-month/quarter alpha series");
    trend_cmd->fallthrough();
    trend_cmd->add_option("--model", model_path, "model JSON")->required();
    trend_cmd->add_option("--corpus", corpus_path, "target corpus (JSONL)")->required();
    trend_cmd->add_option("--out", out_path, "output JSON")->required();
    trend_cmd->add_option("--csv", csv_path, "also export long-format CSV");
    trend_cmd->add_option("--by", by, "bucket granularity: month|quarter")
        ->check(CLI::IsMember({"month", "quarter"}));
    trend_cmd->add_option("--groupby", groupby, "stratify by this meta key");
    trend_cmd->add_option("--n-max", s.bucket.n_max_per_bucket, "sample cap per bucket");
    trend_cmd->add_option("--min-units", s.bucket.min_units_per_bucket, "minimum units per bucket");
    trend_cmd->add_option("--boot", s.boot, "bootstrap replicates per bucket");
    trend_cmd->callback([&] {
        action = [&] {
            require_seed(global);
            TokenModel model = load_model(model_path);
            Corpus corpus = load_checked(corpus_path);
            BucketSpec spec = s.bucket;
            spec.granularity = granularity_from_name(by);

            json prov = provenance_json(
                "trend", global,
                json{{"model", model_path}, {"corpus", corpus_path}, {"by", by},
                     {"groupby", groupby}, {"n_max_per_bucket", spec.n_max_per_bucket},
                     {"min_units_per_bucket", spec.min_units_per_bucket}, {"B", s.boot},
                     {"unit", unit_name(model.config().unit)}});

            if (groupby.empty()) {
                TrendSeries series = trend(model, corpus, spec, s.boot, global.seed);
                json out = series.to_json();
                out["provenance"] = prov;
                write_output(out, out_path, global.to_stdout);
                if (!csv_path.empty()) export_report(series, ReportFormat::csv, csv_path);
            } else {
                auto by_group = stratified_trend(model, corpus, groupby, spec, s.boot, global.seed);
                json groups = json::object();
                for (const auto& [group, series] : by_group) groups[group] = series.to_json();
                json out{{"groups", groups}};
                out["provenance"] = prov;
                write_output(out, out_path, global.to_stdout);
                if (!csv_path.empty()) export_report(by_group, ReportFormat::csv, csv_path);
            }
        };
    });

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "paired bootstrap difference of two corpora");
    cmp_cmd->fallthrough();
    cmp_cmd->add_option("--model", model_path, "model JSON")->required();
    cmp_cmd->add_option("--a", a_path, "corpus A (JSONL)")->required();
    cmp_cmd->add_option("--b", b_path, "corpus B (JSONL)")->required();
    cmp_cmd->add_option("--out", out_path, "output JSON")->required();
    cmp_cmd->add_option("--boot", s.boot, "bootstrap replicates");
    cmp_cmd->callback([&] {
        action = [&] {
            require_seed(global);
            TokenModel model = load_model(model_path);
            Corpus ca = load_checked(a_path);
            Corpus cb = load_checked(b_path);
            ComparisonResult result = compare_groups(model, ca, cb, s.boot, global.seed);
            json out = result.to_json();
            out["provenance"] = provenance_json(
                "compare", global,
                json{{"model", model_path}, {"a", a_path}, {"b", b_path}, {"B", s.boot},
                     {"unit", unit_name(model.config().unit)}});
            write_output(out, out_path, global.to_stdout);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (seed_opt->count() > 0) global.seed_set = true;

    try {
        set_worker_threads(global.threads);
        if (!kernels::select(global.kernel)) {
            throw UsageError("kernel variant unavailable on this machine: " + global.kernel);
        }
        action();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        if (global.json_errors) {
            std::cerr << json{{"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}}.dump()
                      << '\n';
        } else {
            std::cerr << "error: " << e.what() << '\n';
        }
        return 1;
    } catch (const std::exception& e) {
        if (global.json_errors) {
            std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << '\n';
        } else {
            std::cerr << "error: " << e.what() << '\n';
        }
        return 1;
    }
}
