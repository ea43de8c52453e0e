// Command-line surface for the tefs library: dataset synthesis, transfer
// entropy estimation, forward/backward selection, and benchmark suites.
//
// Exit codes: 0 success, 1 runtime/numeric failure, 2 usage or validation.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tefs/tefs.hpp"

namespace {

using nlohmann::json;

std::set<int> resolve_columns(const tefs::TimeSeriesDataset& ds,
                              const std::vector<std::string>& cols) {
    std::set<int> out;
    for (const std::string& c : cols) {
        int idx = -1;
        for (std::size_t j = 0; j < ds.feature_names.size(); ++j)
            if (ds.feature_names[j] == c) idx = static_cast<int>(j);
        if (idx < 0) {
            try {
                std::size_t pos = 0;
                idx = std::stoi(c, &pos);
                if (pos != c.size() || idx < 0 || idx >= ds.D()) idx = -1;
            } catch (...) {
                idx = -1;
            }
        }
        if (idx < 0) throw tefs::MissingColumn(c);
        out.insert(idx);
    }
    return out;
}

tefs::EstimatorConfig make_estimator(const std::string& name, int k, std::uint64_t seed) {
    tefs::EstimatorConfig cfg;
    if (name == "ksg") cfg.backend = tefs::Backend::KnnKsg;
    else if (name == "gaussian") cfg.backend = tefs::Backend::GaussianClosedForm;
    else if (name == "discrete") cfg.backend = tefs::Backend::DiscretePlugin;
    else throw tefs::InvalidParams("unknown estimator: " + name);
    cfg.k = k;
    cfg.rng_seed = seed;
    return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw tefs::NumericError("cannot write " + path.string());
    out << content;
    if (!out) throw tefs::NumericError("write failed: " + path.string());
}

std::string dataset_to_csv(const tefs::TimeSeriesDataset& ds) {
    std::string out;
    for (long j = 0; j < ds.D(); ++j) out += ds.feature_names[j] + ",";
    out += ds.target_name + "\n";
    char buf[64];
    for (long t = 0; t < ds.T(); ++t) {
        for (long j = 0; j < ds.D(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,", ds.features(t, j));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", ds.target[t]);
        out += buf;
    }
    return out;
}

struct CommonDataFlags {
    std::string data_path;
    std::string target;
    int L = 2, M = 2;
    std::string estimator = "ksg";
    int k = 5;
    std::uint64_t seed = 0;
    bool no_standardize = false;

    void attach(CLI::App* cmd, bool lags_required = true) {
        cmd->add_option("--data", data_path, "input CSV file")->required();
        cmd->add_option("--target", target, "target column name")->required();
        auto* l = cmd->add_option("--L", L, "feature lag depth");
        auto* m = cmd->add_option("--M", M, "target lag depth");
        if (lags_required) {
            l->required();
            m->required();
        }
        cmd->add_option("--estimator", estimator, "ksg | gaussian | discrete");
        cmd->add_option("--k", k, "KSG neighbour count");
        cmd->add_option("--seed", seed, "estimator RNG seed");
        cmd->add_flag("--no-standardize", no_standardize, "skip z-scoring the inputs");
    }

    tefs::TimeSeriesDataset load() const {
        tefs::TimeSeriesDataset ds = tefs::load_csv(data_path, target);
        return no_standardize ? ds : tefs::standardize(ds);
    }
};

int cmd_estimate(const CommonDataFlags& flags, const std::vector<std::string>& source,
                 const std::vector<std::string>& cond) {
    const tefs::TimeSeriesDataset ds = flags.load();
    const std::set<int> src = resolve_columns(ds, source);
    const std::set<int> cnd = resolve_columns(ds, cond);
    const tefs::LagSpec lags{flags.L, flags.M};
    lags.validate(ds.T());
    const double te = tefs::transfer_entropy(ds, src, cnd, lags,
                                             make_estimator(flags.estimator, flags.k, flags.seed));
    std::printf("%.6f\n", te);
    return 0;
}

int cmd_select(const CommonDataFlags& flags, const std::string& direction, double threshold,
               std::optional<double> bound_b, const std::string& task, double epsilon_stop) {
    if (direction != "forward" && direction != "backward")
        throw tefs::InvalidParams("--direction must be forward or backward");
    if (task != "regression" && task != "classification")
        throw tefs::InvalidParams("--task must be regression or classification");

    const tefs::TimeSeriesDataset ds = flags.load();
    tefs::SelectionConfig cfg;
    cfg.lags = {flags.L, flags.M};
    cfg.lags.validate(ds.T());
    cfg.threshold = threshold;
    cfg.target_bound_B = bound_b;
    cfg.task = task == "regression" ? tefs::Task::Regression : tefs::Task::Classification;
    cfg.estimator = make_estimator(flags.estimator, flags.k, flags.seed);
    cfg.epsilon_stop = epsilon_stop;
    cfg.validate();

    const tefs::SelectionResult result = direction == "forward" ? tefs::forward_tefs(ds, cfg)
                                                                : tefs::backward_tefs(ds, cfg);
    json out = tefs::to_json(result);
    out["config"] = {{"data", flags.data_path},
                     {"target", flags.target},
                     {"direction", direction},
                     {"L", flags.L},
                     {"M", flags.M},
                     {"threshold", threshold},
                     {"task", task},
                     {"estimator", flags.estimator},
                     {"k", flags.k},
                     {"seed", flags.seed},
                     {"epsilon_stop", epsilon_stop},
                     {"standardize", !flags.no_standardize}};
    if (bound_b) out["config"]["B"] = *bound_b;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_synth(const std::string& graph, long n, double noise, std::uint64_t seed,
              const std::string& out_dir, int triples, bool sample_coefs) {
    tefs::ScmSpec spec;
    if (graph == "graph3" || graph == "graph5" || graph == "graph10") {
        tefs::ScmGraph g = tefs::builtin_graph(graph);
        if (sample_coefs) g = tefs::sample_coefficients(g, seed);
        if (triples > 0) g = tefs::extend_with_noise_triples(g, triples, seed);
        spec.n_features = g.n_features;
        spec.edges = g.edges;
        spec.noise_std = noise;
        spec.length = n;
        spec.seed = seed;
    } else {
        std::ifstream in(graph);
        if (!in) throw tefs::ValidationError("cannot open spec file: " + graph);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw tefs::InvalidSpec(std::string("bad spec JSON: ") + e.what());
        }
        spec = tefs::scm_spec_from_json(j);
        spec.length = n;
        spec.noise_std = noise;
        spec.seed = seed;
        if (triples > 0) {
            tefs::ScmGraph g{spec.n_features, spec.edges};
            g = tefs::extend_with_noise_triples(g, triples, seed);
            spec.n_features = g.n_features;
            spec.edges = g.edges;
        }
    }
    spec.validate();
    auto [ds, truth] = tefs::generate(spec);

    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    json truth_json = tefs::to_json(truth);
    truth_json["spec"] = tefs::to_json(spec);
    write_file(dir / "data.csv", dataset_to_csv(ds));
    write_file(dir / "truth.json", truth_json.dump(2) + "\n");
    std::fprintf(stderr, "wrote %s and %s\n", (dir / "data.csv").c_str(),
                 (dir / "truth.json").c_str());
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, int jobs_override) {
    std::ifstream in(config_path);
    if (!in) throw tefs::ValidationError("cannot open config: " + config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw tefs::InvalidParams(std::string("bad config JSON: ") + e.what());
    }
    tefs::BenchmarkConfig cfg = tefs::benchmark_config_from_json(j);
    if (jobs_override > 0) {
        cfg.jobs = jobs_override;
    } else if (cfg.jobs == 0) {
        if (const char* env = std::getenv("TEFS_JOBS")) cfg.jobs = std::atoi(env);
    }

    const std::vector<tefs::EvalReport> reports = tefs::run_benchmark(cfg);

    const std::vector<double> values = cfg.sweep == tefs::SweepAxis::None
                                           ? std::vector<double>{0.0}
                                           : cfg.sweep_values;
    for (std::size_t p = 0; p < reports.size(); ++p) {
        std::printf("%s %s=%g: TPR %.2f FPR %.2f\n", cfg.graph.c_str(),
                    tefs::to_string(cfg.sweep).c_str(), values[p], reports[p].tpr,
                    reports[p].fpr);
    }

    json out;
    out["config"] = tefs::to_json(cfg);
    out["reports"] = json::array();
    for (std::size_t p = 0; p < reports.size(); ++p) {
        json r = tefs::to_json(reports[p]);
        r["sweep_value"] = values[p];
        out["reports"].push_back(r);
    }
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_file(dir / "report.json", out.dump(2) + "\n");
    write_file(dir / "report.csv", tefs::reports_to_csv(cfg, reports));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transfer-entropy causal feature selection for time series"};
    app.require_subcommand(1);

    // estimate
    auto* estimate = app.add_subcommand("estimate", "print one conditional transfer entropy");
    CommonDataFlags est_flags;
    est_flags.attach(estimate);
    std::vector<std::string> source_cols, cond_cols;
    estimate->add_option("--source", source_cols, "source feature columns")
        ->required()
        ->delimiter(',');
    estimate->add_option("--cond", cond_cols, "conditioning feature columns")->delimiter(',');

    // select
    auto* select = app.add_subcommand("select", "run forward or backward TEFS");
    CommonDataFlags sel_flags;
    sel_flags.attach(select);
    std::string direction;
    double threshold = 0.0;
    double bound_b_flag = 0.0;
    std::string task = "regression";
    double epsilon_stop = 0.0;
    select->add_option("--direction", direction, "forward | backward")->required();
    select->add_option("--threshold", threshold, "information loss delta / gain Delta")->required();
    auto* b_opt = select->add_option("--B", bound_b_flag, "target bound B (default: max |Y|)");
    select->add_option("--task", task, "regression | classification");
    select->add_option("--epsilon-stop", epsilon_stop, "forward early-stop floor");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string graph = "graph3", out_dir = ".";
    long n_rows = 300;
    double noise = 0.1;
    std::uint64_t synth_seed = 0;
    int triples = 0;
    bool sample_coefs = false;
    synth->add_option("--graph", graph, "graph3 | graph5 | graph10 | <spec.json>")->required();
    synth->add_option("--n", n_rows, "series length")->required();
    synth->add_option("--noise", noise, "noise standard deviation");
    synth->add_option("--seed", synth_seed, "generation seed");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--triples", triples, "noise triples to append");
    synth->add_flag("--sample-coefficients", sample_coefs,
                    "redraw edge coefficients from [-1,-0.5] u [0.5,1]");

    // bench
    auto* bench = app.add_subcommand("bench", "run a benchmark suite from a JSON config");
    std::string config_path, bench_out = ".";
    int jobs = 0;
    bench->add_option("--config", config_path, "benchmark config JSON")->required();
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--jobs", jobs, "parallel jobs (default: processors, env TEFS_JOBS)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (estimate->parsed()) return cmd_estimate(est_flags, source_cols, cond_cols);
        if (select->parsed()) {
            std::optional<double> b;
            if (b_opt->count() > 0) b = bound_b_flag;
            return cmd_select(sel_flags, direction, threshold, b, task, epsilon_stop);
        }
        if (synth->parsed())
            return cmd_synth(graph, n_rows, noise, synth_seed, out_dir, triples, sample_coefs);
        if (bench->parsed()) return cmd_bench(config_path, bench_out, jobs);
    } catch (const tefs::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
