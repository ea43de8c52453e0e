#ifndef TEFS_EVALUATION_HPP
#define TEFS_EVALUATION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tefs/errors.hpp"
#include "tefs/scm.hpp"
#include "tefs/selection.hpp"
#include "tefs/timeseries.hpp"

namespace tefs {

/// Aggregate score of one benchmark sweep point across seed repetitions.
struct EvalReport {
    double tpr = 0.0;
    double fpr = 0.0;
    std::vector<std::set<int>> per_seed_selected;
    double r2_train = 0.0;
    double r2_test = 0.0;
};

/// Pools (seed, link) detections: a link counts as detected when its node id
/// appears in that seed's selected set, regardless of lag. Denominators are
/// n_true * n_seeds and n_false_candidates * n_seeds.
inline std::pair<double, double> tpr_fpr(const std::vector<std::set<int>>& selected_per_seed,
                                         const GroundTruth& truth,
                                         const std::set<int>& all_candidates) {
    for (int link : truth.true_target_links)
        if (!all_candidates.count(link))
            throw InvalidParams("true link outside the candidate universe");
    for (const auto& sel : selected_per_seed)
        for (int v : sel)
            if (!all_candidates.count(v)) throw InvalidParams("selected node outside candidates");

    const long n_true = static_cast<long>(truth.true_target_links.size());
    const long n_false = static_cast<long>(all_candidates.size()) - n_true;
    const long n_seeds = static_cast<long>(selected_per_seed.size());
    if (n_true == 0 || n_false == 0 || n_seeds == 0)
        throw EmptyDenominator("need at least one true link, one false candidate and one seed");

    long hits = 0, false_alarms = 0;
    for (const auto& sel : selected_per_seed) {
        for (int v : sel) {
            if (truth.true_target_links.count(v))
                ++hits;
            else
                ++false_alarms;
        }
    }
    return {static_cast<double>(hits) / static_cast<double>(n_true * n_seeds),
            static_cast<double>(false_alarms) / static_cast<double>(n_false * n_seeds)};
}

namespace detail {

inline Eigen::MatrixXd design_matrix(const EmbeddedDesign& d, const std::set<int>& selected,
                                     const LagSpec& lags) {
    const long n = d.n;
    const long p = 1 + lags.M + lags.L * static_cast<long>(selected.size());
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    X.middleCols(1, lags.M) = d.target_lags;
    long col = 1 + lags.M;
    for (int i : selected) {
        X.middleCols(col, lags.L) = d.feature_lags.at(i);
        col += lags.L;
    }
    return X;
}

}  // namespace detail

/// Ordinary least squares of Y_t on [intercept, Y_{t-1..t-M},
/// X_selected^{t-1..t-L}], fitted on the train split only, with ridge 1e-10
/// for rank safety. The test R^2 uses the test-set mean as baseline. A
/// zero-variance test target scores 0 by convention; a zero-variance train
/// target is an error.
inline std::pair<double, double> r2_linear(const TimeSeriesDataset& train,
                                           const TimeSeriesDataset& test,
                                           const std::set<int>& selected, const LagSpec& lags) {
    const EmbeddedDesign dtr = embed(train, lags, selected);
    const EmbeddedDesign dte = embed(test, lags, selected);
    const Eigen::MatrixXd Xtr = detail::design_matrix(dtr, selected, lags);
    const Eigen::MatrixXd Xte = detail::design_matrix(dte, selected, lags);

    Eigen::MatrixXd gram = Xtr.transpose() * Xtr;
    gram.diagonal().array() += 1e-10;
    const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw SingularDesign();
    const Eigen::VectorXd beta = solver.solve(Xtr.transpose() * dtr.response);
    if (!beta.allFinite()) throw SingularDesign();

    auto r2 = [](const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                 bool train_side) -> double {
        const double mean = y.mean();
        const double ss_tot = (y.array() - mean).matrix().squaredNorm();
        if (ss_tot <= 0.0) {
            if (train_side) throw SingularDesign();
            return 0.0;  // zero-variance test target convention
        }
        const double ss_res = (y - yhat).squaredNorm();
        return 1.0 - ss_res / ss_tot;
    };
    return {r2(dtr.response, Xtr * beta, true), r2(dte.response, Xte * beta, false)};
}

enum class SweepAxis { None, Noise, Lag, Samples, Coefficients, Dimension };

/// One benchmark suite: a graph, a seed list, a sweep axis with its grid,
/// one algorithm direction, and the selection configuration. Defaults mirror
/// the synthetic protocol: N=300, noise 0.1, L=M=2 for graph3/graph5 and
/// L=M=3 for graph10, coefficients redrawn per seed from [-1,-0.5] u [0.5,1].
struct BenchmarkConfig {
    std::string graph = "graph3";
    std::optional<ScmGraph> custom_graph;  // overrides `graph` when set
    std::vector<std::uint64_t> seeds;
    SweepAxis sweep = SweepAxis::None;
    std::vector<double> sweep_values;
    Direction algorithm = Direction::Forward;
    SelectionConfig selection;
    long n_samples = 300;
    double noise_std = 0.1;
    long burn_in = 200;
    bool standardize_inputs = true;
    bool sample_coefficients_per_seed = true;
    double train_fraction = 0.75;
    int jobs = 0;  // 0 = hardware concurrency

    void validate() const {
        if (seeds.empty()) throw InvalidParams("seed list must be nonempty");
        if (sweep != SweepAxis::None && sweep_values.empty())
            throw InvalidParams("sweep axis set but sweep_values empty");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw InvalidParams("train_fraction must be in (0, 1)");
        if (n_samples < 4) throw InvalidParams("n_samples too small");
        selection.validate();
    }
};

namespace detail {

struct ResolvedPoint {
    ScmGraph graph;
    double noise_std;
    long n_samples;
    LagSpec lags;
    std::optional<std::uint64_t> coef_seed_override;  // Coefficients axis
    int n_triples = 0;
};

inline ResolvedPoint resolve_point(const BenchmarkConfig& cfg, double value) {
    ResolvedPoint pt;
    pt.graph = cfg.custom_graph ? *cfg.custom_graph : builtin_graph(cfg.graph);
    pt.noise_std = cfg.noise_std;
    pt.n_samples = cfg.n_samples;
    pt.lags = cfg.selection.lags;
    switch (cfg.sweep) {
        case SweepAxis::None: break;
        case SweepAxis::Noise: pt.noise_std = value; break;
        case SweepAxis::Samples: pt.n_samples = static_cast<long>(value); break;
        case SweepAxis::Lag:
            pt.lags.L = static_cast<int>(value);
            pt.lags.M = static_cast<int>(value);
            break;
        case SweepAxis::Coefficients:
            pt.coef_seed_override = static_cast<std::uint64_t>(value);
            break;
        case SweepAxis::Dimension: {
            const int target_d = static_cast<int>(value);
            const int base_d = pt.graph.n_features;
            pt.n_triples = std::max(0, (target_d - base_d + 2) / 3);  // ceil
            break;
        }
    }
    return pt;
}

struct SeedOutcome {
    std::set<int> selected;  // node ids incl. kTargetNode credit
    double r2_train = 0.0;
    double r2_test = 0.0;
};

inline SeedOutcome run_seed(const BenchmarkConfig& cfg, const ResolvedPoint& pt,
                            std::uint64_t seed) {
    ScmGraph g = pt.graph;
    if (pt.coef_seed_override)
        g = sample_coefficients(g, *pt.coef_seed_override);
    else if (cfg.sample_coefficients_per_seed)
        g = sample_coefficients(g, seed);
    if (pt.n_triples > 0) g = extend_with_noise_triples(g, pt.n_triples, seed);

    ScmSpec spec;
    spec.n_features = g.n_features;
    spec.edges = g.edges;
    spec.noise_std = pt.noise_std;
    spec.length = pt.n_samples;
    spec.burn_in = cfg.burn_in;
    spec.seed = seed;
    auto [ds, truth] = generate(spec);

    SelectionConfig sel_cfg = cfg.selection;
    sel_cfg.lags = pt.lags;
    const TimeSeriesDataset& input = cfg.standardize_inputs ? standardize(ds) : ds;
    const SelectionResult result = cfg.algorithm == Direction::Forward
                                       ? forward_tefs(input, sel_cfg)
                                       : backward_tefs(input, sel_cfg);

    SeedOutcome out;
    out.selected.insert(result.selected.begin(), result.selected.end());
    // Both procedures always condition on the target's own past, so target
    // autoregression is credited as detected.
    out.selected.insert(kTargetNode);

    auto [train, test] = temporal_split(ds, cfg.train_fraction);
    std::set<int> features_only;
    for (int v : out.selected)
        if (v != kTargetNode) features_only.insert(v);
    std::tie(out.r2_train, out.r2_test) = r2_linear(train, test, features_only, pt.lags);
    return out;
}

}  // namespace detail

/// Runs the full suite: for every sweep point and seed, generate -> select ->
/// score, aggregating TPR/FPR and mean R^2 per sweep point. Seeds and sweep
/// points execute in parallel up to cfg.jobs; aggregation order is fixed by
/// index, so results are reproducible bit for bit.
inline std::vector<EvalReport> run_benchmark(const BenchmarkConfig& cfg) {
    cfg.validate();
    const std::vector<double> values =
        cfg.sweep == SweepAxis::None ? std::vector<double>{0.0} : cfg.sweep_values;

    struct Job {
        std::size_t point;
        std::size_t slot;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::vector<detail::ResolvedPoint> points;
    for (std::size_t p = 0; p < values.size(); ++p) {
        points.push_back(detail::resolve_point(cfg, values[p]));
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
            jobs.push_back({p, s, cfg.seeds[s]});
    }

    std::vector<detail::SeedOutcome> outcomes(jobs.size());
    unsigned n_workers = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                                      : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(jobs.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= jobs.size()) return;
            try {
                outcomes[idx] = detail::run_seed(cfg, points[jobs[idx].point], jobs[idx].seed);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<EvalReport> reports(values.size());
    const std::size_t n_seeds = cfg.seeds.size();
    for (std::size_t p = 0; p < values.size(); ++p) {
        EvalReport& rep = reports[p];
        rep.per_seed_selected.resize(n_seeds);
        double r2tr = 0.0, r2te = 0.0;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& out = outcomes[p * n_seeds + s];
            rep.per_seed_selected[s] = out.selected;
            r2tr += out.r2_train;
            r2te += out.r2_test;
        }
        rep.r2_train = r2tr / static_cast<double>(n_seeds);
        rep.r2_test = r2te / static_cast<double>(n_seeds);

        const ScmGraph& g = points[p].graph;
        GroundTruth truth = ground_truth(g.edges);
        std::set<int> candidates;
        candidates.insert(kTargetNode);
        int n_features = g.n_features + 3 * points[p].n_triples;
        for (int i = 0; i < n_features; ++i) candidates.insert(i);
        std::tie(rep.tpr, rep.fpr) = tpr_fpr(rep.per_seed_selected, truth, candidates);
    }
    return reports;
}

// --- serialization ---

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::None: return "none";
        case SweepAxis::Noise: return "noise";
        case SweepAxis::Lag: return "lag";
        case SweepAxis::Samples: return "samples";
        case SweepAxis::Coefficients: return "coefficients";
        case SweepAxis::Dimension: return "dimension";
    }
    return "?";
}

inline SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "none") return SweepAxis::None;
    if (s == "noise") return SweepAxis::Noise;
    if (s == "lag") return SweepAxis::Lag;
    if (s == "samples") return SweepAxis::Samples;
    if (s == "coefficients") return SweepAxis::Coefficients;
    if (s == "dimension") return SweepAxis::Dimension;
    throw InvalidParams("unknown sweep axis: " + s);
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& sel : r.per_seed_selected) {
        nlohmann::json ids = nlohmann::json::array();
        for (int v : sel) ids.push_back(node_to_json(v));
        per_seed.push_back(ids);
    }
    return {{"tpr", r.tpr},
            {"fpr", r.fpr},
            {"per_seed_selected", per_seed},
            {"r2_train", r.r2_train},
            {"r2_test", r.r2_test}};
}

inline nlohmann::json to_json(const BenchmarkConfig& cfg) {
    nlohmann::json j{{"graph", cfg.graph},
                     {"seeds", cfg.seeds},
                     {"sweep", to_string(cfg.sweep)},
                     {"sweep_values", cfg.sweep_values},
                     {"algorithm", to_string(cfg.algorithm)},
                     {"n_samples", cfg.n_samples},
                     {"noise_std", cfg.noise_std},
                     {"burn_in", cfg.burn_in},
                     {"standardize", cfg.standardize_inputs},
                     {"sample_coefficients_per_seed", cfg.sample_coefficients_per_seed},
                     {"train_fraction", cfg.train_fraction},
                     {"jobs", cfg.jobs}};
    const SelectionConfig& s = cfg.selection;
    j["selection"] = {{"L", s.lags.L},
                      {"M", s.lags.M},
                      {"threshold", s.threshold},
                      {"task", to_string(s.task)},
                      {"epsilon_stop", s.epsilon_stop},
                      {"estimator", s.estimator.backend == Backend::KnnKsg ? "ksg"
                                    : s.estimator.backend == Backend::GaussianClosedForm
                                        ? "gaussian"
                                        : "discrete"},
                      {"k", s.estimator.k},
                      {"noise_tiebreak", s.estimator.noise_tiebreak},
                      {"rng_seed", s.estimator.rng_seed}};
    if (s.target_bound_B) j["selection"]["B"] = *s.target_bound_B;
    return j;
}

inline BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j) {
    BenchmarkConfig cfg;
    try {
        cfg.graph = j.value("graph", std::string("graph3"));
        if (j.contains("custom_graph")) {
            ScmGraph g;
            g.n_features = j["custom_graph"].at("n_features").get<int>();
            for (const auto& je : j["custom_graph"].at("edges"))
                g.edges.push_back({node_from_json(je.at("source")), node_from_json(je.at("dest")),
                                   je.at("lag").get<int>(), je.value("coef", 0.0)});
            cfg.custom_graph = g;
        }
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.sweep = sweep_axis_from_string(j.value("sweep", std::string("none")));
        cfg.sweep_values = j.value("sweep_values", std::vector<double>{});
        const std::string algo = j.value("algorithm", std::string("forward"));
        if (algo != "forward" && algo != "backward")
            throw InvalidParams("algorithm must be forward or backward");
        cfg.algorithm = algo == "forward" ? Direction::Forward : Direction::Backward;
        cfg.n_samples = j.value("n_samples", 300L);
        cfg.noise_std = j.value("noise_std", 0.1);
        cfg.burn_in = j.value("burn_in", 200L);
        cfg.standardize_inputs = j.value("standardize", true);
        cfg.sample_coefficients_per_seed = j.value("sample_coefficients_per_seed", true);
        cfg.train_fraction = j.value("train_fraction", 0.75);
        cfg.jobs = j.value("jobs", 0);

        const auto s = j.value("selection", nlohmann::json::object());
        cfg.selection.lags.L = s.value("L", cfg.graph == "graph10" ? 3 : 2);
        cfg.selection.lags.M = s.value("M", cfg.selection.lags.L);
        cfg.selection.threshold =
            s.value("threshold", cfg.algorithm == Direction::Forward ? 100.0 : 1e-6);
        if (s.contains("B")) cfg.selection.target_bound_B = s["B"].get<double>();
        const std::string task = s.value("task", std::string("regression"));
        if (task != "regression" && task != "classification")
            throw InvalidParams("task must be regression or classification");
        cfg.selection.task = task == "regression" ? Task::Regression : Task::Classification;
        cfg.selection.epsilon_stop = s.value("epsilon_stop", 0.0);
        const std::string est = s.value("estimator", std::string("ksg"));
        if (est == "ksg") cfg.selection.estimator.backend = Backend::KnnKsg;
        else if (est == "gaussian") cfg.selection.estimator.backend = Backend::GaussianClosedForm;
        else if (est == "discrete") cfg.selection.estimator.backend = Backend::DiscretePlugin;
        else throw InvalidParams("unknown estimator: " + est);
        cfg.selection.estimator.k = s.value("k", 5);
        cfg.selection.estimator.noise_tiebreak = s.value("noise_tiebreak", 1e-10);
        cfg.selection.estimator.rng_seed = s.value("rng_seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams(std::string("malformed benchmark config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

/// Flat CSV: one row per sweep point.
inline std::string reports_to_csv(const BenchmarkConfig& cfg,
                                  const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "sweep_axis,sweep_value,tpr,fpr,mean_r2_train,mean_r2_test\n";
    const std::vector<double> values =
        cfg.sweep == SweepAxis::None ? std::vector<double>{0.0} : cfg.sweep_values;
    for (std::size_t p = 0; p < reports.size(); ++p) {
        out << to_string(cfg.sweep) << ',' << values[p] << ',' << reports[p].tpr << ','
            << reports[p].fpr << ',' << reports[p].r2_train << ',' << reports[p].r2_test << '\n';
    }
    return out.str();
}

}  // namespace tefs

#endif  // TEFS_EVALUATION_HPP
