// Acceptance suite: every criterion prints one PASS/FAIL line with its
// measured numbers and runtime. The process exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tefs/tefs.hpp"

using namespace tefs;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const std::string& id, bool ok, const std::string& detail, double elapsed,
            double budget) {
    const bool in_budget = elapsed < budget;
    if (!ok || !in_budget) ++g_failures;
    std::printf("[%s] %s: %s (%.1fs / budget %.0fs)\n", (ok && in_budget) ? "PASS" : "FAIL",
                id.c_str(), detail.c_str(), elapsed, budget);
    std::fflush(stdout);
}

void run_criterion(const std::string& id, double budget,
                   const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    report(id, ok, detail, seconds_since(t0), budget);
}

// --- A1: chain-rule exactness of the discrete plug-in ---

std::pair<bool, std::string> a1_chain_rule() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> sym(0, 2);
    std::uniform_int_distribution<int> n_feat(3, 5);
    EstimatorConfig cfg;
    cfg.backend = Backend::DiscretePlugin;

    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const long n = 200;
        const int d = n_feat(rng);
        Eigen::MatrixXd cols(n, d), y(n, 1);
        for (long i = 0; i < n; ++i) {
            y(i, 0) = sym(rng);
            for (int j = 0; j < d; ++j)
                cols(i, j) = (sym(rng) + ((j % 2 == 0) ? static_cast<int>(y(i, 0)) : 0)) % 3;
        }
        // split columns into A | B | W
        const int na = 1 + trial % (d - 1);
        const int nb = std::max(1, (d - na) / 2);
        const int nw = d - na - nb;
        const Eigen::MatrixXd A = cols.leftCols(na);
        const Eigen::MatrixXd B = cols.middleCols(na, nb);
        const Eigen::MatrixXd W = cols.rightCols(nw);
        Eigen::MatrixXd AB(n, na + nb);
        AB << A, B;
        Eigen::MatrixXd WA(n, nw + na);
        if (nw > 0)
            WA << W, A;
        else
            WA = A;
        const double lhs = cmi(y, AB, W, cfg);
        const double rhs = cmi(y, A, W, cfg) + cmi(y, B, WA, cfg);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    std::ostringstream msg;
    msg << "max |I(Y;AB|W) - I(Y;A|W) - I(Y;B|WA)| = " << worst;
    return {worst <= 1e-12, msg.str()};
}

// --- A2: gaussian and KSG estimator fidelity ---

std::pair<bool, std::string> a2_estimator_fidelity() {
    bool ok = true;
    std::ostringstream msg;
    for (double rho : {0.3, 0.5, 0.8}) {
        const double truth = -0.5 * std::log(1.0 - rho * rho);
        double gauss_err = 0.0, ksg_err = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            std::mt19937_64 rng(5000 + 17 * s + static_cast<std::uint64_t>(rho * 100));
            std::normal_distribution<double> n01;
            auto draw = [&](long n) {
                Eigen::MatrixXd x(n, 1), y(n, 1);
                for (long i = 0; i < n; ++i) {
                    const double u = n01(rng), v = n01(rng);
                    x(i, 0) = u;
                    y(i, 0) = rho * u + std::sqrt(1 - rho * rho) * v;
                }
                return std::make_pair(x, y);
            };
            {
                auto [x, y] = draw(5000);
                EstimatorConfig g;
                g.backend = Backend::GaussianClosedForm;
                gauss_err += std::abs(cmi(x, y, Eigen::MatrixXd(5000, 0), g) - truth);
            }
            {
                auto [x, y] = draw(4000);
                EstimatorConfig k;
                k.backend = Backend::KnnKsg;
                k.k = 5;
                k.rng_seed = s;
                ksg_err += std::abs(cmi(x, y, Eigen::MatrixXd(4000, 0), k) - truth);
            }
        }
        gauss_err /= 10.0;
        ksg_err /= 10.0;
        msg << "rho=" << rho << " gauss " << gauss_err << " ksg " << ksg_err << "; ";
        ok = ok && gauss_err < 0.02 && ksg_err < 0.05;
    }
    return {ok, msg.str()};
}

// --- benchmark helpers for A3-A5 ---

BenchmarkConfig benchmark_operating_point(const std::string& graph, Direction dir, int lag) {
    BenchmarkConfig cfg;
    cfg.graph = graph;
    cfg.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    cfg.algorithm = dir;
    cfg.n_samples = 300;
    cfg.noise_std = 0.1;
    cfg.selection.lags = {lag, lag};
    cfg.selection.threshold = dir == Direction::Forward ? 100.0 : 1e-6;
    cfg.selection.target_bound_B = 1.0;
    cfg.selection.epsilon_stop = 0.0;
    cfg.selection.estimator.backend = Backend::KnnKsg;
    cfg.selection.estimator.k = 5;
    return cfg;
}

std::pair<bool, std::string> a3_graph3_benchmark() {
    bool ok = true;
    std::ostringstream msg;
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
        BenchmarkConfig cfg = benchmark_operating_point("graph3", dir, 2);
        cfg.sample_coefficients_per_seed = true;
        const auto reports = run_benchmark(cfg);
        msg << to_string(dir) << " TPR " << reports[0].tpr << " FPR " << reports[0].fpr << "; ";
        ok = ok && reports[0].tpr >= 0.9 && reports[0].fpr <= 0.1;
    }
    return {ok, msg.str()};
}

std::pair<bool, std::string> a4_noise_sweep() {
    BenchmarkConfig cfg = benchmark_operating_point("graph3", Direction::Backward, 2);
    cfg.sample_coefficients_per_seed = true;
    cfg.sweep = SweepAxis::Noise;
    cfg.sweep_values = {0.1, 0.3, 0.5};
    const auto reports = run_benchmark(cfg);
    bool ok = true;
    std::ostringstream msg;
    for (std::size_t p = 0; p < reports.size(); ++p) {
        msg << "s=" << cfg.sweep_values[p] << " TPR " << reports[p].tpr << " FPR "
            << reports[p].fpr << "; ";
        ok = ok && reports[p].tpr >= 0.9 && reports[p].fpr <= 0.1;
    }
    return {ok, msg.str()};
}

std::pair<bool, std::string> a5_high_dimension() {
    BenchmarkConfig cfg = benchmark_operating_point("graph10", Direction::Forward, 3);
    cfg.sample_coefficients_per_seed = false;  // canonical coefficients, seeds vary noise+triples
    cfg.sweep = SweepAxis::Dimension;
    cfg.sweep_values = {20, 40};  // triples added in threes: D becomes 22 and 40
    const auto reports = run_benchmark(cfg);
    bool ok = true;
    std::ostringstream msg;
    for (std::size_t p = 0; p < reports.size(); ++p) {
        msg << "D>=" << cfg.sweep_values[p] << " TPR " << reports[p].tpr << " FPR "
            << reports[p].fpr << "; ";
        ok = ok && reports[p].tpr >= 0.9 && reports[p].fpr == 0.0;
    }
    return {ok, msg.str()};
}

// --- A6: stopping-rule soundness on stub estimators ---

std::pair<bool, std::string> a6_stopping_soundness() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> n_feat(2, 8);

    long checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = n_feat(rng);
        const double threshold = unit(rng) * (trial % 3 == 0 ? 0.1 : 1.5);
        const double bound_b = 0.5 + unit(rng) * 2.0;
        const Task task = trial % 2 == 0 ? Task::Regression : Task::Classification;

        // stub: score depends on candidate and conditioning size, mixed signs
        std::uint64_t stub_seed = 7000 + trial;
        TeEvaluator te = [stub_seed](int candidate, const std::set<int>& cond) {
            std::mt19937_64 local(stub_seed + candidate * 131 + cond.size() * 7);
            std::uniform_real_distribution<double> u(-0.2, 0.6);
            return u(local);
        };

        SelectionConfig cfg;
        cfg.lags = {1, 1};
        cfg.threshold = threshold;
        cfg.target_bound_B = bound_b;
        cfg.task = task;
        const double guard = cfg.comparison_threshold(bound_b);

        const auto fwd = forward_tefs_core(d, cfg, bound_b, te);
        if (fwd.stop_reason == StopReason::ThresholdReached) {
            double cum = 0.0;
            for (const auto& s : fwd.steps) cum += std::max(0.0, s.te);
            if (!(cum >= guard)) return {false, "forward ThresholdReached below the guard"};
            if (cum != fwd.steps.back().cumulative)
                return {false, "forward trace cumulative mismatch"};
            ++checked;
        }
        for (std::size_t i = 1; i < fwd.steps.size(); ++i)
            if (fwd.steps[i].cumulative < fwd.steps[i - 1].cumulative)
                return {false, "forward cumulative not monotone"};

        const auto bwd = backward_tefs_core(d, cfg, bound_b, te);
        double cum = 0.0;
        for (const auto& s : bwd.steps) cum += std::max(0.0, s.te);
        if (!(cum <= guard) && !bwd.steps.empty())
            return {false, "backward committed loss above the guard"};
        if (bwd.stop_reason == StopReason::ThresholdReached) ++checked;
        for (std::size_t i = 1; i < bwd.steps.size(); ++i)
            if (bwd.steps[i].cumulative < bwd.steps[i - 1].cumulative)
                return {false, "backward cumulative not monotone"};
    }
    std::ostringstream msg;
    msg << "200 stub runs, " << checked << " threshold stops, all guards exact";
    return {true, msg.str()};
}

// --- A7: bound formulas against independent arithmetic ---

std::pair<bool, std::string> a7_bound_formulas() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> unit(0.01, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double delta = unit(rng);
        const double total_te = unit(rng);
        const double b = unit(rng);

        SelectionConfig cfg;
        cfg.lags = {1, 1};
        cfg.threshold = delta;
        cfg.target_bound_B = b;

        SelectionResult back;
        back.direction = Direction::Backward;
        SelectionResult fwd;
        fwd.direction = Direction::Forward;

        // backward: excess is delta itself, both tasks
        cfg.task = Task::Regression;
        worst = std::max(worst, std::abs(compute_bounds(back, cfg).excess_term - delta));
        cfg.task = Task::Classification;
        worst = std::max(worst, std::abs(compute_bounds(back, cfg).excess_term - delta));

        // forward regression: 2 B^2 T - delta, written independently via expm1-free algebra
        cfg.task = Task::Regression;
        const double reg = compute_bounds(fwd, cfg, total_te).excess_term;
        const long double reg_oracle =
            2.0L * static_cast<long double>(b) * static_cast<long double>(b)
                * static_cast<long double>(total_te)
            - static_cast<long double>(delta);
        worst = std::max(worst, std::abs(reg - static_cast<double>(reg_oracle)));

        // forward classification: sqrt(max(0, 2T - delta^2))
        cfg.task = Task::Classification;
        const double cls = compute_bounds(fwd, cfg, total_te).excess_term;
        const long double inner = 2.0L * static_cast<long double>(total_te)
                                  - static_cast<long double>(delta) * static_cast<long double>(delta);
        const double cls_oracle = inner > 0 ? static_cast<double>(std::sqrt(inner)) : 0.0;
        worst = std::max(worst, std::abs(cls - cls_oracle));
    }
    std::ostringstream msg;
    msg << "max deviation " << worst;
    return {worst <= 1e-12, msg.str()};
}

// --- A8: anti-leakage and bit-identical benchmark reruns ---

std::pair<bool, std::string> a8_leakage_and_reproducibility() {
    // ramp data: every value encodes its own time index
    const long T = 60, D = 3;
    TimeSeriesDataset ds;
    ds.features.resize(T, D);
    ds.target.resize(T);
    for (long t = 0; t < T; ++t) {
        ds.target[t] = static_cast<double>(t);
        for (long i = 0; i < D; ++i) ds.features(t, i) = 1000.0 * i + t;
    }
    for (long i = 0; i < D; ++i) ds.feature_names.push_back("X" + std::to_string(i));
    ds.target_name = "Y";
    const LagSpec lags{3, 2};
    const auto design = embed(ds, lags, {0, 1, 2});
    for (long r = 0; r < design.n; ++r) {
        const double response_time = design.response[r];
        for (int j = 0; j < lags.M; ++j)
            if (!(design.target_lags(r, j) < response_time))
                return {false, "target lag does not precede the response"};
        for (long i = 0; i < D; ++i)
            for (int j = 0; j < lags.L; ++j)
                if (!(design.feature_lags.at(i)(r, j) - 1000.0 * i < response_time))
                    return {false, "feature lag does not precede the response"};
    }

    // bit-identical reruns of the bench command with a fixed config
    const fs::path dir = fs::temp_directory_path() / "tefs_acceptance_bench";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "config.json");
        cfg << R"({"graph":"graph3","seeds":[0,1,2],"algorithm":"forward","n_samples":150,)"
            << R"("selection":{"L":2,"M":2,"threshold":100.0,"B":1.0,"estimator":"ksg","k":5}})";
    }
    auto run_once = [&](const std::string& out) {
        const std::string cmd = std::string(TEFS_CLI_PATH) + " bench --config "
                                + (dir / "config.json").string() + " --out " + (dir / out).string()
                                + " --jobs 2 > /dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    if (!run_once("r1") || !run_once("r2")) return {false, "bench run failed"};
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string j1 = slurp(dir / "r1" / "report.json");
    const std::string j2 = slurp(dir / "r2" / "report.json");
    if (j1.empty() || j1 != j2) return {false, "bench reruns differ"};
    return {true, "no leakage; bench reruns byte-identical"};
}

}  // namespace

int main() {
    run_criterion("A1 chain rule (discrete plug-in)", 10.0, a1_chain_rule);
    run_criterion("A2 estimator fidelity (gaussian/ksg)", 60.0, a2_estimator_fidelity);
    run_criterion("A3 graph3 benchmark, benchmark operating points", 300.0, a3_graph3_benchmark);
    run_criterion("A4 graph3 noise sweep, backward", 600.0, a4_noise_sweep);
    run_criterion("A5 graph10 high-dimension FPR control, forward", 1800.0, a5_high_dimension);
    run_criterion("A6 stopping-rule soundness (stub estimators)", 30.0, a6_stopping_soundness);
    run_criterion("A7 bound formulas vs independent arithmetic", 10.0, a7_bound_formulas);
    run_criterion("A8 anti-leakage + bit-identical bench reruns", 120.0,
                  a8_leakage_and_reproducibility);

    if (g_failures != 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
