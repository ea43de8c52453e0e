#ifndef TEFS_SCM_HPP
#define TEFS_SCM_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tefs/errors.hpp"
#include "tefs/timeseries.hpp"

namespace tefs {

/// Node id of the target in SCM graphs. Features use their column index.
constexpr int kTargetNode = -1;

/// One lagged linear interaction: dest_t += coef * source_{t - lag}.
struct Edge {
    int source = 0;
    int dest = 0;
    int lag = 1;
    double coef = 0.0;
};

/// A lagged linear causal graph plus simulation parameters.
struct ScmSpec {
    int n_features = 1;
    std::vector<Edge> edges;
    double noise_std = 0.1;
    long length = 300;
    long burn_in = 200;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_features < 1) throw InvalidSpec("n_features must be >= 1");
        if (length < 1) throw InvalidSpec("length must be >= 1");
        if (burn_in < 0) throw InvalidSpec("burn_in must be >= 0");
        if (noise_std < 0.0) throw InvalidSpec("noise_std must be >= 0");
        std::set<std::tuple<int, int, int>> seen;
        for (const Edge& e : edges) {
            auto in_range = [&](int v) { return v == kTargetNode || (v >= 0 && v < n_features); };
            if (!in_range(e.source) || !in_range(e.dest))
                throw InvalidSpec("edge references unknown node");
            if (e.lag < 1) throw InvalidSpec("edge lags must be >= 1 (no contemporaneous edges)");
            if (!std::isfinite(e.coef)) throw InvalidSpec("edge coefficient must be finite");
            if (!seen.insert({e.source, e.dest, e.lag}).second)
                throw InvalidSpec("duplicate (source, dest, lag) edge");
        }
    }
};

/// Direct causal parents of the target at any lag, including the target
/// itself when it is autoregressive. Drives the TPR/FPR counting.
struct GroundTruth {
    std::set<int> true_target_links;
};

/// Graph template: node count plus edge list, coefficient slots filled with
/// canonical defaults that sample_coefficients may overwrite.
struct ScmGraph {
    int n_features = 1;
    std::vector<Edge> edges;
};

inline GroundTruth ground_truth(const std::vector<Edge>& edges) {
    GroundTruth gt;
    for (const Edge& e : edges)
        if (e.dest == kTargetNode) gt.true_target_links.insert(e.source);
    return gt;
}

/// Simulates the linear SCM. Each node evolves as the coefficient-weighted
/// sum of its lagged parents plus Gaussian noise, seeded and reproducible.
/// Source nodes (parentless nodes that feed at least one edge) act as the
/// system's drivers and receive unit-variance innovations; every other node
/// receives innovations of scale noise_std. The first burn_in steps are
/// discarded; any |value| > 1e6 aborts as Unstable.
inline std::pair<TimeSeriesDataset, GroundTruth> generate(const ScmSpec& spec) {
    spec.validate();
    const int D = spec.n_features;
    const long total = spec.burn_in + spec.length;

    std::vector<std::vector<std::tuple<int, int, double>>> incoming(D + 1);  // dest -> (src, lag, coef)
    std::vector<bool> has_parent(D + 1, false), has_child(D + 1, false);
    auto slot = [D](int node) { return node == kTargetNode ? D : node; };
    for (const Edge& e : spec.edges) {
        incoming[slot(e.dest)].emplace_back(slot(e.source), e.lag, e.coef);
        has_parent[slot(e.dest)] = true;
        has_child[slot(e.source)] = true;
    }
    std::vector<double> innovation_std(D + 1);
    for (int v = 0; v <= D; ++v)
        innovation_std[v] = (!has_parent[v] && has_child[v]) ? 1.0 : spec.noise_std;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(total, D + 1);
    for (long t = 0; t < total; ++t) {
        for (int v = 0; v <= D; ++v) {
            double acc = 0.0;
            for (const auto& [src, lag, coef] : incoming[v])
                if (t - lag >= 0) acc += coef * values(t - lag, src);
            acc += innovation_std[v] * gauss(rng);
            if (std::abs(acc) > 1e6) throw Unstable(v == D ? kTargetNode : v, t);
            values(t, v) = acc;
        }
    }

    TimeSeriesDataset ds;
    ds.features = values.block(spec.burn_in, 0, spec.length, D);
    ds.target = values.col(D).segment(spec.burn_in, spec.length);
    for (int i = 0; i < D; ++i) ds.feature_names.push_back("X" + std::to_string(i));
    ds.target_name = "Y";
    return {std::move(ds), ground_truth(spec.edges)};
}

/// Draws every edge coefficient uniformly from [-1, -0.5] u [0.5, 1]
/// (fair sign, magnitude uniform on [0.5, 1]), deterministically per seed.
inline std::vector<Edge> sample_coefficients(std::vector<Edge> edges, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> magnitude(0.5, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Edge& e : edges) {
        const double mag = magnitude(rng);
        e.coef = unit(rng) < 0.5 ? -mag : mag;
    }
    return edges;
}

inline ScmGraph sample_coefficients(const ScmGraph& graph, std::uint64_t seed) {
    return {graph.n_features, sample_coefficients(graph.edges, seed)};
}

/// Canonical benchmark topologies. Exact published edge parameters are not
/// recoverable, so these reconstructions keep the structural ingredients:
/// parentless driver nodes, a chain giving the target an indirect ancestor
/// as distractor, target autoregression, and a common-cause confounder whose
/// second child is spuriously associated with the target.
///
///   graph3:  X0 -> X1 -> Y, Y autoregressive. True links {X1, Y};
///            X0 is the indirect-ancestor distractor.
///   graph5:  drivers X1, X3; X1 -> X0 -> Y; X3 -> {X2, Y} (confounder).
///            True links {X0, X3, Y}.
///   graph10: drivers X0, X5, X7; X0 -> X1 -> Y; X5 -> {X4, Y} (confounder);
///            X7 -> X2 -> X3 and X7 -> X8 -> X9 interacting clusters;
///            X6 autocorrelated noise. True links {X1, X5, Y}.
inline ScmGraph builtin_graph(const std::string& name) {
    const int Y = kTargetNode;
    if (name == "graph3") {
        return {2, {{0, 1, 1, 0.9}, {1, Y, 1, 0.9}, {Y, Y, 1, 0.5}}};
    }
    if (name == "graph5") {
        return {4,
                {{1, 0, 2, 0.9},
                 {0, Y, 1, 0.9},
                 {3, Y, 2, 0.9},
                 {3, 2, 2, 0.8},
                 {Y, Y, 1, 0.5}}};
    }
    if (name == "graph10") {
        return {10,
                {{0, 1, 3, 0.9},
                 {1, Y, 1, 0.9},
                 {5, Y, 2, 0.9},
                 {5, 4, 2, 0.8},
                 {7, 8, 1, 0.8},
                 {8, 9, 2, 0.8},
                 {7, 2, 2, 0.8},
                 {2, 3, 1, 0.8},
                 {6, 6, 1, 0.7},
                 {Y, Y, 1, 0.5}}};
    }
    throw UnknownGraph(name);
}

/// Appends n_triples groups of three noise nodes: A is pure standard-normal
/// noise, B = c1 * A_{t-1} + noise, C = c2 * B_{t-2} + c3 * C_{t-3} + noise,
/// with coefficients uniform on [-1, 1]. The added nodes never feed the
/// target or any pre-existing node, so the ground truth is unchanged.
inline ScmGraph extend_with_noise_triples(const ScmGraph& graph, int n_triples,
                                          std::uint64_t seed) {
    if (n_triples < 0) throw InvalidSpec("n_triples must be >= 0");
    ScmGraph out = graph;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int t = 0; t < n_triples; ++t) {
        const int a = out.n_features, b = a + 1, c = a + 2;
        out.edges.push_back({a, b, 1, coef(rng)});
        out.edges.push_back({b, c, 2, coef(rng)});
        out.edges.push_back({c, c, 3, coef(rng)});
        out.n_features += 3;
    }
    return out;
}

// --- JSON serialization (TARGET encoded as the string "Y") ---

inline nlohmann::json node_to_json(int node) {
    if (node == kTargetNode) return "Y";
    return node;
}

inline int node_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "Y") return kTargetNode;
        throw InvalidSpec("unknown node id: " + j.get<std::string>());
    }
    return j.get<int>();
}

inline nlohmann::json to_json(const ScmSpec& spec) {
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : spec.edges)
        edges.push_back({{"source", node_to_json(e.source)},
                         {"dest", node_to_json(e.dest)},
                         {"lag", e.lag},
                         {"coef", e.coef}});
    return {{"n_features", spec.n_features}, {"edges", edges},   {"noise_std", spec.noise_std},
            {"length", spec.length},         {"burn_in", spec.burn_in}, {"seed", spec.seed}};
}

inline ScmSpec scm_spec_from_json(const nlohmann::json& j) {
    ScmSpec spec;
    try {
        spec.n_features = j.at("n_features").get<int>();
        for (const auto& je : j.at("edges")) {
            Edge e;
            e.source = node_from_json(je.at("source"));
            e.dest = node_from_json(je.at("dest"));
            e.lag = je.at("lag").get<int>();
            e.coef = je.at("coef").get<double>();
            spec.edges.push_back(e);
        }
        spec.noise_std = j.at("noise_std").get<double>();
        spec.length = j.at("length").get<long>();
        spec.burn_in = j.value("burn_in", 200L);
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed SCM spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

inline nlohmann::json to_json(const GroundTruth& gt) {
    nlohmann::json links = nlohmann::json::array();
    for (int v : gt.true_target_links) links.push_back(node_to_json(v));
    return {{"true_target_links", links}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth gt;
    for (const auto& v : j.at("true_target_links")) gt.true_target_links.insert(node_from_json(v));
    return gt;
}

}  // namespace tefs

#endif  // TEFS_SCM_HPP
