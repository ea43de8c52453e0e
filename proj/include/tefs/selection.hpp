#ifndef TEFS_SELECTION_HPP
#define TEFS_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tefs/errors.hpp"
#include "tefs/estimators.hpp"
#include "tefs/timeseries.hpp"

namespace tefs {

enum class Task { Regression, Classification };
enum class Direction { Forward, Backward };
enum class StopReason { ThresholdReached, CandidatesExhausted, EstimateFloor };

/// Parameters of the greedy procedures. `threshold` is the maximum tolerated
/// information loss (backward) or the minimum required information gain
/// (forward). When target_bound_B is unset it defaults to the empirical
/// max |Y| of the training data.
struct SelectionConfig {
    LagSpec lags;
    double threshold = 0.0;
    std::optional<double> target_bound_B;
    Task task = Task::Regression;
    EstimatorConfig estimator;
    double epsilon_stop = 0.0;  // forward early-stop floor on the best candidate estimate

    void validate() const {
        if (threshold < 0.0) throw InvalidParams("threshold must be >= 0");
        if (target_bound_B && !(*target_bound_B > 0.0))
            throw InvalidParams("target bound B must be > 0");
        if (epsilon_stop < 0.0) throw InvalidParams("epsilon_stop must be >= 0");
        estimator.validate();
    }

    /// The loop-guard constant: threshold / (2 B^2) for regression,
    /// threshold^2 / 2 for classification.
    double comparison_threshold(double bound_b) const {
        if (task == Task::Classification) return threshold * threshold / 2.0;
        return threshold / (2.0 * bound_b * bound_b);
    }
};

struct SelectionStep {
    int feature = 0;
    double te = 0.0;          // raw conditional TE estimate, possibly negative
    double cumulative = 0.0;  // clamped running total after this step
};

/// Trace of one greedy run. For backward runs, selected and removed
/// partition the full feature set; cumulative values are nondecreasing
/// because negative estimates are clamped to zero when accumulated.
struct SelectionResult {
    Direction direction = Direction::Forward;
    std::vector<int> selected;  // forward: selection order; backward: surviving features
    std::vector<int> removed;   // backward only, removal order
    std::vector<SelectionStep> steps;
    int iterations_K = 0;
    StopReason stop_reason = StopReason::CandidatesExhausted;
};

/// Conditional-TE oracle used by the greedy cores: candidate feature index
/// plus the current conditioning set. Production runs bind transfer_entropy;
/// tests may substitute stubs.
using TeEvaluator = std::function<double(int candidate, const std::set<int>& cond)>;

/// Forward TEFS core: repeatedly add the candidate with the largest
/// conditional TE given the already-selected features, accumulating the
/// (clamped) gain. Stops when the accumulated gain reaches the guard, when
/// candidates run out, or when the best candidate estimate drops to
/// epsilon_stop or below.
inline SelectionResult forward_tefs_core(int n_features, const SelectionConfig& cfg,
                                         double bound_b, const TeEvaluator& te) {
    cfg.validate();
    if (n_features < 1) throw InvalidParams("need at least one feature");
    const double guard = cfg.comparison_threshold(bound_b);

    SelectionResult result;
    result.direction = Direction::Forward;
    double cumulative = 0.0;
    if (cumulative >= guard) {
        result.stop_reason = StopReason::ThresholdReached;
        return result;
    }

    std::set<int> selected_set;
    std::vector<int> remaining(n_features);
    for (int i = 0; i < n_features; ++i) remaining[i] = i;

    while (!remaining.empty()) {
        int best = remaining.front();
        double best_te = -std::numeric_limits<double>::infinity();
        for (int i : remaining) {
            const double v = te(i, selected_set);
            if (v > best_te) {  // ties keep the lowest index
                best_te = v;
                best = i;
            }
        }
        if (best_te <= cfg.epsilon_stop) {
            result.stop_reason = StopReason::EstimateFloor;
            return result;
        }
        cumulative += std::max(0.0, best_te);
        result.selected.push_back(best);
        selected_set.insert(best);
        remaining.erase(std::find(remaining.begin(), remaining.end(), best));
        result.steps.push_back({best, best_te, cumulative});
        ++result.iterations_K;
        if (cumulative >= guard) {
            result.stop_reason = StopReason::ThresholdReached;
            return result;
        }
    }
    result.stop_reason = StopReason::CandidatesExhausted;
    return result;
}

/// Backward TEFS core: repeatedly find the remaining feature with the
/// smallest conditional TE given the other remaining features and remove it
/// if the accumulated (clamped) loss stays within the guard; otherwise stop.
/// The final remaining feature is never removed.
inline SelectionResult backward_tefs_core(int n_features, const SelectionConfig& cfg,
                                          double bound_b, const TeEvaluator& te) {
    cfg.validate();
    if (n_features < 1) throw InvalidParams("need at least one feature");
    const double guard = cfg.comparison_threshold(bound_b);

    SelectionResult result;
    result.direction = Direction::Backward;
    std::set<int> selected;
    for (int i = 0; i < n_features; ++i) selected.insert(i);
    double cumulative = 0.0;

    while (selected.size() > 1) {
        int worst = *selected.begin();
        double worst_te = std::numeric_limits<double>::infinity();
        for (int i : selected) {
            std::set<int> cond = selected;
            cond.erase(i);
            const double v = te(i, cond);
            if (v < worst_te) {  // ties keep the lowest index
                worst_te = v;
                worst = i;
            }
        }
        const double tentative = cumulative + std::max(0.0, worst_te);
        if (tentative > guard) {
            result.stop_reason = StopReason::ThresholdReached;
            break;
        }
        cumulative = tentative;
        selected.erase(worst);
        result.removed.push_back(worst);
        result.steps.push_back({worst, worst_te, cumulative});
        ++result.iterations_K;
    }
    if (selected.size() <= 1 && result.stop_reason != StopReason::ThresholdReached)
        result.stop_reason = StopReason::CandidatesExhausted;
    result.selected.assign(selected.begin(), selected.end());
    return result;
}

namespace detail {

inline double resolve_bound_b(const TimeSeriesDataset& ds, const SelectionConfig& cfg) {
    if (cfg.target_bound_B) return *cfg.target_bound_B;
    const double b = ds.target.cwiseAbs().maxCoeff();
    if (!(b > 0.0)) throw InvalidParams("cannot infer target bound B from an all-zero target");
    return b;
}

inline TeEvaluator bind_te(const TimeSeriesDataset& ds, const SelectionConfig& cfg) {
    return [&ds, cfg](int candidate, const std::set<int>& cond) {
        return transfer_entropy(ds, {candidate}, cond, cfg.lags, cfg.estimator);
    };
}

}  // namespace detail

inline SelectionResult forward_tefs(const TimeSeriesDataset& ds, const SelectionConfig& cfg) {
    ds.validate();
    return forward_tefs_core(static_cast<int>(ds.D()), cfg, detail::resolve_bound_b(ds, cfg),
                             detail::bind_te(ds, cfg));
}

inline SelectionResult backward_tefs(const TimeSeriesDataset& ds, const SelectionConfig& cfg) {
    ds.validate();
    return backward_tefs_core(static_cast<int>(ds.D()), cfg, detail::resolve_bound_b(ds, cfg),
                              detail::bind_te(ds, cfg));
}

/// Error-bound bookkeeping for a finished run. The irreducible terms (the
/// regression sigma^2 and the Bayes error epsilon) are never estimated; the
/// report carries only the excess term added on top of them.
struct BoundReport {
    Task task = Task::Regression;
    double threshold_used = 0.0;
    double excess_term = 0.0;
    std::optional<double> total_te_estimate;  // forward only
    std::string note;
};

/// Excess-term formulas: backward runs pay at most the threshold itself;
/// forward runs pay 2 B^2 TE_{X->Y} - Delta (regression) or
/// sqrt(max(0, 2 TE_{X->Y} - Delta^2)) (classification), where total_te is
/// the transfer entropy of the full feature set.
inline BoundReport compute_bounds(const SelectionResult& result, const SelectionConfig& cfg,
                                  std::optional<double> total_te = std::nullopt,
                                  std::optional<double> bound_b = std::nullopt) {
    cfg.validate();
    BoundReport report;
    report.task = cfg.task;
    report.threshold_used = cfg.threshold;
    const bool regression = cfg.task == Task::Regression;

    if (result.direction == Direction::Backward) {
        report.excess_term = cfg.threshold;
        report.note = regression ? "error bound = sigma^2 + excess_term; sigma^2 symbolic"
                                 : "error bound = epsilon + excess_term; epsilon symbolic";
        return report;
    }
    if (!total_te) throw MissingTotalTe();
    report.total_te_estimate = total_te;
    if (regression) {
        if (!bound_b) bound_b = cfg.target_bound_B;
        if (!bound_b) throw InvalidParams("forward regression bound requires the target bound B");
        const double b = *bound_b;
        report.excess_term = 2.0 * b * b * (*total_te) - cfg.threshold;
        report.note = "error bound = sigma^2 + excess_term; sigma^2 symbolic";
    } else {
        report.excess_term = std::sqrt(std::max(0.0, 2.0 * (*total_te) - cfg.threshold * cfg.threshold));
        report.note = "error bound = epsilon + excess_term; epsilon symbolic";
    }
    return report;
}

// --- serialization ---

inline std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::ThresholdReached: return "ThresholdReached";
        case StopReason::CandidatesExhausted: return "CandidatesExhausted";
        case StopReason::EstimateFloor: return "EstimateFloor";
    }
    return "?";
}

inline std::string to_string(Direction d) {
    return d == Direction::Forward ? "forward" : "backward";
}

inline std::string to_string(Task t) {
    return t == Task::Regression ? "regression" : "classification";
}

inline nlohmann::json to_json(const SelectionResult& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"feature", s.feature}, {"te", s.te}, {"cumulative", s.cumulative}});
    return {{"direction", to_string(r.direction)},
            {"selected", r.selected},
            {"removed", r.removed},
            {"steps", steps},
            {"iterations_K", r.iterations_K},
            {"stop_reason", to_string(r.stop_reason)}};
}

inline nlohmann::json to_json(const BoundReport& b) {
    nlohmann::json j = {{"task", to_string(b.task)},
                        {"threshold_used", b.threshold_used},
                        {"excess_term", b.excess_term},
                        {"note", b.note}};
    if (b.total_te_estimate) j["total_te_estimate"] = *b.total_te_estimate;
    return j;
}

}  // namespace tefs

#endif  // TEFS_SELECTION_HPP
