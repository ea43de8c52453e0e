#ifndef TEFS_ESTIMATORS_HPP
#define TEFS_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "tefs/errors.hpp"
#include "tefs/kdtree.hpp"
#include "tefs/timeseries.hpp"

namespace tefs {

enum class Backend { DiscretePlugin, GaussianClosedForm, KnnKsg };

/// Configuration shared by all conditional-mutual-information backends.
/// Estimator calls are pure functions of (data, config); concurrent calls on
/// shared immutable data are safe.
struct EstimatorConfig {
    Backend backend = Backend::KnnKsg;
    int k = 5;                      // neighbour count for the k-NN backend
    double noise_tiebreak = 1e-10;  // jitter amplitude breaking distance ties
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (k < 1) throw InvalidParams("k must be >= 1");
        if (noise_tiebreak < 0.0) throw InvalidParams("noise_tiebreak must be >= 0");
    }
};

/// Inputs of the finite-sample concentration bound. The constants C_V, C_B
/// and the Holder order beta are properties of the unknown joint density and
/// must be supplied by the user.
struct ConcentrationParams {
    long n = 1;        // sample count
    double eta = 0.05; // confidence parameter in (0, 1]
    double c_v = 1.0;  // variance constant
    double c_b = 1.0;  // bias constant
    double beta = 1.0; // Holder order in (0, 1]
    int d = 1;         // total dimension d_x + d_y + d_z

    void validate() const {
        if (n < 1) throw InvalidParams("n must be >= 1");
        if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParams("eta must be in (0, 1]");
        if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParams("beta must be in (0, 1]");
        if (c_v < 0.0 || c_b < 0.0) throw InvalidParams("constants must be nonnegative");
        if (d < 1) throw InvalidParams("d must be >= 1");
    }
};

namespace detail {

// psi(m) for integer m in [1, size], built by the recurrence
// psi(1) = -gamma, psi(m+1) = psi(m) + 1/m. All digamma arguments in the
// KSG estimate are integers, so this table is exact.
inline std::vector<double> digamma_table(long size) {
    constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
    std::vector<double> psi(static_cast<std::size_t>(size) + 1, 0.0);
    if (size >= 1) psi[1] = -kEulerGamma;
    for (long m = 1; m < size; ++m) psi[m + 1] = psi[m] + 1.0 / static_cast<double>(m);
    return psi;
}

// KSG estimator (algorithm 1) of I(A;B) in nats: for each point take the
// max-norm distance eps_i to its k-th neighbour in the joint space, count
// marginal points strictly inside eps_i, and average the digamma terms.
inline double ksg_mi(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int k,
                     const std::vector<double>& psi) {
    const long n = a.rows();
    Eigen::MatrixXd joint(n, a.cols() + b.cols());
    joint << a, b;

    MaxNormKdTree joint_tree(joint);
    MaxNormKdTree a_tree(a);
    MaxNormKdTree b_tree(b);

    std::vector<double> qa(a.cols()), qb(b.cols()), qj(joint.cols());
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < a.cols(); ++j) qa[j] = a(i, j);
        for (long j = 0; j < b.cols(); ++j) qb[j] = b(i, j);
        for (long j = 0; j < joint.cols(); ++j) qj[j] = joint(i, j);
        // k+1 because the query point itself sits in the tree at distance 0;
        // counts subtract the self point, floored for the eps == 0 corner
        // (duplicated rows with jitter disabled)
        const double eps = joint_tree.kth_distance(qj.data(), k + 1);
        const long na = std::max(0L, a_tree.count_within(qa.data(), eps) - 1);
        const long nb = std::max(0L, b_tree.count_within(qb.data(), eps) - 1);
        acc += psi[na + 1] + psi[nb + 1];
    }
    return psi[k] + psi[n] - acc / static_cast<double>(n);
}

// Exact plug-in CMI of the empirical joint frequencies of integer symbols.
inline double discrete_plugin_cmi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                  const Eigen::MatrixXd& z) {
    const long n = x.rows();
    auto encode = [n](const Eigen::MatrixXd& m) {
        std::vector<long> codes(n, 0);
        if (m.cols() == 0) return codes;  // single empty symbol
        std::map<std::vector<long long>, long> seen;
        std::vector<long long> key(m.cols());
        for (long i = 0; i < n; ++i) {
            for (long j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                const double r = std::nearbyint(v);
                if (!std::isfinite(v) || std::abs(v - r) > 0.0) throw NonIntegerSymbols();
                key[j] = static_cast<long long>(r);
            }
            const auto [it, inserted] = seen.emplace(key, static_cast<long>(seen.size()));
            codes[i] = it->second;
        }
        return codes;
    };

    const auto cx = encode(x);
    const auto cy = encode(y);
    const auto cz = encode(z);

    std::map<std::tuple<long, long, long>, long> n_xyz;
    std::map<std::pair<long, long>, long> n_xz, n_yz;
    std::map<long, long> n_z;
    for (long i = 0; i < n; ++i) {
        ++n_xyz[{cx[i], cy[i], cz[i]}];
        ++n_xz[{cx[i], cz[i]}];
        ++n_yz[{cy[i], cz[i]}];
        ++n_z[cz[i]];
    }

    long double acc = 0.0L;
    for (const auto& [cell, count] : n_xyz) {
        const auto [xi, yi, zi] = cell;
        const long double num = static_cast<long double>(count) * n_z.at(zi);
        const long double den =
            static_cast<long double>(n_xz.at({xi, zi})) * n_yz.at({yi, zi});
        acc += static_cast<long double>(count) * std::log(static_cast<double>(num / den));
    }
    const double value = static_cast<double>(acc / n);
    return std::max(0.0, value);  // plug-in CMI is nonnegative; clip rounding dust
}

inline double logdet_with_ridge(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::MatrixXd r = m;
    r.diagonal().array() += 1e-10;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(r);
    if (ldlt.info() != Eigen::Success) throw SingularCovariance();
    double ld = 0.0;
    for (long i = 0; i < r.rows(); ++i) {
        const double piv = ldlt.vectorD()[i];
        if (!(piv > 0.0)) throw SingularCovariance();
        ld += std::log(piv);
    }
    return ld;
}

inline double gaussian_cmi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           const Eigen::MatrixXd& z) {
    const long n = x.rows();
    const long dx = x.cols(), dy = y.cols(), dz = z.cols();
    Eigen::MatrixXd joint(n, dx + dy + dz);
    if (dz > 0)
        joint << x, y, z;
    else
        joint << x, y;
    const Eigen::RowVectorXd mean = joint.colwise().mean();
    const Eigen::MatrixXd centered = joint.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    auto block = [&](std::vector<long> idx) {
        Eigen::MatrixXd b(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) b(i, j) = cov(idx[i], idx[j]);
        return b;
    };
    std::vector<long> ix(dx), iy(dy), iz(dz);
    for (long i = 0; i < dx; ++i) ix[i] = i;
    for (long i = 0; i < dy; ++i) iy[i] = dx + i;
    for (long i = 0; i < dz; ++i) iz[i] = dx + dy + i;

    auto cat = [](std::vector<long> a, const std::vector<long>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    return 0.5 * (logdet_with_ridge(block(cat(ix, iz))) + logdet_with_ridge(block(cat(iy, iz)))
                  - logdet_with_ridge(block(iz)) - logdet_with_ridge(block(cat(cat(ix, iy), iz))));
}

}  // namespace detail

/// Estimates the conditional mutual information I(X;Y|Z) in nats. Pass a
/// 0-column matrix for z to get plain mutual information.
///
/// Backends:
///  - DiscretePlugin: exact plug-in CMI of empirical joint frequencies of
///    integer symbol codes; always >= 0 and satisfies the chain rule exactly.
///  - GaussianClosedForm: 1/2 (logdet S_xz + logdet S_yz - logdet S_z -
///    logdet S_xyz) on the empirical covariance, ridge 1e-10.
///  - KnnKsg: KSG estimates (max-norm, digamma corrections, seeded jitter of
///    amplitude noise_tiebreak applied once per call). Conditional estimates
///    use the chain-rule difference I([X Z];Y) - I(Z;Y) of two KSG terms,
///    which keeps the two finite-sample biases aligned so that they cancel
///    in the difference. May be negative.
inline double cmi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                  const EstimatorConfig& cfg) {
    cfg.validate();
    const long n = x.rows();
    if (y.rows() != n || (z.cols() > 0 && z.rows() != n)) throw RowCountMismatch();
    if (n < 4) throw TooFewSamples(n, "need at least 4 rows");
    if (x.cols() == 0 || y.cols() == 0) throw InvalidParams("x and y must have columns");

    switch (cfg.backend) {
        case Backend::DiscretePlugin:
            return detail::discrete_plugin_cmi(x, y, z.rows() == n ? z : Eigen::MatrixXd(n, 0));
        case Backend::GaussianClosedForm:
            return detail::gaussian_cmi(x, y, z.rows() == n ? z : Eigen::MatrixXd(n, 0));
        case Backend::KnnKsg:
            break;
    }

    if (cfg.k >= n) throw TooFewSamples(n, "k must be < n");
    const long dx = x.cols(), dy = y.cols(), dz = z.cols();
    Eigen::MatrixXd joint(n, dx + dy + dz);
    if (dz > 0)
        joint << x, y, z;
    else
        joint << x, y;
    if (cfg.noise_tiebreak > 0.0) {
        std::mt19937_64 rng(cfg.rng_seed);
        std::uniform_real_distribution<double> jitter(-cfg.noise_tiebreak, cfg.noise_tiebreak);
        for (long i = 0; i < joint.rows(); ++i)
            for (long j = 0; j < joint.cols(); ++j) joint(i, j) += jitter(rng);
    }
    const auto psi = detail::digamma_table(n + 1);
    const Eigen::MatrixXd yj = joint.middleCols(dx, dy);
    if (dz == 0) return detail::ksg_mi(joint.leftCols(dx), yj, cfg.k, psi);

    Eigen::MatrixXd xz(n, dx + dz);
    xz << joint.leftCols(dx), joint.rightCols(dz);
    return detail::ksg_mi(xz, yj, cfg.k, psi) - detail::ksg_mi(joint.rightCols(dz), yj, cfg.k, psi);
}

/// Conditional transfer entropy TE_{source -> Y | cond} in nats:
/// I(Y_t ; X_source^{t-1..t-L} | Y_{t-1..t-M}, X_cond^{t-1..t-L}).
/// The target's own past is always part of the conditioning; that is what
/// separates transfer entropy from plain CMI feature scoring.
inline double transfer_entropy(const TimeSeriesDataset& ds, const std::set<int>& source_set,
                               const std::set<int>& cond_set, const LagSpec& lags,
                               const EstimatorConfig& cfg) {
    if (source_set.empty()) throw InvalidParams("source set must be nonempty");
    for (int i : source_set)
        if (cond_set.count(i)) throw OverlappingSets();

    std::set<int> all = source_set;
    all.insert(cond_set.begin(), cond_set.end());
    const EmbeddedDesign design = embed(ds, lags, all);

    const long n = design.n;
    Eigen::MatrixXd x(n, lags.L * static_cast<long>(source_set.size()));
    long col = 0;
    for (int i : source_set) {
        x.middleCols(col, lags.L) = design.feature_lags.at(i);
        col += lags.L;
    }
    Eigen::MatrixXd y = design.response;
    Eigen::MatrixXd z(n, lags.M + lags.L * static_cast<long>(cond_set.size()));
    z.leftCols(lags.M) = design.target_lags;
    col = lags.M;
    for (int i : cond_set) {
        z.middleCols(col, lags.L) = design.feature_lags.at(i);
        col += lags.L;
    }
    return cmi(x, y, z, cfg);
}

/// Right-hand side of the density-estimator concentration inequality:
/// sqrt(4 C_V^2 / n * ln(2/eta)) + C_B * n^(-beta / (beta + d)).
inline double concentration_bound(const ConcentrationParams& p) {
    p.validate();
    const double n = static_cast<double>(p.n);
    const double variance_term = std::sqrt(4.0 * p.c_v * p.c_v / n * std::log(2.0 / p.eta));
    const double bias_term = p.c_b * std::pow(n, -p.beta / (p.beta + static_cast<double>(p.d)));
    return variance_term + bias_term;
}

}  // namespace tefs

#endif  // TEFS_ESTIMATORS_HPP
