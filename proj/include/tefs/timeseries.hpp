#ifndef TEFS_TIMESERIES_HPP
#define TEFS_TIMESERIES_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tefs/errors.hpp"

namespace tefs {

/// A T x D feature matrix plus a length-T target vector, in time order.
/// Immutable after construction; safe for concurrent reads.
struct TimeSeriesDataset {
    Eigen::MatrixXd features;  // T rows (time) x D columns
    Eigen::VectorXd target;    // length T
    std::vector<std::string> feature_names;
    std::string target_name;

    long T() const { return target.size(); }
    long D() const { return features.cols(); }

    void validate() const {
        if (T() < 2) throw TooFewRows(T());
        if (D() < 1) throw InvalidParams("dataset needs at least one feature");
        if (features.rows() != T()) throw RowCountMismatch();
        if (static_cast<long>(feature_names.size()) != D())
            throw InvalidParams("feature name count does not match column count");
        for (long t = 0; t < T(); ++t) {
            if (!std::isfinite(target[t])) throw NonFiniteValue(t, D());
            for (long j = 0; j < D(); ++j)
                if (!std::isfinite(features(t, j))) throw NonFiniteValue(t, j);
        }
    }
};

/// Lag depths: L past values per feature, M past values of the target.
struct LagSpec {
    int L = 1;
    int M = 1;

    int horizon() const { return std::max(L, M); }

    void validate(long series_length) const {
        if (L < 1 || M < 1) throw InvalidParams("lag depths must be >= 1");
        if (horizon() >= series_length) throw LagTooLarge(horizon(), series_length);
    }
};

/// Supervised rows (Y_t ; Y_{t-1..t-M} ; X_i^{t-1..t-L}) with no look-ahead:
/// every regressor value strictly precedes the response in time.
struct EmbeddedDesign {
    Eigen::VectorXd response;                  // n
    Eigen::MatrixXd target_lags;               // n x M, column j holds Y_{t-1-j}
    std::map<int, Eigen::MatrixXd> feature_lags;  // i -> n x L, column j holds X_i^{t-1-j}
    long n = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// Loads a UTF-8, comma-separated file with one header row. The named column
/// becomes the target; all remaining columns become features in header order.
inline TimeSeriesDataset load_csv(const std::string& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw TooFewRows(0);
    const auto header = detail::split_csv_line(line);
    const long n_cols = static_cast<long>(header.size());

    long target_idx = -1;
    for (long j = 0; j < n_cols; ++j) {
        if (header[j] == target_column) {
            if (target_idx >= 0) throw ParseError(0, j, "duplicate target column " + target_column);
            target_idx = j;
        }
    }
    if (target_idx < 0) throw MissingColumn(target_column);
    if (n_cols < 2) throw InvalidParams("CSV needs a target column and at least one feature");

    std::vector<std::vector<double>> rows;
    long row_idx = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (static_cast<long>(cells.size()) != n_cols)
            throw ParseError(row_idx, static_cast<long>(cells.size()),
                             "expected " + std::to_string(n_cols) + " cells");
        std::vector<double> vals(n_cols);
        for (long j = 0; j < n_cols; ++j) {
            const std::string& cell = cells[j];
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                throw ParseError(row_idx, j, "not a number: '" + cell + "'");
            if (!std::isfinite(v)) throw NonFiniteValue(row_idx, j);
            vals[j] = v;
        }
        rows.push_back(std::move(vals));
        ++row_idx;
    }
    if (row_idx < 2) throw TooFewRows(row_idx);

    TimeSeriesDataset ds;
    ds.target_name = header[target_idx];
    ds.target.resize(row_idx);
    ds.features.resize(row_idx, n_cols - 1);
    for (long j = 0; j < n_cols; ++j)
        if (j != target_idx) ds.feature_names.push_back(header[j]);
    for (long t = 0; t < row_idx; ++t) {
        long f = 0;
        for (long j = 0; j < n_cols; ++j) {
            if (j == target_idx)
                ds.target[t] = rows[t][j];
            else
                ds.features(t, f++) = rows[t][j];
        }
    }
    return ds;
}

/// Rescales every feature column and the target to empirical mean 0 and
/// unit sample variance. Idempotent up to rounding.
inline TimeSeriesDataset standardize(const TimeSeriesDataset& ds) {
    const long T = ds.T();
    auto zscore = [T](Eigen::VectorXd col, const std::string& name) {
        const double mean = col.mean();
        col.array() -= mean;
        const double var = col.squaredNorm() / static_cast<double>(T - 1);
        if (var <= 0.0) throw ZeroVariance(name);
        col /= std::sqrt(var);
        return col;
    };
    TimeSeriesDataset out = ds;
    for (long j = 0; j < ds.D(); ++j)
        out.features.col(j) = zscore(ds.features.col(j), ds.feature_names[j]);
    out.target = zscore(ds.target, ds.target_name);
    return out;
}

/// Lag-embeds the dataset for the given feature subset, dropping the first
/// max(L, M) rows. Row r of the result corresponds to time t = max(L,M) + r.
inline EmbeddedDesign embed(const TimeSeriesDataset& ds, const LagSpec& lags,
                            const std::set<int>& subset) {
    lags.validate(ds.T());
    for (int i : subset)
        if (i < 0 || i >= ds.D())
            throw InvalidParams("feature index out of range: " + std::to_string(i));

    const long h = lags.horizon();
    const long n = ds.T() - h;
    if (n <= 0) throw EmptyResult();

    EmbeddedDesign design;
    design.n = n;
    design.response = ds.target.segment(h, n);
    design.target_lags.resize(n, lags.M);
    for (int j = 0; j < lags.M; ++j)
        design.target_lags.col(j) = ds.target.segment(h - 1 - j, n);
    for (int i : subset) {
        Eigen::MatrixXd block(n, lags.L);
        for (int j = 0; j < lags.L; ++j)
            block.col(j) = ds.features.col(i).segment(h - 1 - j, n);
        design.feature_lags.emplace(i, std::move(block));
    }
    return design;
}

/// Splits into a time-prefix train set and the remaining test set.
inline std::pair<TimeSeriesDataset, TimeSeriesDataset> temporal_split(
    const TimeSeriesDataset& ds, double train_fraction) {
    const long T = ds.T();
    const long n_train = static_cast<long>(std::floor(train_fraction * static_cast<double>(T)));
    if (n_train <= 0 || n_train >= T) throw DegenerateSplit(train_fraction);

    auto slice = [&](long begin, long len) {
        TimeSeriesDataset part;
        part.features = ds.features.middleRows(begin, len);
        part.target = ds.target.segment(begin, len);
        part.feature_names = ds.feature_names;
        part.target_name = ds.target_name;
        return part;
    };
    return {slice(0, n_train), slice(n_train, T - n_train)};
}

}  // namespace tefs

#endif  // TEFS_TIMESERIES_HPP
