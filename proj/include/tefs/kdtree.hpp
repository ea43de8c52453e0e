#ifndef TEFS_KDTREE_HPP
#define TEFS_KDTREE_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Dense>

namespace tefs {

/// Static k-d tree over points in R^d under the Chebyshev (max) norm.
/// Supports the two queries the KSG estimator needs: the distance to the
/// k-th nearest stored point, and the number of stored points strictly
/// inside an open ball.
class MaxNormKdTree {
public:
    explicit MaxNormKdTree(const Eigen::MatrixXd& points, int leaf_size = 16)
        : n_(points.rows()), d_(points.cols()), leaf_size_(std::max(1, leaf_size)) {
        data_.resize(static_cast<std::size_t>(n_) * d_);
        for (long i = 0; i < n_; ++i)
            for (long j = 0; j < d_; ++j) data_[static_cast<std::size_t>(i) * d_ + j] = points(i, j);
        index_.resize(n_);
        std::iota(index_.begin(), index_.end(), 0L);
        nodes_.reserve(static_cast<std::size_t>(2 * n_ / leaf_size_ + 2));
        if (n_ > 0) build(0, n_);
    }

    long size() const { return n_; }
    long dim() const { return d_; }

    /// Max-norm distance from q to the k-th nearest stored point (1-based;
    /// a stored point identical to q counts at distance 0).
    double kth_distance(const double* q, long k) const {
        k = std::min(k, n_);
        std::priority_queue<double> worst;  // max-heap of current best k distances
        kth_search(0, q, k, worst);
        return worst.top();
    }

    /// Number of stored points p with dist(p, q) < radius.
    long count_within(const double* q, double radius) const {
        if (n_ == 0 || radius <= 0.0) return 0;
        return count_search(0, q, radius);
    }

private:
    struct Node {
        long begin = 0, end = 0;   // index range (leaf) or covered range (internal)
        long left = -1, right = -1;
        std::vector<double> lo, hi;  // bounding box
    };

    const double* point(long idx) const { return data_.data() + static_cast<std::size_t>(index_[idx]) * d_; }

    double dist(const double* a, const double* b) const {
        double m = 0.0;
        for (long j = 0; j < d_; ++j) {
            const double v = std::abs(a[j] - b[j]);
            if (v > m) m = v;
        }
        return m;
    }

    // Smallest possible distance from q to any point of the node's box.
    double box_min_dist(const Node& nd, const double* q) const {
        double m = 0.0;
        for (long j = 0; j < d_; ++j) {
            double v = 0.0;
            if (q[j] < nd.lo[j]) v = nd.lo[j] - q[j];
            else if (q[j] > nd.hi[j]) v = q[j] - nd.hi[j];
            if (v > m) m = v;
        }
        return m;
    }

    // Largest possible distance from q to any point of the node's box.
    double box_max_dist(const Node& nd, const double* q) const {
        double m = 0.0;
        for (long j = 0; j < d_; ++j) {
            const double v = std::max(std::abs(q[j] - nd.lo[j]), std::abs(q[j] - nd.hi[j]));
            if (v > m) m = v;
        }
        return m;
    }

    long build(long begin, long end) {
        Node nd;
        nd.begin = begin;
        nd.end = end;
        nd.lo.assign(d_, std::numeric_limits<double>::infinity());
        nd.hi.assign(d_, -std::numeric_limits<double>::infinity());
        for (long i = begin; i < end; ++i) {
            const double* p = data_.data() + static_cast<std::size_t>(index_[i]) * d_;
            for (long j = 0; j < d_; ++j) {
                nd.lo[j] = std::min(nd.lo[j], p[j]);
                nd.hi[j] = std::max(nd.hi[j], p[j]);
            }
        }
        const long id = static_cast<long>(nodes_.size());
        nodes_.push_back(nd);

        if (end - begin > leaf_size_) {
            long split_dim = 0;
            double widest = -1.0;
            for (long j = 0; j < d_; ++j) {
                const double w = nd.hi[j] - nd.lo[j];
                if (w > widest) {
                    widest = w;
                    split_dim = j;
                }
            }
            if (widest > 0.0) {
                const long mid = begin + (end - begin) / 2;
                std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                                 [&](long a, long b) {
                                     return data_[static_cast<std::size_t>(a) * d_ + split_dim]
                                          < data_[static_cast<std::size_t>(b) * d_ + split_dim];
                                 });
                const long l = build(begin, mid);
                const long r = build(mid, end);
                nodes_[id].left = l;
                nodes_[id].right = r;
            }
            // widest == 0: all points coincide, keep as leaf
        }
        return id;
    }

    void kth_search(long node_id, const double* q, long k, std::priority_queue<double>& worst) const {
        const Node& nd = nodes_[node_id];
        if (static_cast<long>(worst.size()) == k && box_min_dist(nd, q) >= worst.top()) return;
        if (nd.left < 0) {
            for (long i = nd.begin; i < nd.end; ++i) {
                const double dv = dist(q, point(i));
                if (static_cast<long>(worst.size()) < k) {
                    worst.push(dv);
                } else if (dv < worst.top()) {
                    worst.pop();
                    worst.push(dv);
                }
            }
            return;
        }
        const double dl = box_min_dist(nodes_[nd.left], q);
        const double dr = box_min_dist(nodes_[nd.right], q);
        if (dl <= dr) {
            kth_search(nd.left, q, k, worst);
            kth_search(nd.right, q, k, worst);
        } else {
            kth_search(nd.right, q, k, worst);
            kth_search(nd.left, q, k, worst);
        }
    }

    long count_search(long node_id, const double* q, double radius) const {
        const Node& nd = nodes_[node_id];
        if (box_min_dist(nd, q) >= radius) return 0;
        if (box_max_dist(nd, q) < radius) return nd.end - nd.begin;
        if (nd.left < 0) {
            long c = 0;
            for (long i = nd.begin; i < nd.end; ++i)
                if (dist(q, point(i)) < radius) ++c;
            return c;
        }
        return count_search(nd.left, q, radius) + count_search(nd.right, q, radius);
    }

    long n_;
    long d_;
    long leaf_size_;
    std::vector<double> data_;   // row-major n x d
    std::vector<long> index_;
    std::vector<Node> nodes_;
};

}  // namespace tefs

#endif  // TEFS_KDTREE_HPP
