#include "armor/transport.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>

namespace armor {

double norm_eval(Norm norm, const Vec& v) {
    switch (norm) {
        case Norm::L1: return v.lpNorm<1>();
        case Norm::L2: return v.norm();
        case Norm::LInf: return v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

Vec norm_pow_grad(Norm norm, double q, const Vec& v) {
    const double nv = norm_eval(norm, v);
    Vec g = Vec::Zero(v.size());
    if (nv == 0.0) return g;  // subgradient choice at the origin
    const double scale = q * std::pow(nv, q - 1.0);
    switch (norm) {
        case Norm::L1:
            for (Eigen::Index i = 0; i < v.size(); ++i)
                g[i] = v[i] > 0.0 ? scale : (v[i] < 0.0 ? -scale : 0.0);
            break;
        case Norm::L2:
            // q ||v||^{q-2} v
            g = (scale / nv) * v;
            break;
        case Norm::LInf: {
            Eigen::Index imax = 0;
            double best = -1.0;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (std::abs(v[i]) > best) { best = std::abs(v[i]); imax = i; }
            g[imax] = v[imax] >= 0.0 ? scale : -scale;
            break;
        }
    }
    return g;
}

void validate_prob(const Vec& v, double tol) {
    if (v.size() == 0) throw std::invalid_argument("probability vector is empty");
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!(v[i] >= 0.0))
            throw std::invalid_argument("probability vector has a negative entry");
    if (std::abs(v.sum() - 1.0) > tol)
        throw std::invalid_argument("probability vector does not sum to 1");
}

void validate_coupling(const Mat& plan, const Vec& mu, const Vec& nu, double tol) {
    if (plan.rows() != mu.size() || plan.cols() != nu.size())
        throw std::invalid_argument("coupling shape does not match marginals");
    if ((plan.array() < -tol).any())
        throw std::invalid_argument("coupling has a negative entry");
    if (((plan.rowwise().sum() - mu).array().abs() > tol).any())
        throw std::invalid_argument("coupling row sums do not match first marginal");
    if (((plan.colwise().sum().transpose() - nu).array().abs() > tol).any())
        throw std::invalid_argument("coupling column sums do not match second marginal");
}

double plan_cost(const Mat& cost, const Mat& plan) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < cost.rows(); ++i)
        for (Eigen::Index j = 0; j < cost.cols(); ++j) {
            const double mass = plan(i, j);
            if (mass == 0.0) continue;  // 0 * inf := 0
            if (!std::isfinite(cost(i, j))) return kInf;
            total += mass * cost(i, j);
        }
    return total;
}

namespace {

// Two-phase transportation simplex with forbidden (infinite-cost) cells.
// The basis is a spanning tree over row nodes 0..n-1 and column nodes
// n..n+m-1 with exactly n+m-1 basic cells.
class TransportSimplex {
public:
    TransportSimplex(const Mat& cost, const Vec& mu, const Vec& nu)
        : cost_(cost), n_(static_cast<int>(mu.size())), m_(static_cast<int>(nu.size())) {
        allowed_.resize(n_, std::vector<bool>(m_));
        has_forbidden_ = false;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < m_; ++j) {
                allowed_[i][j] = std::isfinite(cost(i, j));
                has_forbidden_ = has_forbidden_ || !allowed_[i][j];
            }
        init_northwest(mu, nu);
    }

    // Returns false when no coupling avoids forbidden cells.
    bool solve() {
        if (has_forbidden_) {
            run(Phase::One);
            double artificial = 0.0;
            for (int k = 0; k < nbasic(); ++k)
                if (!allowed_[row_[k]][col_[k]]) artificial += flow_[k];
            if (artificial > 1e-10) return false;
            purge_forbidden_basics();
        }
        run(Phase::Two);
        return true;
    }

    Mat plan() const {
        Mat p = Mat::Zero(n_, m_);
        for (int k = 0; k < nbasic(); ++k)
            p(row_[k], col_[k]) += std::max(flow_[k], 0.0);
        return p;
    }

    double value() const {
        double total = 0.0;
        for (int k = 0; k < nbasic(); ++k)
            if (flow_[k] > 0.0) total += flow_[k] * cost_(row_[k], col_[k]);
        return total;
    }

private:
    enum class Phase { One, Two };

    int nbasic() const { return n_ + m_ - 1; }

    // Cost of a basic cell as seen by the potentials. Phase 1 minimizes the
    // total mass routed through forbidden cells; phase 2 treats surviving
    // zero-flow forbidden basics (bridges between otherwise disconnected
    // components) as free.
    double phase_cost(Phase phase, int i, int j) const {
        if (phase == Phase::One) return allowed_[i][j] ? 0.0 : 1.0;
        return allowed_[i][j] ? cost_(i, j) : 0.0;
    }

    void init_northwest(const Vec& mu, const Vec& nu) {
        Vec a = mu, b = nu;
        row_.reserve(nbasic());
        col_.reserve(nbasic());
        flow_.reserve(nbasic());
        int i = 0, j = 0;
        while (true) {
            const double take = std::min(a[i], b[j]);
            row_.push_back(i);
            col_.push_back(j);
            flow_.push_back(take);
            a[i] -= take;
            b[j] -= take;
            if (i == n_ - 1 && j == m_ - 1) break;
            if (j == m_ - 1) { ++i; continue; }
            if (i == n_ - 1) { ++j; continue; }
            if (a[i] <= 0.0) ++i; else ++j;
        }
        assert(static_cast<int>(row_.size()) == nbasic());
        rebuild_adjacency();
    }

    void rebuild_adjacency() {
        adj_.assign(n_ + m_, {});
        for (int k = 0; k < nbasic(); ++k) {
            adj_[row_[k]].push_back(k);
            adj_[n_ + col_[k]].push_back(k);
        }
    }

    int other_end(int k, int node) const {
        return node == row_[k] ? n_ + col_[k] : row_[k];
    }

    void compute_potentials(Phase phase, std::vector<double>& u, std::vector<double>& v) const {
        u.assign(n_, 0.0);
        v.assign(m_, 0.0);
        std::vector<bool> seen(n_ + m_, false);
        std::deque<int> queue{0};
        seen[0] = true;
        while (!queue.empty()) {
            const int node = queue.front();
            queue.pop_front();
            for (int k : adj_[node]) {
                const int nb = other_end(k, node);
                if (seen[nb]) continue;
                seen[nb] = true;
                const double c = phase_cost(phase, row_[k], col_[k]);
                if (nb >= n_)
                    v[nb - n_] = c - u[row_[k]];
                else
                    u[nb] = c - v[col_[k]];
                queue.push_back(nb);
            }
        }
        assert(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
    }

    // Entering cell: most negative reduced cost, or the lowest-index negative
    // cell under Bland's rule once degenerate pivots pile up.
    bool find_entering(Phase phase, bool bland, int& ei, int& ej) const {
        std::vector<double> u, v;
        compute_potentials(phase, u, v);
        std::vector<std::vector<bool>> basic(n_, std::vector<bool>(m_, false));
        for (int k = 0; k < nbasic(); ++k) basic[row_[k]][col_[k]] = true;

        const double tol = 1e-11;
        double best = -tol;
        ei = -1;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < m_; ++j) {
                if (basic[i][j]) continue;
                if (phase == Phase::Two && !allowed_[i][j]) continue;
                const double rc = phase_cost(phase, i, j) - u[i] - v[j];
                if (rc < -tol) {
                    if (bland) { ei = i; ej = j; return true; }
                    if (rc < best) { best = rc; ei = i; ej = j; }
                }
            }
        return ei >= 0;
    }

    // Tree path from row node `from` to column node `to`, as basic-cell indices.
    std::vector<int> tree_path(int from, int to) const {
        std::vector<int> parent_edge(n_ + m_, -1), parent(n_ + m_, -1);
        std::vector<bool> seen(n_ + m_, false);
        std::deque<int> queue{from};
        seen[from] = true;
        while (!queue.empty()) {
            const int node = queue.front();
            queue.pop_front();
            if (node == to) break;
            for (int k : adj_[node]) {
                const int nb = other_end(k, node);
                if (seen[nb]) continue;
                seen[nb] = true;
                parent[nb] = node;
                parent_edge[nb] = k;
                queue.push_back(nb);
            }
        }
        std::vector<int> path;
        for (int node = to; node != from; node = parent[node]) {
            assert(parent[node] >= 0);
            path.push_back(parent_edge[node]);
        }
        return path;  // ordered from `to` back to `from`
    }

    // Pivot the entering cell into the basis. Returns true for a degenerate
    // pivot (theta == 0).
    bool pivot(int ei, int ej) {
        // Cycle = entering edge (+) plus the tree path from col ej back to
        // row ei, with alternating signs starting at -.
        const std::vector<int> path = tree_path(ei, n_ + ej);
        double theta = kInf;
        int leave = -1;
        int sign = -1;
        for (std::size_t s = 0; s < path.size(); ++s, sign = -sign) {
            const int k = path[s];
            if (sign < 0 && (flow_[k] < theta || (flow_[k] == theta && k < leave))) {
                theta = flow_[k];
                leave = k;
            }
        }
        assert(leave >= 0);
        theta = std::max(theta, 0.0);

        sign = -1;
        for (std::size_t s = 0; s < path.size(); ++s, sign = -sign) {
            flow_[path[s]] += sign * theta;
            if (sign < 0) flow_[path[s]] = std::max(flow_[path[s]], 0.0);
        }

        row_[leave] = ei;
        col_[leave] = ej;
        flow_[leave] = theta;
        rebuild_adjacency();
        return theta <= 1e-15;
    }

    void run(Phase phase) {
        const int limit = 4000 * (n_ + m_) + 1000;
        int degenerate_streak = 0;
        bool bland = false;
        for (int iter = 0; iter < limit; ++iter) {
            int ei, ej;
            if (!find_entering(phase, bland, ei, ej)) return;
            if (pivot(ei, ej)) {
                if (++degenerate_streak > 20 * (n_ + m_)) bland = true;
            } else {
                degenerate_streak = 0;
            }
        }
        throw std::runtime_error("transportation simplex exceeded iteration limit");
    }

    // After phase 1, forbidden cells may linger in the basis at zero flow.
    // Swap each for an allowed cell reconnecting the two tree components it
    // bridges; when no allowed cell crosses, the components are independent
    // subproblems and the zero-flow bridge can stay (it never regains mass
    // because entering cells are always allowed, hence intra-component).
    void purge_forbidden_basics() {
        for (int k = 0; k < nbasic(); ++k) {
            if (allowed_[row_[k]][col_[k]]) continue;
            flow_[k] = 0.0;
            // Component of the row endpoint with edge k removed.
            std::vector<bool> in_comp(n_ + m_, false);
            std::deque<int> queue{row_[k]};
            in_comp[row_[k]] = true;
            while (!queue.empty()) {
                const int node = queue.front();
                queue.pop_front();
                for (int e : adj_[node]) {
                    if (e == k) continue;
                    const int nb = other_end(e, node);
                    if (in_comp[nb]) continue;
                    in_comp[nb] = true;
                    queue.push_back(nb);
                }
            }
            std::vector<std::vector<bool>> basic(n_, std::vector<bool>(m_, false));
            for (int e = 0; e < nbasic(); ++e) basic[row_[e]][col_[e]] = true;
            bool swapped = false;
            for (int i = 0; i < n_ && !swapped; ++i)
                for (int j = 0; j < m_ && !swapped; ++j) {
                    if (basic[i][j] || !allowed_[i][j]) continue;
                    if (in_comp[i] != in_comp[n_ + j]) {
                        row_[k] = i;
                        col_[k] = j;
                        flow_[k] = 0.0;
                        rebuild_adjacency();
                        swapped = true;
                    }
                }
        }
    }

    const Mat& cost_;
    int n_, m_;
    std::vector<std::vector<bool>> allowed_;
    bool has_forbidden_ = false;
    std::vector<int> row_, col_;
    std::vector<double> flow_;
    std::vector<std::vector<int>> adj_;
};

}  // namespace

OtResult ot_cost(const Mat& cost, const Vec& mu, const Vec& nu) {
    if (cost.rows() != mu.size() || cost.cols() != nu.size())
        throw std::invalid_argument("ot_cost: cost shape does not match marginals");
    validate_prob(mu);
    validate_prob(nu);
    if ((cost.array() < 0.0).any())
        throw std::invalid_argument("ot_cost: cost entries must be >= 0");
    if (std::abs(mu.sum() - nu.sum()) > 1e-8)
        throw std::invalid_argument("ot_cost: numerically infeasible marginals");

    // Remove the tiny mass-balance drift so the simplex sees an exactly
    // balanced problem.
    Vec nu_scaled = nu * (mu.sum() / nu.sum());

    TransportSimplex simplex(cost, mu, nu_scaled);
    if (!simplex.solve()) return {kInf, simplex.plan()};
    OtResult result{simplex.value(), simplex.plan()};
    validate_coupling(result.plan, mu, nu);
    return result;
}

double label_ot(const Vec& p, const Vec& pt) {
    if (p.size() != pt.size())
        throw std::invalid_argument("label_ot: length mismatch");
    return 1.0 - p.cwiseMin(pt).sum();
}

double g_delta(double delta, double z) {
    if (z < 0.0) throw std::invalid_argument("g_delta: z must be >= 0");
    if (z >= delta) return kInf;
    return z / (1.0 - z / delta);
}

double g_delta(const LabelCostSpec& spec, double z) {
    spec.validate();
    return g_delta(spec.delta, z);
}

Mat build_sample_cost(const SampleCostSpec& spec, const Mat& xs, const Mat& ys,
                      const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& labels_equal) {
    spec.validate();
    if (xs.cols() != ys.cols())
        throw std::invalid_argument("build_sample_cost: point dimensions differ");
    if (labels_equal.rows() != xs.rows() || labels_equal.cols() != ys.rows())
        throw std::invalid_argument("build_sample_cost: mask shape mismatch");
    Mat cost(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) {
            if (!labels_equal(i, j)) {
                cost(i, j) = kInf;
                continue;
            }
            const double d = norm_eval(spec.norm, (xs.row(i) - ys.row(j)).transpose());
            cost(i, j) = spec.L * std::pow(d, spec.q);
        }
    return cost;
}

Mat build_sample_cost(const SampleCostSpec& spec, const Mat& xs, const Mat& ys,
                      const std::vector<int>& xl, const std::vector<int>& yl) {
    if (static_cast<Eigen::Index>(xl.size()) != xs.rows() ||
        static_cast<Eigen::Index>(yl.size()) != ys.rows())
        throw std::invalid_argument("build_sample_cost: label count mismatch");
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) mask(i, j) = xl[i] == yl[j];
    return build_sample_cost(spec, xs, ys, mask);
}

Mat build_ball_cost(const BallCostSpec& spec, const Mat& xs, const Mat& ys) {
    spec.validate();
    if (xs.cols() != ys.cols())
        throw std::invalid_argument("build_ball_cost: point dimensions differ");
    Mat cost(xs.rows(), ys.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        for (Eigen::Index j = 0; j < ys.rows(); ++j) {
            const double d = norm_eval(spec.metric, (xs.row(i) - ys.row(j)).transpose());
            cost(i, j) = d <= spec.radius ? 0.0 : kInf;
        }
    return cost;
}

Mat scale_cost(const Mat& cost, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("scale_cost: r must be > 0");
    return cost * r;  // r * inf == inf
}

}  // namespace armor
