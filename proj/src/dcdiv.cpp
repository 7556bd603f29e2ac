#include "armor/dcdiv.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>

namespace armor {

namespace {

// Pointwise derivative of f on its domain. KL: log z + 1 (-inf at 0).
// Alpha: z^{alpha-1} / (alpha - 1). BetaMix chains through the affine
// reparametrization, whose slope is 1.
double f_prime(const DivergenceSpec& spec, double z) {
    switch (spec.kind) {
        case DivKind::KL:
            return z <= 0.0 ? -kInf : std::log(z) + 1.0;
        case DivKind::Alpha:
            return std::pow(std::max(z, 0.0), spec.alpha - 1.0) / (spec.alpha - 1.0);
        case DivKind::BetaMix: {
            const double arg = (z - 1.0 + spec.beta) / spec.beta;
            if (spec.base == DivKind::KL)
                return arg <= 0.0 ? -kInf : std::log(arg) + 1.0;
            return std::pow(std::max(arg, 0.0), spec.alpha - 1.0) / (spec.alpha - 1.0);
        }
        case DivKind::Indicator:
            throw UnsupportedDivergenceOp("indicator divergence has no pointwise f");
    }
    return 0.0;
}

// Lower edge of the likelihood-ratio domain: 0 for KL/alpha, 1 - beta for a
// beta-mixture (below which f_beta = +inf).
double domain_floor(const DivergenceSpec& spec) {
    return spec.kind == DivKind::BetaMix ? 1.0 - spec.beta : 0.0;
}

struct Atom {
    std::vector<int> assign;  // row (support index) for every column
    double weight = 0.0;
    double lin = 0.0;         // sum_j Q_j c(row_j, col_j), zero-mass columns skipped
    Vec eta;                  // row marginal contributed by this atom
};

}  // namespace

DcResult dc_primal(const DivergenceSpec& D, const Mat& cost, const Vec& P, const Vec& Q,
                   const DcOptions& opts, DcWarmStart* warm) {
    D.validate();
    if (cost.rows() != P.size() || cost.cols() != Q.size())
        throw std::invalid_argument("dc_primal: cost shape does not match P, Q");
    validate_prob(P);
    validate_prob(Q);

    if (D.kind == DivKind::Indicator) {
        // D forces eta = P; only the transport stage remains.
        OtResult ot = ot_cost(cost, P, Q);
        DcResult res;
        res.value = ot.value;
        res.eta_star = P;
        res.plan = std::move(ot.plan);
        return res;
    }

    // eta lives on supp(P): off-support mass makes D_f infinite.
    std::vector<int> support;
    for (Eigen::Index i = 0; i < P.size(); ++i)
        if (P[i] > 0.0) support.push_back(static_cast<int>(i));
    const int ns = static_cast<int>(support.size());
    const int m = static_cast<int>(Q.size());

    DcResult res;
    res.eta_star = P;
    res.plan = Mat::Zero(P.size(), Q.size());

    // Unreachable mass: some column of Q has no finite-cost route from supp(P).
    for (int j = 0; j < m; ++j) {
        if (Q[j] <= 0.0) continue;
        bool reachable = false;
        for (int i : support) reachable = reachable || std::isfinite(cost(i, j));
        if (!reachable) {
            res.value = kInf;
            return res;
        }
    }

    Vec p_supp(ns);
    for (int i = 0; i < ns; ++i) p_supp[i] = P[support[i]];
    const double floor_z = domain_floor(D);

    auto cell_cost = [&](int i, int j) { return cost(support[i], j); };
    auto atom_lin = [&](const std::vector<int>& assign) {
        double lin = 0.0;
        for (int j = 0; j < m; ++j)
            if (Q[j] > 0.0) lin += Q[j] * cell_cost(assign[j], j);
        return lin;
    };
    auto atom_eta = [&](const std::vector<int>& assign) {
        Vec eta = Vec::Zero(ns);
        for (int j = 0; j < m; ++j)
            if (Q[j] > 0.0) eta[assign[j]] += Q[j];
        return eta;
    };

    std::vector<Atom> pool;
    std::map<std::vector<int>, int> pool_index;
    auto add_atom = [&](std::vector<int> assign, double weight) -> int {
        auto it = pool_index.find(assign);
        if (it != pool_index.end()) {
            pool[it->second].weight += weight;
            return it->second;
        }
        Atom a;
        a.lin = atom_lin(assign);
        a.eta = atom_eta(assign);
        a.weight = weight;
        const int idx = static_cast<int>(pool.size());
        pool_index[assign] = idx;
        a.assign = std::move(assign);
        pool.push_back(std::move(a));
        return idx;
    };

    // Seed the pool: a compatible warm start if one is supplied, otherwise
    // the product coupling P Q^T written as ns atoms (atom i routes every
    // column to support row i), whose row marginal is exactly P.
    bool seeded = false;
    if (warm && !warm->assignments.empty() &&
        warm->assignments.size() == warm->weights.size()) {
        double mass = 0.0;
        for (std::size_t k = 0; k < warm->assignments.size(); ++k) {
            const auto& assign = warm->assignments[k];
            if (static_cast<int>(assign.size()) != m || warm->weights[k] <= 0.0) continue;
            bool valid = true;
            for (int j = 0; j < m && valid; ++j)
                valid = assign[j] >= 0 && assign[j] < ns &&
                        (Q[j] <= 0.0 || std::isfinite(cell_cost(assign[j], j)));
            if (!valid) continue;
            add_atom(assign, warm->weights[k]);
            mass += warm->weights[k];
        }
        if (mass > 1e-12) {
            for (Atom& a : pool) a.weight /= mass;
            seeded = true;
        } else {
            pool.clear();
            pool_index.clear();
        }
    }
    if (!seeded) {
        for (int i = 0; i < ns; ++i) add_atom(std::vector<int>(m, i), p_supp[i]);
    }

    Vec eta = Vec::Zero(ns);
    double lin = 0.0;
    for (const Atom& a : pool) {
        eta += a.weight * a.eta;
        lin += a.weight * a.lin;
    }
    // A warm start whose ratios sit outside the f-domain (possible for a
    // beta-mixture) is discarded for the safe product initialization.
    if (seeded && floor_z > 0.0) {
        for (int i = 0; i < ns; ++i)
            if (eta[i] / p_supp[i] < floor_z) {
                pool.clear();
                pool_index.clear();
                for (int k = 0; k < ns; ++k) add_atom(std::vector<int>(m, k), p_supp[k]);
                eta = p_supp;
                lin = 0.0;
                for (const Atom& a : pool) lin += a.weight * a.lin;
                break;
            }
    }

    auto objective = [&](const Vec& et, double li) {
        double g = 0.0;
        for (int i = 0; i < ns; ++i) {
            double z = et[i] / p_supp[i];
            if (z < floor_z) {
                if (z < floor_z - 1e-9) return kInf;
                z = floor_z;  // clamp float dust at the domain edge
            }
            g += p_supp[i] * f_eval(D, z);
        }
        return g + li;
    };

    Vec grad_row(ns);
    Vec d_eta(ns);
    std::vector<int> fw(m);
    double gap = kInf;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        for (int i = 0; i < ns; ++i) grad_row[i] = f_prime(D, eta[i] / p_supp[i]);

        // Linear minimization oracle: each column independently routes its
        // mass to the cheapest row under grad_row[i] + c(i, j).
        double fw_score = 0.0;
        for (int j = 0; j < m; ++j) {
            int best = -1;
            double best_val = kInf;
            for (int i = 0; i < ns; ++i) {
                if (!std::isfinite(cell_cost(i, j))) continue;
                const double v = grad_row[i] + cell_cost(i, j);
                if (v < best_val) { best_val = v; best = i; }
            }
            if (best < 0) best = 0;  // only reachable when Q[j] == 0
            fw[j] = best;
            if (Q[j] > 0.0) fw_score += Q[j] * best_val;
        }

        double cur_score = lin;
        for (int i = 0; i < ns; ++i)
            if (eta[i] > 0.0) cur_score += eta[i] * grad_row[i];

        gap = cur_score - fw_score;
        if (gap <= opts.tol) break;

        // Away atom: active vertex with the largest gradient inner product.
        int away = -1;
        double away_score = -kInf;
        for (int k = 0; k < static_cast<int>(pool.size()); ++k) {
            if (pool[k].weight <= 0.0) continue;
            double s = pool[k].lin;
            for (int i = 0; i < ns; ++i)
                if (pool[k].eta[i] > 0.0) s += pool[k].eta[i] * grad_row[i];
            if (s > away_score) { away_score = s; away = k; }
        }
        assert(away >= 0);

        auto line_search = [&](const Vec& de, double d_lin, double t_up) {
            auto phi_prime = [&](double t) {
                double v = d_lin;
                for (int i = 0; i < ns; ++i) {
                    if (de[i] == 0.0) continue;
                    v += de[i] * f_prime(D, (eta[i] + t * de[i]) / p_supp[i]);
                }
                return v;
            };
            if (phi_prime(t_up) <= 0.0) return t_up;
            if (phi_prime(0.0) >= 0.0) return 0.0;
            double lo = 0.0, hi = t_up;
            for (int b = 0; b < 70; ++b) {
                const double mid = 0.5 * (lo + hi);
                (phi_prime(mid) <= 0.0 ? lo : hi) = mid;
                if (hi - lo <= 1e-16 * t_up) break;
            }
            return 0.5 * (lo + hi);
        };

        // Pairwise step from the away atom toward the FW atom, capped so the
        // likelihood ratios stay in the domain of f.
        const Vec eta_fw = atom_eta(fw);
        d_eta = eta_fw - pool[away].eta;
        double d_lin = atom_lin(fw) - pool[away].lin;
        double t_up = pool[away].weight;
        for (int i = 0; i < ns; ++i)
            if (d_eta[i] < 0.0) {
                const double room = eta[i] - floor_z * p_supp[i];
                t_up = std::min(t_up, std::max(room, 0.0) / (-d_eta[i]));
            }

        double t = t_up > 0.0 ? line_search(d_eta, d_lin, t_up) : 0.0;
        bool classic = false;
        if (t <= 0.0) {
            // Blocked pairwise move; fall back to a classic FW step, which
            // always makes progress while the gap is positive.
            d_eta = eta_fw - eta;
            d_lin = atom_lin(fw) - lin;
            t_up = 1.0;
            for (int i = 0; i < ns; ++i)
                if (d_eta[i] < 0.0) {
                    const double room = eta[i] - floor_z * p_supp[i];
                    t_up = std::min(t_up, std::max(room, 0.0) / (-d_eta[i]));
                }
            t = t_up > 0.0 ? line_search(d_eta, d_lin, t_up) : 0.0;
            classic = true;
            if (t <= 0.0) break;  // no feasible descent direction remains
        }

        eta += t * d_eta;
        eta = eta.cwiseMax(0.0);
        lin += t * d_lin;
        if (classic) {
            for (Atom& a : pool) a.weight *= (1.0 - t);
            add_atom(fw, t);
        } else {
            pool[away].weight = std::max(pool[away].weight - t, 0.0);
            add_atom(fw, t);
        }
    }

    res.iterations = iter;
    res.gap_estimate = std::max(gap, 0.0);
    res.converged = gap <= opts.tol;
    res.value = objective(eta, lin);
    res.eta_star.setZero();
    for (int i = 0; i < ns; ++i) res.eta_star[support[i]] = eta[i];
    for (const Atom& a : pool) {
        if (a.weight <= 0.0) continue;
        for (int j = 0; j < m; ++j)
            if (Q[j] > 0.0) res.plan(support[a.assign[j]], j) += a.weight * Q[j];
    }
    if (warm) {
        warm->assignments.clear();
        warm->weights.clear();
        for (const Atom& a : pool) {
            if (a.weight <= 1e-15) continue;
            warm->assignments.push_back(a.assign);
            warm->weights.push_back(a.weight);
        }
    }
    return res;
}

std::vector<std::pair<double, double>> dc_scan_r(const DivergenceSpec& D, const Mat& cost,
                                                 const Vec& P, const Vec& Q,
                                                 const std::vector<double>& r_ladder,
                                                 const DcOptions& opts) {
    for (std::size_t k = 0; k < r_ladder.size(); ++k) {
        if (!(r_ladder[k] > 0.0))
            throw std::invalid_argument("dc_scan_r: ladder entries must be > 0");
        if (k > 0 && r_ladder[k] < r_ladder[k - 1])
            throw std::invalid_argument("dc_scan_r: ladder must be sorted ascending");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(r_ladder.size());
    for (double r : r_ladder)
        out.emplace_back(r, dc_primal(D, scale_cost(cost, r), P, Q, opts).value);
    return out;
}

}  // namespace armor
