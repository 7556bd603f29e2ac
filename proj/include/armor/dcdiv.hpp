#pragma once

#include "armor/transport.hpp"

namespace armor {

struct DcOptions {
    double tol = 1e-7;    // absolute duality-gap target on the objective
    int max_iter = 50000;
};

/// Reusable solver state: the active vertices of the coupling polytope
/// (a row assignment per column) and their weights. Passing the pool from a
/// nearby instance (e.g. the previous point of a grid scan) warm-starts the
/// Frank-Wolfe iteration; correctness never depends on it.
struct DcWarmStart {
    std::vector<std::vector<int>> assignments;  // row per column, support indices
    std::vector<double> weights;
};

struct DcResult {
    double value = 0.0;   // D^c(Q||P); +inf when Q is unreachable
    Vec eta_star;         // optimal intermediate distribution (row marginal)
    Mat plan;             // coupling between eta_star and Q
    int iterations = 0;
    double gap_estimate = 0.0;  // Frank-Wolfe gap upper-bounding suboptimality
    bool converged = true;
};

/// Exact primal OT-regularized divergence on finite spaces,
///
///   D^c(Q||P) = min over couplings pi with pi_2 = Q of
///               D_f(pi_1 || P) + <c, pi>,
///
/// a convex program in pi solved by pairwise Frank-Wolfe with exact line
/// search over the column-marginal-constrained coupling polytope. For KL and
/// alpha divergences the intermediate measure is restricted to supp(P)
/// (anything else has D_f = +inf). The indicator kind forces eta = P, so the
/// problem reduces to ot_cost(c, P, Q).
///
/// Returns +inf when some column of Q carries mass but has no finite-cost
/// route from supp(P).
DcResult dc_primal(const DivergenceSpec& D, const Mat& cost, const Vec& P, const Vec& Q,
                   const DcOptions& opts = {}, DcWarmStart* warm = nullptr);

/// D^{c_r}(Q||P) for each r in an ascending ladder of positive scales
/// (c_r = r c). D^{c_r} is non-decreasing and r^{-1} D^{c_r} non-increasing
/// in r.
std::vector<std::pair<double, double>> dc_scan_r(const DivergenceSpec& D, const Mat& cost,
                                                 const Vec& P, const Vec& Q,
                                                 const std::vector<double>& r_ladder,
                                                 const DcOptions& opts = {});

}  // namespace armor
