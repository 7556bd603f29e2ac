#pragma once

#include "armor/dcdiv.hpp"

#include <optional>

namespace armor {

/// Training-style objective variants. `nat` mixes the natural-sample loss in
/// with weight t; `asym` robustifies only the samples flagged in
/// robust_mask (weight s on that component); `asym_nat` does both, splitting
/// first and mixing natural samples second.
struct DroVariant {
    enum class Kind { Plain, Nat, Asym, AsymNat };
    Kind kind = Kind::Plain;
    double t = 0.5;                     // weight of natural samples
    double s = 0.5;                     // weight of the robustified component
    std::vector<uint8_t> robust_mask;   // per sample; 1 = robustified

    static DroVariant plain() { return {}; }
    static DroVariant nat(double t);
    static DroVariant asym(double s, std::vector<uint8_t> mask);
    static DroVariant asym_nat(double s, double t, std::vector<uint8_t> mask);
};

/// A finite DRO instance: baseline distribution over n sample points, losses
/// over m >= n candidate points, an n x m transport cost (possibly +inf), a
/// divergence, neighborhood size epsilon and penalty weight kappa. For the
/// nat/asym variants the first n candidates must be the samples themselves
/// (the natural loss of sample i is loss[i]).
struct DroProblem {
    Vec baseline;
    Vec loss;
    Mat cost;
    DivergenceSpec divergence;
    double epsilon = 0.1;
    double kappa = 0.0;
    DroVariant variant;

    void validate() const;
};

struct CTransform {
    Vec values;               // values[i] = max_j { loss[j]/lambda - cost(i,j) }
    std::vector<int> argmax;  // ties broken toward the lowest index
};

/// The c-transform of the loss at scale lambda, evaluated exactly over the
/// finite candidate set. Throws when a row has no finite-cost candidate.
CTransform ctransform_exact(const Vec& loss, const Mat& cost, double lambda);

/// The dual objective at (lambda, rho), with the c-transform recomputed at
/// scale lambda + kappa:
///   Alpha/BetaMix: eps lambda + rho + (lambda+kappa) E_P[f*(L^c - rho/(lambda+kappa))]
///   KL:            eps lambda + (lambda+kappa) log E_P[exp(L^c)]   (stable form)
///   Indicator:     eps lambda + (lambda+kappa) E_P[L^c]
/// rho must be present exactly for Alpha/BetaMix. Variants wrap the robust
/// core affinely with the natural-sample terms.
double outer_objective(const DroProblem& problem, double lambda, std::optional<double> rho);

struct TraceEntry {
    double lambda;
    double rho;
    double value;
};

struct DualSolution {
    double lambda_star = 0.0;
    std::optional<double> rho_star;  // present for Alpha/BetaMix
    double value = 0.0;
    Vec ctransform;                  // L^c at scale lambda* + kappa
    std::vector<int> argmax;         // adversarial point index per sample
    Vec weights;                     // adversarial sample weights p_i
    bool lambda_at_lower = false;    // infimum approached at the search box edge
    bool lambda_at_upper = false;
    std::vector<TraceEntry> trace;
};

struct SolveOptions {
    double lambda_min = 1e-6;
    double lambda_max = 1e6;
    double convexity_tol = 1e-9;
};

/// Minimizes the dual objective, which is jointly convex in (lambda, rho):
/// golden section over lambda with, per lambda, an exact rho solve (analytic
/// for the KL family, bisection on the monotone weight-sum condition
/// E_P[(f*)'(L^c - rho/(lambda+kappa))] = 1 otherwise). Weights are
/// p_i = P_i (f*)'(L^c_i - rho*/(lambda*+kappa)) at the argmax points; for KL
/// they are the softmax weights P_i e^{L^c_i} / sum_k P_k e^{L^c_k}, and for
/// the indicator kind the baseline itself. Boundary hits are reported, and a
/// quasiconvexity violation in the evaluation trace raises an internal error.
DualSolution solve_outer(const DroProblem& problem, const SolveOptions& opts = {});

struct PrimalBracket {
    double value = 0.0;   // best feasible objective found
    double lower = 0.0;   // certified by the best feasible grid point
    double upper = 0.0;   // heuristic bracket from the final refinement stage
    Vec q_best;
};

/// Brute-force primal oracle on candidate spaces with at most 3 points:
/// grids the simplex of Q at `grid_step`, keeps points with
/// dc_primal(D, c, P, Q) <= epsilon, and maximizes E_Q[loss] - kappa D^c,
/// then refines the grid around the best point (the objective is concave in
/// Q, so local refinement is global).
PrimalBracket bruteforce_primal(const DroProblem& problem, double grid_step);

}  // namespace armor
