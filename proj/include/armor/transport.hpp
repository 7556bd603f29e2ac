#pragma once

#include "armor/fdiv.hpp"

#include <vector>

namespace armor {

enum class Norm { L1, L2, LInf };

/// ||v|| for the chosen vector norm.
double norm_eval(Norm norm, const Vec& v);

/// Subgradient of v -> ||v||^q at v, with the tie-breaking conventions used
/// throughout: sign(0) := 0 for l1, lowest-index max coordinate for linf,
/// and 0 at v = 0 (where the map is non-differentiable for q <= 1).
Vec norm_pow_grad(Norm norm, double q, const Vec& v);

/// Throws unless v is a probability vector (nonnegative, sums to 1 within tol).
void validate_prob(const Vec& v, double tol = 1e-9);

/// Throws unless the coupling has the prescribed marginals within tol.
void validate_coupling(const Mat& plan, const Vec& mu, const Vec& nu, double tol = 1e-8);

/// <cost, plan> with the convention 0 * inf := 0, so zero mass on an
/// infinite-cost cell does not poison the sum.
double plan_cost(const Mat& cost, const Mat& plan);

struct OtResult {
    double value = 0.0;  // +inf when no finite-cost coupling exists
    Mat plan;            // feasible coupling; optimal when value is finite
};

/// Exact optimal-transport cost between finite distributions,
///   C(mu, nu) = min { <c, pi> : pi >= 0, pi 1 = mu, pi^T 1 = nu },
/// solved with a two-phase transportation simplex. Entries of `cost` may be
/// +inf (forbidden routes); the value is +inf iff every feasible coupling
/// places mass on a forbidden cell.
OtResult ot_cost(const Mat& cost, const Vec& mu, const Vec& nu);

/// OT between label-probability vectors under the cost 1_{i != j}, which has
/// the closed form 1 - sum_i min(p_i, pt_i).
double label_ot(const Vec& p, const Vec& pt);

/// Cost on samples: entry(i,j) = L ||x_i - y_j||^q when labels agree,
/// +inf otherwise (labels are never transported).
struct SampleCostSpec {
    double L = 1.0;   // weight of the transport cost relative to D
    double q = 2.0;   // norm power
    Norm norm = Norm::L2;

    void validate() const {
        if (!(L > 0.0)) throw std::invalid_argument("SampleCostSpec: L must be > 0");
        if (!(q > 0.0)) throw std::invalid_argument("SampleCostSpec: q must be > 0");
    }
};

/// Label-perturbation cost parameters: K g_delta(OT(p, pt)). delta <= 1/2
/// keeps the predicted class unchanged.
struct LabelCostSpec {
    double K = 1.0;
    double delta = 0.1;

    void validate() const {
        if (!(K > 0.0)) throw std::invalid_argument("LabelCostSpec: K must be > 0");
        if (!(delta > 0.0 && delta <= 0.5))
            throw std::invalid_argument("LabelCostSpec: delta must be in (0, 1/2]");
    }
};

/// Barrier g_delta(z) = z / (1 - z/delta) on [0, delta), extended by +inf on
/// [delta, inf). Increasing, g_delta(0) = 0, blows up as z -> delta^-.
double g_delta(const LabelCostSpec& spec, double z);
double g_delta(double delta, double z);

/// Indicator ball cost: 0 if d(x,y) <= radius else +inf. Ties (d == radius)
/// count as inside the ball.
struct BallCostSpec {
    double radius = 0.0;
    Norm metric = Norm::L2;

    void validate() const {
        if (!(radius >= 0.0))
            throw std::invalid_argument("BallCostSpec: radius must be >= 0");
    }
};

/// Rows of xs/ys are points. labels_equal(i,j) gates the finite entries.
Mat build_sample_cost(const SampleCostSpec& spec, const Mat& xs, const Mat& ys,
                      const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& labels_equal);

/// Convenience overload taking per-point class labels.
Mat build_sample_cost(const SampleCostSpec& spec, const Mat& xs, const Mat& ys,
                      const std::vector<int>& xl, const std::vector<int>& yl);

Mat build_ball_cost(const BallCostSpec& spec, const Mat& xs, const Mat& ys);

/// c_r = r c. Scales finite entries; +inf stays +inf (r > 0).
Mat scale_cost(const Mat& cost, double r);

}  // namespace armor
