#include "armor/dro.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

namespace armor {

DroVariant DroVariant::nat(double t) {
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("nat variant requires t in (0,1)");
    DroVariant v;
    v.kind = Kind::Nat;
    v.t = t;
    return v;
}

DroVariant DroVariant::asym(double s, std::vector<uint8_t> mask) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("asym variant requires s in (0,1)");
    DroVariant v;
    v.kind = Kind::Asym;
    v.s = s;
    v.robust_mask = std::move(mask);
    return v;
}

DroVariant DroVariant::asym_nat(double s, double t, std::vector<uint8_t> mask) {
    DroVariant v = asym(s, std::move(mask));
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("asym_nat variant requires t in (0,1)");
    v.kind = Kind::AsymNat;
    v.t = t;
    return v;
}

void DroProblem::validate() const {
    divergence.validate();
    validate_prob(baseline);
    if (cost.rows() != baseline.size() || cost.cols() != loss.size())
        throw std::invalid_argument("DroProblem: cost must be samples x candidates");
    if (!(epsilon > 0.0)) throw std::invalid_argument("DroProblem: epsilon must be > 0");
    if (!(kappa >= 0.0)) throw std::invalid_argument("DroProblem: kappa must be >= 0");
    if (variant.kind != DroVariant::Kind::Plain) {
        if (loss.size() < baseline.size())
            throw std::invalid_argument(
                "DroProblem: nat/asym variants need the samples among the candidates "
                "(loss[i] is the natural loss of sample i)");
    }
    if (variant.kind == DroVariant::Kind::Asym ||
        variant.kind == DroVariant::Kind::AsymNat) {
        if (static_cast<Eigen::Index>(variant.robust_mask.size()) != baseline.size())
            throw std::invalid_argument("DroProblem: robust_mask must cover all samples");
        bool any0 = false, any1 = false;
        for (uint8_t b : variant.robust_mask) (b ? any1 : any0) = true;
        if (!any0 || !any1)
            throw std::invalid_argument("DroProblem: robust_mask must partition the samples");
    }
}

CTransform ctransform_exact(const Vec& loss, const Mat& cost, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("ctransform: lambda must be > 0");
    const Eigen::Index n = cost.rows();
    if (cost.cols() != loss.size())
        throw std::invalid_argument("ctransform: cost columns must match the loss vector");

    CTransform ct;
    ct.values.resize(n);
    ct.argmax.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = -kInf;
        int arg = -1;
        for (Eigen::Index j = 0; j < loss.size(); ++j) {
            if (!std::isfinite(cost(i, j))) continue;
            const double v = loss[j] / lambda - cost(i, j);
            if (v > best) { best = v; arg = static_cast<int>(j); }
        }
        if (arg < 0) {
            std::ostringstream msg;
            msg << "ctransform: sample row " << i << " has no finite-cost candidate";
            throw std::invalid_argument(msg.str());
        }
        ct.values[i] = best;
        ct.argmax[i] = arg;
    }
    return ct;
}

namespace {

// log E_P[exp(v)] computed in the max-shifted form.
double log_mean_exp(const Vec& p, const Vec& v) {
    const double shift = v.maxCoeff();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (p[i] > 0.0) acc += p[i] * std::exp(v[i] - shift);
    return shift + std::log(acc);
}

// The robust core: the plain dual objective for a (sub)problem with baseline
// p, losses and cost rows already restricted.
struct RobustCore {
    const Vec& p;
    const Vec& loss;
    const Mat& cost;
    const DivergenceSpec& div;
    double epsilon;
    double kappa;

    bool needs_rho() const {
        return div.kind == DivKind::Alpha || div.kind == DivKind::BetaMix;
    }

    // Optimal rho at this lambda (only for kinds that carry one). The
    // weight-sum condition E_P[(f*)'(L^c - rho/s)] = 1 has a monotone
    // left-hand side in rho; analytic for a KL-base mixture, bisection for
    // alpha kinds. s = lambda + kappa.
    double solve_rho(double s, const Vec& lc) const {
        if (div.is_kl_family()) {
            // E_P[beta e^{L^c - rho/s - 1}] + (1-beta) = 1  =>
            // rho/s = log E_P[e^{L^c}] - 1.
            return s * (log_mean_exp(p, lc) - 1.0);
        }
        auto weight_sum = [&](double rho) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < lc.size(); ++i)
                if (p[i] > 0.0) acc += p[i] * f_star_prime(div, lc[i] - rho / s);
            return acc;
        };
        // Bracket: at rho = s * max(L^c) all arguments are <= 0, where
        // (f*)' <= 1 - beta < 1; grow the lower end until the sum exceeds 1.
        double hi = s * lc.maxCoeff();
        double width = std::max(1.0, std::abs(hi));
        double lo = hi - width;
        for (int g = 0; g < 200 && weight_sum(lo) < 1.0; ++g) {
            width *= 2.0;
            lo = hi - width;
        }
        for (int b = 0; b < 200; ++b) {
            const double mid = 0.5 * (lo + hi);
            (weight_sum(mid) >= 1.0 ? lo : hi) = mid;
            if (hi - lo < 1e-13 * (1.0 + std::abs(hi))) break;
        }
        return 0.5 * (lo + hi);
    }

    double objective(double lambda, std::optional<double> rho, const Vec& lc) const {
        const double s = lambda + kappa;
        switch (div.kind) {
            case DivKind::KL:
                return epsilon * lambda + s * log_mean_exp(p, lc);
            case DivKind::Indicator:
                return epsilon * lambda + s * p.dot(lc);
            case DivKind::Alpha:
            case DivKind::BetaMix: {
                if (!rho)
                    throw std::invalid_argument("outer objective: rho required for f* kinds");
                double acc = 0.0;
                for (Eigen::Index i = 0; i < lc.size(); ++i)
                    if (p[i] > 0.0) acc += p[i] * f_star(div, lc[i] - *rho / s);
                return epsilon * lambda + *rho + s * acc;
            }
        }
        return kInf;
    }

    // Objective minimized over rho at this lambda; returns the rho used.
    double reduced(double lambda, std::optional<double>* rho_out) const {
        const double s = lambda + kappa;
        const CTransform ct = ctransform_exact(loss, cost, s);
        std::optional<double> rho;
        if (needs_rho() && !div.is_kl_family()) rho = solve_rho(s, ct.values);
        if (rho_out) *rho_out = rho;
        return objective(lambda, rho, ct.values);
    }
};

struct VariantWrap {
    double robust_weight = 1.0;  // coefficient on the robust core
    double nat_term = 0.0;       // constant natural-sample contribution
    Vec sub_baseline;            // baseline of the robust core's samples
    Mat sub_cost;
    std::vector<int> sub_rows;   // original sample index per core row
};

VariantWrap build_wrap(const DroProblem& pr) {
    VariantWrap w;
    const Eigen::Index n = pr.baseline.size();
    switch (pr.variant.kind) {
        case DroVariant::Kind::Plain:
            w.sub_baseline = pr.baseline;
            w.sub_cost = pr.cost;
            for (Eigen::Index i = 0; i < n; ++i) w.sub_rows.push_back(static_cast<int>(i));
            return w;
        case DroVariant::Kind::Nat: {
            const double t = pr.variant.t;
            double nat = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) nat += pr.baseline[i] * pr.loss[i];
            w.nat_term = t * nat;
            w.robust_weight = 1.0 - t;
            w.sub_baseline = pr.baseline;
            w.sub_cost = pr.cost;
            for (Eigen::Index i = 0; i < n; ++i) w.sub_rows.push_back(static_cast<int>(i));
            return w;
        }
        case DroVariant::Kind::Asym:
        case DroVariant::Kind::AsymNat: {
            const double s = pr.variant.s;
            double mass0 = 0.0, mass1 = 0.0, nat0 = 0.0, nat1 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (pr.variant.robust_mask[i]) {
                    mass1 += pr.baseline[i];
                    nat1 += pr.baseline[i] * pr.loss[i];
                    w.sub_rows.push_back(static_cast<int>(i));
                } else {
                    mass0 += pr.baseline[i];
                    nat0 += pr.baseline[i] * pr.loss[i];
                }
            }
            if (mass1 <= 0.0 || mass0 <= 0.0)
                throw std::invalid_argument("asym variant: both partition components need mass");
            w.sub_baseline.resize(static_cast<Eigen::Index>(w.sub_rows.size()));
            w.sub_cost.resize(static_cast<Eigen::Index>(w.sub_rows.size()), pr.cost.cols());
            for (std::size_t k = 0; k < w.sub_rows.size(); ++k) {
                w.sub_baseline[static_cast<Eigen::Index>(k)] = pr.baseline[w.sub_rows[k]] / mass1;
                w.sub_cost.row(static_cast<Eigen::Index>(k)) = pr.cost.row(w.sub_rows[k]);
            }
            w.nat_term = (1.0 - s) * (nat0 / mass0);
            if (pr.variant.kind == DroVariant::Kind::AsymNat) {
                w.nat_term += pr.variant.t * s * (nat1 / mass1);
                w.robust_weight = (1.0 - pr.variant.t) * s;
            } else {
                w.robust_weight = s;
            }
            return w;
        }
    }
    return w;
}

}  // namespace

double outer_objective(const DroProblem& problem, double lambda, std::optional<double> rho) {
    problem.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("outer_objective: lambda must be > 0");
    const VariantWrap w = build_wrap(problem);
    RobustCore core{w.sub_baseline, problem.loss, w.sub_cost,
                    problem.divergence, problem.epsilon, problem.kappa};
    const bool wants_rho = core.needs_rho();
    if (wants_rho != rho.has_value())
        throw std::invalid_argument(wants_rho
                                        ? "outer_objective: rho required for Alpha/BetaMix"
                                        : "outer_objective: rho is only meaningful for Alpha/BetaMix");
    const CTransform ct = ctransform_exact(problem.loss, w.sub_cost, lambda + problem.kappa);
    return w.nat_term + w.robust_weight * core.objective(lambda, rho, ct.values);
}

DualSolution solve_outer(const DroProblem& problem, const SolveOptions& opts) {
    problem.validate();
    const VariantWrap w = build_wrap(problem);
    RobustCore core{w.sub_baseline, problem.loss, w.sub_cost,
                    problem.divergence, problem.epsilon, problem.kappa};

    DualSolution sol;
    auto eval = [&](double lambda) {
        std::optional<double> rho;
        const double v = w.nat_term + w.robust_weight * core.reduced(lambda, &rho);
        sol.trace.push_back({lambda, rho.value_or(0.0), v});
        return v;
    };

    // Golden section over the convex reduced objective g(lambda).
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = opts.lambda_min, b = opts.lambda_max;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > 1e-12 * std::max(1.0, std::abs(a))) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = eval(x2);
        }
        if (b - a < 1e-15) break;
    }
    double lambda_star = 0.5 * (a + b);
    // The infimum may be approached at the box edge (e.g. constant losses push
    // lambda -> 0+); keep the edge value when it dominates.
    const double f_mid = eval(lambda_star);
    const double f_lo = eval(opts.lambda_min);
    const double f_hi = eval(opts.lambda_max);
    if (f_lo <= f_mid && f_lo <= f_hi) {
        lambda_star = opts.lambda_min;
    } else if (f_hi < f_mid) {
        lambda_star = opts.lambda_max;
    }
    sol.lambda_at_lower = lambda_star <= opts.lambda_min * (1.0 + 1e-9);
    sol.lambda_at_upper = lambda_star >= opts.lambda_max * (1.0 - 1e-9);

    // Corollary-level convexity makes the reduced objective unimodal; a
    // rise-fall-rise pattern in the trace means something is broken.
    {
        std::vector<TraceEntry> byl = sol.trace;
        std::sort(byl.begin(), byl.end(),
                  [](const TraceEntry& u, const TraceEntry& v) { return u.lambda < v.lambda; });
        double run_min_left = kInf;
        std::vector<double> min_right(byl.size());
        double rm = kInf;
        for (std::size_t i = byl.size(); i-- > 0;) {
            rm = std::min(rm, byl[i].value);
            min_right[i] = rm;
        }
        for (std::size_t i = 0; i < byl.size(); ++i) {
            const double tol = opts.convexity_tol * (1.0 + std::abs(byl[i].value));
            if (byl[i].value > run_min_left + tol && byl[i].value > min_right[i] + tol)
                throw std::runtime_error(
                    "solve_outer: objective trace violates convexity (internal error)");
            run_min_left = std::min(run_min_left, byl[i].value);
        }
    }

    const double s = lambda_star + problem.kappa;
    const CTransform ct = ctransform_exact(problem.loss, w.sub_cost, s);
    std::optional<double> rho;
    if (core.needs_rho()) rho = core.solve_rho(s, ct.values);

    sol.lambda_star = lambda_star;
    sol.rho_star = core.needs_rho() ? rho : std::nullopt;
    sol.value = w.nat_term + w.robust_weight * core.objective(lambda_star, sol.rho_star, ct.values);
    sol.ctransform = ct.values;
    sol.argmax = ct.argmax;

    // Adversarial sample weights over the robust component (Plain/Nat: all
    // samples). KL: softmax of L^c under the baseline; Indicator: no
    // reweighting; otherwise p_i = P_i (f*)'(L^c_i - rho*/s).
    const Eigen::Index nr = w.sub_baseline.size();
    sol.weights.resize(nr);
    switch (problem.divergence.kind) {
        case DivKind::KL: {
            const double lse = log_mean_exp(w.sub_baseline, ct.values);
            for (Eigen::Index i = 0; i < nr; ++i)
                sol.weights[i] = w.sub_baseline[i] > 0.0
                                     ? w.sub_baseline[i] * std::exp(ct.values[i] - lse)
                                     : 0.0;
            break;
        }
        case DivKind::Indicator:
            sol.weights = w.sub_baseline;
            break;
        case DivKind::Alpha:
        case DivKind::BetaMix:
            for (Eigen::Index i = 0; i < nr; ++i)
                sol.weights[i] =
                    w.sub_baseline[i] * f_star_prime(problem.divergence, ct.values[i] - *rho / s);
            break;
    }
    return sol;
}

PrimalBracket bruteforce_primal(const DroProblem& problem, double grid_step) {
    problem.validate();
    if (problem.loss.size() > 3)
        throw std::invalid_argument("bruteforce_primal: candidate space limited to 3 points");
    if (!(grid_step > 0.0 && grid_step <= 1e-2 + 1e-15))
        throw std::invalid_argument("bruteforce_primal: grid_step must be in (0, 1e-2]");

    const VariantWrap w = build_wrap(problem);
    const Eigen::Index m = problem.loss.size();
    DcOptions dc_opts;
    dc_opts.tol = 5e-8;
    DcWarmStart warm;  // carried between neighboring grid points

    auto robust_objective = [&](const Vec& q, bool* feasible) {
        const DcResult dc =
            dc_primal(problem.divergence, w.sub_cost, w.sub_baseline, q, dc_opts, &warm);
        if (!(dc.value <= problem.epsilon + 1e-9)) {
            *feasible = false;
            return -kInf;
        }
        *feasible = true;
        return q.dot(problem.loss) - problem.kappa * dc.value;
    };

    struct Best {
        double value = -kInf;
        Vec q;
    } best;

    auto scan = [&](const Vec& lo, const Vec& hi, double step) {
        // Enumerate simplex points with q_j in [lo_j, hi_j] on a grid of
        // pitch `step`; the last coordinate absorbs the remainder.
        const auto steps = [&](Eigen::Index j) {
            return static_cast<int>(std::floor((hi[j] - lo[j]) / step + 1e-9));
        };
        Vec q(m);
        if (m == 1) {
            q[0] = 1.0;
            bool ok;
            const double v = robust_objective(q, &ok);
            if (ok && v > best.value) { best.value = v; best.q = q; }
            return;
        }
        for (int k0 = 0; k0 <= steps(0); ++k0) {
            q[0] = lo[0] + k0 * step;
            if (m == 2) {
                q[1] = 1.0 - q[0];
                if (q[1] < -1e-12 || q[1] < lo[1] - step || q[1] > hi[1] + step) continue;
                q[1] = std::max(q[1], 0.0);
                bool ok;
                const double v = robust_objective(q, &ok);
                if (ok && v > best.value) { best.value = v; best.q = q; }
                continue;
            }
            for (int k1 = 0; k1 <= steps(1); ++k1) {
                q[1] = lo[1] + k1 * step;
                q[2] = 1.0 - q[0] - q[1];
                if (q[2] < -1e-12 || q[2] < lo[2] - step || q[2] > hi[2] + step) continue;
                q[2] = std::max(q[2], 0.0);
                bool ok;
                const double v = robust_objective(q, &ok);
                if (ok && v > best.value) { best.value = v; best.q = q; }
            }
        }
    };

    // Stage 0: the full simplex at the requested pitch; then zoom around the
    // incumbent. Concavity of Q -> E_Q[loss] - kappa D^c over the convex
    // feasible set makes the local refinements globally valid.
    scan(Vec::Zero(m), Vec::Ones(m), grid_step);
    if (!std::isfinite(best.value)) {
        // epsilon >= 0 always admits Q = P when the samples are among the
        // candidates, but an arbitrary candidate grid may still start empty;
        // report the infeasible scan honestly.
        PrimalBracket out;
        out.value = -kInf;
        out.lower = -kInf;
        out.upper = -kInf;
        return out;
    }

    double step = grid_step;
    double prev = best.value;
    double last_gain = 0.0;
    for (int stage = 0; stage < 3; ++stage) {
        const double radius = 3.0 * step;
        step /= 8.0;
        Vec lo = (best.q.array() - radius).cwiseMax(0.0).matrix();
        Vec hi = (best.q.array() + radius).cwiseMin(1.0).matrix();
        scan(lo, hi, step);
        last_gain = best.value - prev;
        prev = best.value;
    }

    PrimalBracket out;
    out.value = best.value;
    out.lower = best.value;
    const double loss_range = problem.loss.maxCoeff() - problem.loss.minCoeff();
    out.upper = best.value + last_gain + loss_range * step * static_cast<double>(m);
    out.q_best = best.q;
    out.value = w.nat_term + w.robust_weight * out.value;
    out.lower = w.nat_term + w.robust_weight * out.lower;
    out.upper = w.nat_term + w.robust_weight * out.upper;
    return out;
}

}  // namespace armor
