#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>

namespace armor {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when an operation is not defined for the given divergence kind
/// (e.g. pointwise f for the indicator divergence).
struct UnsupportedDivergenceOp : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class DivKind { KL, Alpha, Indicator, BetaMix };

/// An information divergence D together with its convex machinery.
///
/// Supported kinds:
///   KL         f(z) = z log z
///   Alpha      f(z) = (z^alpha - 1) / (alpha (alpha - 1)),  alpha > 1
///   Indicator  D(q||p) = 0 if q == p, +inf otherwise (no pointwise f)
///   BetaMix    f_beta(z) = beta f((z - 1 + beta) / beta) for a KL or Alpha
///              base and beta in (0, 1]; its conjugate is
///              f_beta*(z) = beta f*(z) + (1 - beta) z.
struct DivergenceSpec {
    DivKind kind = DivKind::KL;
    double alpha = 2.0;        // Alpha parameter (also of a BetaMix base)
    DivKind base = DivKind::KL;  // BetaMix base kind (KL or Alpha)
    double beta = 1.0;         // BetaMix mixing weight
    double indicator_tol = 1e-12;  // componentwise equality tolerance

    static DivergenceSpec kl() { return {DivKind::KL}; }
    static DivergenceSpec alpha_div(double a) {
        DivergenceSpec s;
        s.kind = DivKind::Alpha;
        s.alpha = a;
        s.validate();
        return s;
    }
    static DivergenceSpec indicator(double tol = 1e-12) {
        DivergenceSpec s;
        s.kind = DivKind::Indicator;
        s.indicator_tol = tol;
        return s;
    }
    static DivergenceSpec beta_mix(const DivergenceSpec& base_spec, double beta_val) {
        DivergenceSpec s;
        s.kind = DivKind::BetaMix;
        s.base = base_spec.kind;
        s.alpha = base_spec.alpha;
        s.beta = beta_val;
        s.validate();
        return s;
    }

    void validate() const;

    bool is_kl_family() const {
        return kind == DivKind::KL || (kind == DivKind::BetaMix && base == DivKind::KL);
    }
};

/// f(z), extended-real valued. +inf outside the domain; values at domain
/// boundaries are the continuous extensions (f_KL(0) = 0,
/// f_alpha(0) = -1/(alpha(alpha-1))). Throws for the indicator kind.
double f_eval(const DivergenceSpec& spec, double z);

/// Legendre transform f*(z) = sup_x { z x - f(x) }. Defined here for Alpha
/// and BetaMix only; the KL and indicator duals are handled by closed forms
/// in the DRO solver. (A BetaMix over KL uses f_KL*(z) = exp(z - 1).)
double f_star(const DivergenceSpec& spec, double z);

/// Derivative of f*. At the kink (z = 0 for Alpha) returns the right
/// derivative, which is 0, so sample weights are continuous from below.
/// BetaMix: beta (f*)'(z) + (1 - beta), bounded below by 1 - beta.
double f_star_prime(const DivergenceSpec& spec, double z);

/// f-divergence between finite distributions, D_f(q||p) = sum_i p_i f(q_i/p_i),
/// with the conventions 0 f(0/0) := 0 and +inf when q_i > 0 while p_i = 0
/// (these f have f'(inf) = inf, so absolute continuity is required).
/// Indicator kind: 0 iff q == p componentwise within spec.indicator_tol.
double d_f(const DivergenceSpec& spec, const Vec& q, const Vec& p);

}  // namespace armor
