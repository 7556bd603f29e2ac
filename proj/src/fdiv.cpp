#include "armor/fdiv.hpp"

#include <cmath>

namespace armor {

void DivergenceSpec::validate() const {
    if (kind == DivKind::Alpha && !(alpha > 1.0))
        throw std::invalid_argument("alpha-divergence requires alpha > 1");
    if (kind == DivKind::BetaMix) {
        if (!(beta > 0.0 && beta <= 1.0))
            throw std::invalid_argument("beta-mixture requires beta in (0, 1]");
        if (base == DivKind::Indicator || base == DivKind::BetaMix)
            throw std::invalid_argument("beta-mixture base must be KL or Alpha");
        if (base == DivKind::Alpha && !(alpha > 1.0))
            throw std::invalid_argument("alpha-divergence requires alpha > 1");
    }
}

namespace {

double f_kl(double z) {
    if (z < 0.0) return kInf;
    if (z == 0.0) return 0.0;  // z log z -> 0
    return z * std::log(z);
}

double f_alpha(double alpha, double z) {
    if (z < 0.0) return kInf;
    return (std::pow(z, alpha) - 1.0) / (alpha * (alpha - 1.0));
}

// f_KL*(z) = exp(z - 1), attained at x = exp(z - 1).
double f_star_kl(double z) { return std::exp(z - 1.0); }
double f_star_prime_kl(double z) { return std::exp(z - 1.0); }

double f_star_alpha(double alpha, double z) {
    const double zp = std::max(z, 0.0);
    const double e = alpha / (alpha - 1.0);
    return std::pow(alpha - 1.0, e) / alpha * std::pow(zp, e) +
           1.0 / (alpha * (alpha - 1.0));
}

double f_star_prime_alpha(double alpha, double z) {
    if (z <= 0.0) return 0.0;
    const double e = 1.0 / (alpha - 1.0);
    return std::pow(alpha - 1.0, e) * std::pow(z, e);
}

double base_f_eval(const DivergenceSpec& spec, DivKind base, double z) {
    return base == DivKind::KL ? f_kl(z) : f_alpha(spec.alpha, z);
}

}  // namespace

double f_eval(const DivergenceSpec& spec, double z) {
    spec.validate();
    switch (spec.kind) {
        case DivKind::KL:
            return f_kl(z);
        case DivKind::Alpha:
            return f_alpha(spec.alpha, z);
        case DivKind::BetaMix:
            return spec.beta * base_f_eval(spec, spec.base, (z - 1.0 + spec.beta) / spec.beta);
        case DivKind::Indicator:
            throw UnsupportedDivergenceOp("indicator divergence has no pointwise f");
    }
    return kInf;
}

double f_star(const DivergenceSpec& spec, double z) {
    spec.validate();
    switch (spec.kind) {
        case DivKind::Alpha:
            return f_star_alpha(spec.alpha, z);
        case DivKind::BetaMix: {
            const double base_star = spec.base == DivKind::KL
                                         ? f_star_kl(z)
                                         : f_star_alpha(spec.alpha, z);
            return spec.beta * base_star + (1.0 - spec.beta) * z;
        }
        case DivKind::KL:
        case DivKind::Indicator:
            throw UnsupportedDivergenceOp(
                "f* is only evaluated pointwise for Alpha/BetaMix kinds");
    }
    return kInf;
}

double f_star_prime(const DivergenceSpec& spec, double z) {
    spec.validate();
    switch (spec.kind) {
        case DivKind::Alpha:
            return f_star_prime_alpha(spec.alpha, z);
        case DivKind::BetaMix: {
            const double base_prime = spec.base == DivKind::KL
                                          ? f_star_prime_kl(z)
                                          : f_star_prime_alpha(spec.alpha, z);
            return spec.beta * base_prime + (1.0 - spec.beta);
        }
        case DivKind::KL:
        case DivKind::Indicator:
            throw UnsupportedDivergenceOp(
                "(f*)' is only evaluated pointwise for Alpha/BetaMix kinds");
    }
    return 0.0;
}

double d_f(const DivergenceSpec& spec, const Vec& q, const Vec& p) {
    spec.validate();
    if (q.size() != p.size())
        throw std::invalid_argument("d_f: q and p must have the same length");

    if (spec.kind == DivKind::Indicator) {
        for (Eigen::Index i = 0; i < q.size(); ++i)
            if (std::abs(q[i] - p[i]) > spec.indicator_tol) return kInf;
        return 0.0;
    }

    double total = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (p[i] <= 0.0) {
            if (q[i] > 0.0) return kInf;  // q not absolutely continuous w.r.t. p
            continue;                     // 0 f(0/0) := 0
        }
        const double term = f_eval(spec, q[i] / p[i]);
        if (!std::isfinite(term)) return kInf;
        total += p[i] * term;
    }
    return total;
}

}  // namespace armor
