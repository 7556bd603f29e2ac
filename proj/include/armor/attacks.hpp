#pragma once

#include "armor/innermax.hpp"

namespace armor {

/// White-box evaluation attacks. The norm is linf throughout.
struct AttackConfig {
    enum class Kind { FGSM, PGD, RFGSM };
    Kind kind = Kind::FGSM;
    double eps = 0.1;       // attack radius (unused by RFGSM)
    int steps = 1;          // iterations for PGD / rFGSM
    double step_size = 0.01;

    void validate() const {
        if (kind != Kind::RFGSM && !(eps > 0.0))
            throw std::invalid_argument("AttackConfig: eps must be > 0");
        if (steps < 1) throw std::invalid_argument("AttackConfig: steps must be >= 1");
        if (kind == Kind::PGD && !(step_size > 0.0))
            throw std::invalid_argument("AttackConfig: step_size must be > 0");
    }
};

/// x + eps sign(grad CE), clamped to the data box. Zero-gradient coordinates
/// do not move.
Vec fgsm(const Mlp& net, const Vec& x, int y, double eps, const Vec& box_lo, const Vec& box_hi);

/// k sign steps of size step_size, each projected onto the linf ball of
/// radius eps around x and the data box. Deterministic start at x (no random
/// restart).
Vec pgd(const Mlp& net, const Vec& x, int y, const AttackConfig& cfg, const Vec& box_lo,
        const Vec& box_hi);

/// Binary-domain analogue of rFGSM: per round, flip the currently-zero bit
/// with the largest positive loss gradient (never 1 -> 0).
Vec rfgsm_binary(const Mlp& net, const Vec& x_bits, int y, int steps);

/// Applies cfg to every row of x.
Mat attack_batch(const Mlp& net, const Mat& x, const std::vector<int>& y,
                 const AttackConfig& cfg, const Vec& box_lo, const Vec& box_hi);

}  // namespace armor
