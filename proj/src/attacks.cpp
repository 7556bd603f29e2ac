#include "armor/attacks.hpp"

namespace armor {

namespace {

Vec ce_input_grad(const Mlp& net, const Vec& x, int y) {
    Vec grad;
    make_ce_loss(net, y)(x, &grad);
    if (!grad.allFinite()) throw std::runtime_error("attack: non-finite loss gradient");
    return grad;
}

Vec sign0(const Vec& v) {
    return v.unaryExpr([](double a) { return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

Vec fgsm(const Mlp& net, const Vec& x, int y, double eps, const Vec& box_lo,
         const Vec& box_hi) {
    Vec adv = x + eps * sign0(ce_input_grad(net, x, y));
    return adv.cwiseMax(box_lo).cwiseMin(box_hi);
}

Vec pgd(const Mlp& net, const Vec& x, int y, const AttackConfig& cfg, const Vec& box_lo,
        const Vec& box_hi) {
    cfg.validate();
    const Vec lo = (x.array() - cfg.eps).matrix().cwiseMax(box_lo);
    const Vec hi = (x.array() + cfg.eps).matrix().cwiseMin(box_hi);
    Vec adv = x;
    for (int k = 0; k < cfg.steps; ++k) {
        adv += cfg.step_size * sign0(ce_input_grad(net, adv, y));
        adv = adv.cwiseMax(lo).cwiseMin(hi);
    }
    return adv;
}

Vec rfgsm_binary(const Mlp& net, const Vec& x_bits, int y, int steps) {
    if (steps < 1) throw std::invalid_argument("rfgsm_binary: steps must be >= 1");
    Vec adv = x_bits;
    for (int k = 0; k < steps; ++k) {
        const Vec grad = ce_input_grad(net, adv, y);
        int best = -1;
        double best_grad = 0.0;
        for (Eigen::Index i = 0; i < adv.size(); ++i) {
            if (adv[i] != 0.0) continue;
            if (grad[i] > best_grad) {
                best_grad = grad[i];
                best = static_cast<int>(i);
            }
        }
        if (best < 0) break;  // no zero bit with a positive gradient remains
        adv[best] = 1.0;
    }
    return adv;
}

Mat attack_batch(const Mlp& net, const Mat& x, const std::vector<int>& y,
                 const AttackConfig& cfg, const Vec& box_lo, const Vec& box_hi) {
    cfg.validate();
    Mat out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Vec xi = x.row(r).transpose();
        switch (cfg.kind) {
            case AttackConfig::Kind::FGSM:
                out.row(r) = fgsm(net, xi, y[r], cfg.eps, box_lo, box_hi).transpose();
                break;
            case AttackConfig::Kind::PGD:
                out.row(r) = pgd(net, xi, y[r], cfg, box_lo, box_hi).transpose();
                break;
            case AttackConfig::Kind::RFGSM:
                out.row(r) = rfgsm_binary(net, xi, y[r], cfg.steps).transpose();
                break;
        }
    }
    return out;
}

}  // namespace armor
