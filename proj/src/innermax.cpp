#include "armor/innermax.hpp"

#include <cmath>
#include <sstream>

namespace armor {

void InnerConfig::validate(Eigen::Index dim) const {
    if (M < 0) throw std::invalid_argument("InnerConfig: M must be >= 0");
    if (!(lr_x > 0.0) || !(lr_y > 0.0))
        throw std::invalid_argument("InnerConfig: step sizes must be > 0");
    cost.validate();
    if (label_cost) label_cost->validate();
    if (domain == InnerDomain::BoxContinuous) {
        if (clamp_lo.size() != dim || clamp_hi.size() != dim)
            throw std::invalid_argument("InnerConfig: clamp bounds must match the feature dim");
        if (!clamp_lo.allFinite() || !clamp_hi.allFinite())
            throw std::invalid_argument("InnerConfig: box bounds must be finite");
    }
}

double adv_sample_objective(const SampleCostSpec& cost, const Vec& x, const Vec& xt,
                            double loss_value, double lambda) {
    const double d = norm_eval(cost.norm, xt - x);
    return loss_value / lambda - cost.L * std::pow(d, cost.q);
}

LossFn make_ce_loss(const Mlp& net, int y_class) {
    return [&net, y_class](const Vec& x, Vec* grad) {
        ForwardTrace trace;
        const Mat logits = forward(net, Mat(x.transpose()), &trace);
        const double value = loss_ce(logits.row(0).transpose(), y_class);
        if (grad) {
            Mat dlogits = softmax_rows(logits);
            dlogits(0, y_class) -= 1.0;
            *grad = backward(net, trace, dlogits).input.row(0).transpose();
        }
        return value;
    };
}

AdvSampleResult adv_sample(const Vec& x, const LossFn& loss, double lambda,
                           const InnerConfig& cfg) {
    cfg.validate(x.size());
    if (!(lambda > 0.0)) throw std::invalid_argument("adv_sample: lambda must be > 0");

    Vec xt = x;
    Vec grad(x.size());
    for (int m = 0; m < cfg.M; ++m) {
        loss(xt, &grad);
        if (!grad.allFinite()) {
            std::ostringstream msg;
            msg << "adv_sample: non-finite loss gradient at step " << m;
            throw std::runtime_error(msg.str());
        }
        const Vec step = grad / lambda - cfg.cost.L * norm_pow_grad(cfg.cost.norm, cfg.cost.q, xt - x);
        xt += cfg.lr_x * step;
        xt = xt.cwiseMax(cfg.clamp_lo).cwiseMin(cfg.clamp_hi);
    }
    return {xt, adv_sample_objective(cfg.cost, x, xt, loss(xt, nullptr), lambda)};
}

AdvSampleResult adv_sample(const Mlp& net, const Vec& x, int y_class, double lambda,
                           const InnerConfig& cfg) {
    return adv_sample(x, make_ce_loss(net, y_class), lambda, cfg);
}

AdvBatchResult adv_sample_batch(const Mlp& net, const Mat& x, const std::vector<int>& y,
                                double lambda, const InnerConfig& cfg) {
    cfg.validate(x.cols());
    if (!(lambda > 0.0)) throw std::invalid_argument("adv_sample_batch: lambda must be > 0");
    const Eigen::Index b = x.rows();

    Mat xt = x;
    for (int m = 0; m < cfg.M; ++m) {
        ForwardTrace trace;
        const Mat logits = forward(net, xt, &trace);
        Mat dlogits = softmax_rows(logits);
        for (Eigen::Index r = 0; r < b; ++r) dlogits(r, y[r]) -= 1.0;
        const Mat dce = backward(net, trace, dlogits).input;  // per-row gradients
        if (!dce.allFinite()) {
            std::ostringstream msg;
            msg << "adv_sample_batch: non-finite loss gradient at step " << m;
            throw std::runtime_error(msg.str());
        }
        for (Eigen::Index r = 0; r < b; ++r) {
            const Vec d = (xt.row(r) - x.row(r)).transpose();
            xt.row(r) += cfg.lr_x * (dce.row(r).transpose() / lambda -
                                     cfg.cost.L * norm_pow_grad(cfg.cost.norm, cfg.cost.q, d))
                                        .transpose();
        }
        xt = xt.cwiseMax(cfg.clamp_lo.transpose().replicate(b, 1))
                 .cwiseMin(cfg.clamp_hi.transpose().replicate(b, 1));
    }

    AdvBatchResult out;
    out.x_tilde = xt;
    out.objectives.resize(b);
    const Mat logits = forward(net, xt, nullptr);
    for (Eigen::Index r = 0; r < b; ++r)
        out.objectives[r] = adv_sample_objective(cfg.cost, x.row(r).transpose(),
                                                 xt.row(r).transpose(),
                                                 loss_ce(logits.row(r).transpose(), y[r]), lambda);
    return out;
}

Vec initial_adv_label_logits(int num_classes, int k, double delta) {
    Vec y = Vec::Zero(num_classes);
    y[k] = std::log((num_classes - 1) * (2.0 - delta) / delta);
    return y;
}

AdvSampleLabelResult adv_sample_label(const Mlp& net, const Vec& x, int k, double lambda,
                                      const InnerConfig& cfg) {
    cfg.validate(x.size());
    if (!cfg.label_cost)
        throw std::invalid_argument("adv_sample_label: label_cost spec is required");
    if (!(lambda > 0.0)) throw std::invalid_argument("adv_sample_label: lambda must be > 0");
    const double delta = cfg.label_cost->delta;
    const double K = cfg.label_cost->K;
    const int nc = cfg.num_classes;
    if (k < 0 || k >= nc) throw std::invalid_argument("adv_sample_label: class out of range");

    const Vec y_init = initial_adv_label_logits(nc, k, delta);
    Vec yt = y_init;
    Vec pt = softmax_rows(yt.transpose()).row(0).transpose();
    Vec xt = x;

    auto objective = [&](const Vec& xs, const Vec& ps) {
        ForwardTrace trace;
        const Mat logits = forward(net, Mat(xs.transpose()), &trace);
        const double kl_term = loss_ce(logits.row(0).transpose(), ps) - entropy(ps);
        const double dist = norm_eval(cfg.cost.norm, xs - x);
        return kl_term / lambda - cfg.cost.L * std::pow(dist, cfg.cost.q) -
               K * g_delta(delta, 1.0 - ps[k]);
    };

    for (int m = 0; m < cfg.M; ++m) {
        // Sample step at the current adversarial label.
        ForwardTrace trace;
        const Mat logits = forward(net, Mat(xt.transpose()), &trace);
        Mat dlogits = softmax_rows(logits);
        dlogits.row(0) -= pt.transpose();  // d CE(phi(xt), pt) / d logits
        const Vec dce = backward(net, trace, dlogits).input.row(0).transpose();
        if (!dce.allFinite()) {
            std::ostringstream msg;
            msg << "adv_sample_label: non-finite sample gradient at step " << m;
            throw std::runtime_error(msg.str());
        }
        xt += cfg.lr_x * (dce / lambda - cfg.cost.L * norm_pow_grad(cfg.cost.norm, cfg.cost.q, xt - x));
        xt = xt.cwiseMax(cfg.clamp_lo).cwiseMin(cfg.clamp_hi);

        // Label step: ascent on lambda^{-1} KL(pt || softmax(phi(xt))) minus
        // the g_delta label cost, chained through the softmax Jacobian.
        const Vec lsm = log_softmax_rows(forward(net, Mat(xt.transpose()), nullptr)).row(0).transpose();
        Vec v(nc);
        for (int a = 0; a < nc; ++a)
            v[a] = (std::log(std::max(pt[a], 1e-300)) - lsm[a] + 1.0) / lambda;
        const double z = 1.0 - pt[k];
        const double gprime = 1.0 / ((1.0 - z / delta) * (1.0 - z / delta));
        v[k] += K * gprime;
        const double mean_v = pt.dot(v);
        Vec dy = pt.array() * (v.array() - mean_v);
        if (!dy.allFinite()) {
            std::ostringstream msg;
            msg << "adv_sample_label: non-finite label gradient at step " << m;
            throw std::runtime_error(msg.str());
        }
        yt += cfg.lr_y * dy;
        pt = softmax_rows(yt.transpose()).row(0).transpose();
        if (pt[k] <= 1.0 - delta) {
            // Fail-safe: an oversized step left the feasible label set.
            yt = y_init;
            pt = softmax_rows(yt.transpose()).row(0).transpose();
        }
    }

    return {xt, yt, pt, objective(xt, pt)};
}

AdvBinaryResult adv_binary_monotone(const Vec& x_bits, const LossFn& loss, double lambda,
                                    const InnerConfig& cfg) {
    if (!(lambda > 0.0)) throw std::invalid_argument("adv_binary_monotone: lambda must be > 0");
    cfg.cost.validate();
    for (Eigen::Index i = 0; i < x_bits.size(); ++i)
        if (x_bits[i] != 0.0 && x_bits[i] != 1.0)
            throw std::invalid_argument("adv_binary_monotone: input must be 0/1 valued");

    AdvBinaryResult out;
    out.x_tilde = x_bits;
    out.objective = adv_sample_objective(cfg.cost, x_bits, out.x_tilde,
                                         loss(out.x_tilde, nullptr), lambda);
    for (int round = 0; round < cfg.M; ++round) {
        int best_bit = -1;
        double best_obj = out.objective;
        for (Eigen::Index i = 0; i < x_bits.size(); ++i) {
            if (out.x_tilde[i] != 0.0) continue;  // 1 -> 0 flips are never allowed
            Vec cand = out.x_tilde;
            cand[i] = 1.0;
            const double obj =
                adv_sample_objective(cfg.cost, x_bits, cand, loss(cand, nullptr), lambda);
            if (obj > best_obj) {
                best_obj = obj;
                best_bit = static_cast<int>(i);
            }
        }
        if (best_bit < 0) break;  // no flip improves the objective
        out.x_tilde[best_bit] = 1.0;
        out.objective = best_obj;
        ++out.flips;
    }
    return out;
}

AdvBinaryResult adv_binary_monotone(const Mlp& net, const Vec& x_bits, int y_class,
                                    double lambda, const InnerConfig& cfg) {
    if (cfg.relaxed_binary) {
        // Relaxed mode: plain ascent on the box [x, 1]^d (monotonicity makes
        // x the lower bound), then round; used for rFGSM-style parity runs.
        InnerConfig relaxed = cfg;
        relaxed.domain = InnerDomain::BoxContinuous;
        relaxed.clamp_lo = x_bits;
        relaxed.clamp_hi = Vec::Ones(x_bits.size());
        const AdvSampleResult r = adv_sample(net, x_bits, y_class, lambda, relaxed);
        AdvBinaryResult out;
        out.x_tilde = (r.x_tilde.array() >= 0.5).cast<double>().matrix().cwiseMax(x_bits);
        const LossFn loss = make_ce_loss(net, y_class);
        out.objective = adv_sample_objective(cfg.cost, x_bits, out.x_tilde,
                                             loss(out.x_tilde, nullptr), lambda);
        out.flips = static_cast<int>((out.x_tilde - x_bits).sum());
        return out;
    }
    return adv_binary_monotone(x_bits, make_ce_loss(net, y_class), lambda, cfg);
}

}  // namespace armor
