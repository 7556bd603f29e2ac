#include "armor/trainer.hpp"

#include "armor/rng.hpp"

#include <cmath>
#include <numeric>

namespace armor {

void TrainConfig::validate() const {
    divergence.validate();
    if (divergence.kind == DivKind::Indicator)
        throw std::invalid_argument("train: the indicator divergence has no outer objective here");
    cost.validate();
    if (label_cost) label_cost->validate();
    if (adv_mode == AdvMode::AdvSL && !label_cost)
        throw std::invalid_argument("train: adv_{s,l} requires a label cost spec");
    if (epochs < 1 || batch < 1) throw std::invalid_argument("train: epochs/batch must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("train: epsilon must be > 0");
    if (!(lr_lambda > 0.0) || !(lr_theta > 0.0))
        throw std::invalid_argument("train: learning rates must be > 0");
    if (variant == TrainVariant::Nat || variant == TrainVariant::AsymNat) {
        if (!(t > 0.0 && t <= 1.0))
            throw std::invalid_argument("train: nat weight t must be in (0, 1]");
    }
    if (variant == TrainVariant::Asym || variant == TrainVariant::AsymNat) {
        if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("train: asym weight s must be in (0,1)");
    }
    if (!(lambda_init > 0.0)) throw std::invalid_argument("train: lambda_init must be > 0");
}

namespace {

struct BatchRobustTerms {
    Vec base;   // per-sample base loss at the adversarial point
    Vec costs;  // per-sample transport (+ label) cost
    Mat x_tilde;
    std::vector<Vec> p_tilde;  // adv_{s,l} only
};

// Robust outer objective and its (lambda, rho) partial derivatives at fixed
// adversarial points: A_i = base_i / lambda - cost_i.
struct OuterEval {
    double value = 0.0;
    double dlambda = 0.0;
    double drho = 0.0;
    Vec weights;  // per-sample theta-gradient weights
};

OuterEval eval_outer(const DivergenceSpec& div, double epsilon, double lambda, double rho,
                     const Vec& base, const Vec& costs) {
    const Eigen::Index b = base.size();
    Vec a = base / lambda - costs;
    OuterEval out;
    out.weights.resize(b);
    if (div.kind == DivKind::KL) {
        const double shift = a.maxCoeff();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < b; ++i) acc += std::exp(a[i] - shift);
        const double lse = shift + std::log(acc / b);
        for (Eigen::Index i = 0; i < b; ++i) out.weights[i] = std::exp(a[i] - shift) / acc;
        out.value = epsilon * lambda + lambda * lse;
        out.dlambda = epsilon + lse - out.weights.dot(base) / lambda;
        out.drho = 0.0;
        return out;
    }
    // Alpha / BetaMix outer objective with a trained rho.
    double mean_fs = 0.0, mean_fsp = 0.0, mean_fsp_base = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const double z = a[i] - rho / lambda;
        const double fsp = f_star_prime(div, z);
        mean_fs += f_star(div, z);
        mean_fsp += fsp;
        mean_fsp_base += fsp * base[i];
        out.weights[i] = fsp / b;
    }
    mean_fs /= b;
    mean_fsp /= b;
    mean_fsp_base /= b;
    out.value = epsilon * lambda + rho + lambda * mean_fs;
    out.dlambda = epsilon + mean_fs + (rho * mean_fsp - mean_fsp_base) / lambda;
    out.drho = 1.0 - mean_fsp;
    return out;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    const bool binary_domain = data.domain == DataDomain::BinaryMonotone;
    if (binary_domain != (cfg.inner.domain == InnerDomain::BinaryMonotone))
        throw std::invalid_argument("train: dataset domain does not match the inner config");
    if (cfg.adv_mode == AdvMode::AdvSL && binary_domain)
        throw std::invalid_argument("train: adv_{s,l} is defined on box domains here");

    InnerConfig inner = cfg.inner;
    inner.cost = cfg.cost;
    inner.label_cost = cfg.label_cost;
    inner.num_classes = data.num_classes;
    if (!binary_domain) {
        inner.clamp_lo = data.box_lo;
        inner.clamp_hi = data.box_hi;
    }

    std::vector<int> dims;
    dims.push_back(static_cast<int>(data.dim()));
    for (int h : cfg.hidden) dims.push_back(h);
    dims.push_back(data.num_classes);

    Rng rng(cfg.seed);
    TrainResult result;
    result.net = Mlp::init(dims, rng.next_u64());

    double lambda_raw = softplus_inv(cfg.lambda_init);
    double rho = cfg.rho_init;
    const bool has_rho = cfg.divergence.kind != DivKind::KL;
    const bool asym = cfg.variant == TrainVariant::Asym || cfg.variant == TrainVariant::AsymNat;
    const bool nat = cfg.variant == TrainVariant::Nat || cfg.variant == TrainVariant::AsymNat;

    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        const int batches = static_cast<int>((data.size() + cfg.batch - 1) / cfg.batch);
        for (int bi = 0; bi < batches; ++bi) {
            const Eigen::Index start = static_cast<Eigen::Index>(bi) * cfg.batch;
            const Eigen::Index count = std::min<Eigen::Index>(cfg.batch, data.size() - start);

            std::vector<int> robust_rows, natural_rows;
            for (Eigen::Index r = 0; r < count; ++r) {
                const int idx = order[start + r];
                if (asym && data.labels[idx] != cfg.robust_class)
                    natural_rows.push_back(idx);
                else
                    robust_rows.push_back(idx);
            }

            const double lambda = softplus(lambda_raw);
            const Mlp snapshot = result.net;  // last-good checkpoint for NaN aborts

            // Inner maximizers on the robustified samples.
            BatchRobustTerms terms;
            const Eigen::Index nr = static_cast<Eigen::Index>(robust_rows.size());
            std::vector<int> robust_labels(robust_rows.size());
            if (nr > 0) {
                Mat xb(nr, data.dim());
                for (Eigen::Index r = 0; r < nr; ++r) {
                    xb.row(r) = data.features.row(robust_rows[r]);
                    robust_labels[r] = data.labels[robust_rows[r]];
                }
                terms.x_tilde.resize(nr, data.dim());
                terms.base.resize(nr);
                terms.costs.resize(nr);
                if (binary_domain) {
                    for (Eigen::Index r = 0; r < nr; ++r) {
                        const AdvBinaryResult adv = adv_binary_monotone(
                            result.net, xb.row(r).transpose(), robust_labels[r], lambda, inner);
                        terms.x_tilde.row(r) = adv.x_tilde.transpose();
                        if (((adv.x_tilde - xb.row(r).transpose()).array() < 0.0).any())
                            ++result.monotone_violations;
                    }
                } else if (cfg.adv_mode == AdvMode::AdvS) {
                    terms.x_tilde =
                        adv_sample_batch(result.net, xb, robust_labels, lambda, inner).x_tilde;
                } else {
                    terms.p_tilde.resize(nr);
                    for (Eigen::Index r = 0; r < nr; ++r) {
                        const AdvSampleLabelResult adv = adv_sample_label(
                            result.net, xb.row(r).transpose(), robust_labels[r], lambda, inner);
                        terms.x_tilde.row(r) = adv.x_tilde.transpose();
                        terms.p_tilde[r] = adv.p_tilde;
                    }
                }
                // Base losses and transport costs at the adversarial points.
                for (Eigen::Index r = 0; r < nr; ++r) {
                    const Vec diff = (terms.x_tilde.row(r) - xb.row(r)).transpose();
                    terms.costs[r] =
                        cfg.cost.L * std::pow(norm_eval(cfg.cost.norm, diff), cfg.cost.q);
                    if (cfg.adv_mode == AdvMode::AdvSL) {
                        terms.costs[r] += cfg.label_cost->K *
                                          g_delta(cfg.label_cost->delta,
                                                  1.0 - terms.p_tilde[r][robust_labels[r]]);
                    }
                }
            }

            ForwardTrace robust_trace;
            Mat robust_logits;
            if (nr > 0) {
                robust_logits = forward(result.net, terms.x_tilde, &robust_trace);
                for (Eigen::Index r = 0; r < nr; ++r) {
                    const Vec logit = robust_logits.row(r).transpose();
                    terms.base[r] =
                        cfg.adv_mode == AdvMode::AdvS
                            ? loss_ce(logit, robust_labels[r])
                            : loss_ce(logit, terms.p_tilde[r]) - entropy(terms.p_tilde[r]);
                }
            }

            // Natural-sample contributions for the nat / asym variants.
            double nat_coeff_full = 0.0;    // weight on mean CE over all batch samples
            double nat_coeff_part0 = 0.0;   // weight on mean CE over the non-robust part
            double nat_coeff_part1 = 0.0;   // weight on mean CE over robust part (asym+nat)
            double robust_coeff = 1.0;
            switch (cfg.variant) {
                case TrainVariant::Plain: break;
                case TrainVariant::Nat:
                    nat_coeff_full = cfg.t;
                    robust_coeff = 1.0 - cfg.t;
                    break;
                case TrainVariant::Asym:
                    nat_coeff_part0 = 1.0 - cfg.s;
                    robust_coeff = cfg.s;
                    break;
                case TrainVariant::AsymNat:
                    nat_coeff_part0 = 1.0 - cfg.s;
                    nat_coeff_part1 = cfg.t * cfg.s;
                    robust_coeff = (1.0 - cfg.t) * cfg.s;
                    break;
            }

            double objective = 0.0;
            double dlambda = 0.0, drho = 0.0;
            if (nr > 0) {
                const OuterEval outer =
                    eval_outer(cfg.divergence, cfg.epsilon, lambda, rho, terms.base, terms.costs);
                objective += robust_coeff * outer.value;
                dlambda = robust_coeff * outer.dlambda;
                drho = robust_coeff * outer.drho;
            }

            auto nat_mean_ce = [&](const std::vector<int>& rows, Mat* logits, ForwardTrace* trace) {
                Mat xb(static_cast<Eigen::Index>(rows.size()), data.dim());
                for (std::size_t r = 0; r < rows.size(); ++r) xb.row(static_cast<Eigen::Index>(r)) = data.features.row(rows[r]);
                *logits = forward(result.net, xb, trace);
                double acc = 0.0;
                for (std::size_t r = 0; r < rows.size(); ++r)
                    acc += loss_ce(logits->row(static_cast<Eigen::Index>(r)).transpose(), data.labels[rows[r]]);
                return acc / static_cast<double>(rows.size());
            };

            ForwardTrace nat_full_trace, nat_part0_trace, nat_part1_trace;
            Mat nat_full_logits, nat_part0_logits, nat_part1_logits;
            std::vector<int> full_rows;
            if (nat_coeff_full > 0.0) {
                for (Eigen::Index r = 0; r < count; ++r) full_rows.push_back(order[start + r]);
                objective += nat_coeff_full * nat_mean_ce(full_rows, &nat_full_logits, &nat_full_trace);
            }
            if (nat_coeff_part0 > 0.0 && !natural_rows.empty())
                objective +=
                    nat_coeff_part0 * nat_mean_ce(natural_rows, &nat_part0_logits, &nat_part0_trace);
            if (nat_coeff_part1 > 0.0 && !robust_rows.empty())
                objective +=
                    nat_coeff_part1 * nat_mean_ce(robust_rows, &nat_part1_logits, &nat_part1_trace);

            if (!std::isfinite(objective)) {
                result.net = snapshot;
                result.aborted_nan = true;
                result.lambda_final = softplus(lambda_raw);
                return result;
            }

            // (lambda, rho) step, then the theta step at the updated lambda
            // (the adversarial points stay fixed).
            if (nr > 0) {
                lambda_raw -= cfg.lr_lambda * dlambda * sigmoid(lambda_raw);
                if (has_rho) rho -= cfg.lr_lambda * drho;
            }
            const double lambda_new = softplus(lambda_raw);

            Grads total;
            total.weights.assign(result.net.layer_count(), Mat());
            total.biases.assign(result.net.layer_count(), Vec());
            for (std::size_t l = 0; l < result.net.layer_count(); ++l) {
                total.weights[l] = Mat::Zero(result.net.weights[l].rows(), result.net.weights[l].cols());
                total.biases[l] = Vec::Zero(result.net.biases[l].size());
            }
            auto accumulate = [&](const Grads& g, double coeff) {
                for (std::size_t l = 0; l < total.weights.size(); ++l) {
                    total.weights[l] += coeff * g.weights[l];
                    total.biases[l] += coeff * g.biases[l];
                }
            };

            if (nr > 0 && robust_coeff > 0.0) {
                const OuterEval outer = eval_outer(cfg.divergence, cfg.epsilon, lambda_new, rho,
                                                   terms.base, terms.costs);
                Mat dlogits = softmax_rows(robust_logits);
                for (Eigen::Index r = 0; r < nr; ++r) {
                    if (cfg.adv_mode == AdvMode::AdvS)
                        dlogits(r, robust_labels[r]) -= 1.0;
                    else
                        dlogits.row(r) -= terms.p_tilde[r].transpose();
                    dlogits.row(r) *= outer.weights[r];
                }
                accumulate(backward(result.net, robust_trace, dlogits), robust_coeff);
            }
            if (nat_coeff_full > 0.0) {
                std::vector<int> ys;
                for (int idx : full_rows) ys.push_back(data.labels[idx]);
                accumulate(backward(result.net, nat_full_trace, ce_logit_grad(nat_full_logits, ys)),
                           nat_coeff_full);
            }
            if (nat_coeff_part0 > 0.0 && !natural_rows.empty()) {
                std::vector<int> ys;
                for (int idx : natural_rows) ys.push_back(data.labels[idx]);
                accumulate(backward(result.net, nat_part0_trace, ce_logit_grad(nat_part0_logits, ys)),
                           nat_coeff_part0);
            }
            if (nat_coeff_part1 > 0.0 && !robust_rows.empty()) {
                std::vector<int> ys;
                for (int idx : robust_rows) ys.push_back(data.labels[idx]);
                accumulate(backward(result.net, nat_part1_trace, ce_logit_grad(nat_part1_logits, ys)),
                           nat_coeff_part1);
            }

            bool finite = true;
            for (std::size_t l = 0; l < total.weights.size(); ++l)
                finite = finite && total.weights[l].allFinite() && total.biases[l].allFinite();
            if (!finite) {
                result.net = snapshot;
                result.aborted_nan = true;
                result.lambda_final = softplus(lambda_raw);
                return result;
            }
            for (std::size_t l = 0; l < total.weights.size(); ++l) {
                result.net.weights[l] -= cfg.lr_theta * total.weights[l];
                result.net.biases[l] -= cfg.lr_theta * total.biases[l];
            }

            result.log.push_back({epoch, bi, lambda_new, has_rho ? rho : 0.0, objective});
        }
    }
    result.lambda_final = softplus(lambda_raw);
    return result;
}

Metrics evaluate(const Mlp& net, const Dataset& data,
                 const std::optional<AttackConfig>& attack) {
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    if (attack) {
        attack->validate();
        const bool binary = data.domain == DataDomain::BinaryMonotone;
        if (binary != (attack->kind == AttackConfig::Kind::RFGSM))
            throw std::invalid_argument(
                "evaluate: rFGSM targets binary domains, FGSM/PGD box domains");
    }

    Mat x = data.features;
    if (attack) {
        const Vec lo = data.domain == DataDomain::BinaryMonotone ? Vec::Zero(data.dim()) : data.box_lo;
        const Vec hi = data.domain == DataDomain::BinaryMonotone ? Vec::Ones(data.dim()) : data.box_hi;
        x = attack_batch(net, x, data.labels, *attack, lo, hi);
    }

    const Mat logits = forward(net, x, nullptr);
    std::vector<int> pred(data.size());
    for (Eigen::Index r = 0; r < data.size(); ++r)
        logits.row(r).maxCoeff(&pred[r]);

    Metrics m;
    long correct = 0;
    for (Eigen::Index r = 0; r < data.size(); ++r)
        if (pred[r] == data.labels[r]) ++correct;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());

    // One-vs-rest rates, macro-averaged over classes with members; for a
    // binary task this reduces to the usual FNR/FPR with class 1 positive.
    auto rates_for = [&](int cls, double* fnr, double* fpr) {
        long pos = 0, neg = 0, fn = 0, fp = 0;
        for (Eigen::Index r = 0; r < data.size(); ++r) {
            if (data.labels[r] == cls) {
                ++pos;
                if (pred[r] != cls) ++fn;
            } else {
                ++neg;
                if (pred[r] == cls) ++fp;
            }
        }
        *fnr = pos > 0 ? static_cast<double>(fn) / pos : 0.0;
        *fpr = neg > 0 ? static_cast<double>(fp) / neg : 0.0;
        return pos > 0;
    };

    if (data.num_classes == 2) {
        rates_for(1, &m.fnr, &m.fpr);
        return m;
    }
    double fnr_sum = 0.0, fpr_sum = 0.0;
    int used = 0;
    for (int cls = 0; cls < data.num_classes; ++cls) {
        double fnr, fpr;
        if (rates_for(cls, &fnr, &fpr)) {
            fnr_sum += fnr;
            fpr_sum += fpr;
            ++used;
        }
    }
    m.fnr = used > 0 ? fnr_sum / used : 0.0;
    m.fpr = used > 0 ? fpr_sum / used : 0.0;
    return m;
}

}  // namespace armor
