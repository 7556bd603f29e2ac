#pragma once

#include "armor/nnet.hpp"
#include "armor/transport.hpp"

#include <functional>
#include <optional>

namespace armor {

/// Loss evaluated at a candidate point, optionally with its input gradient.
/// The standard instantiation is x -> CE(phi_theta(x), y) for a fixed label.
using LossFn = std::function<double(const Vec& x, Vec* grad)>;

enum class InnerDomain { BoxContinuous, BinaryMonotone };

struct InnerConfig {
    int M = 10;            // ascent iterations
    double lr_x = 0.01;    // step size for the adversarial sample
    double lr_y = 0.01;    // step size for the adversarial label logits
    Vec clamp_lo, clamp_hi;  // per-feature data box (box domains)
    InnerDomain domain = InnerDomain::BoxContinuous;
    SampleCostSpec cost;
    std::optional<LabelCostSpec> label_cost;
    int num_classes = 2;
    bool relaxed_binary = false;  // gradient ascent on [x,1]^d + rounding
                                  // instead of exact coordinate ascent

    void validate(Eigen::Index dim) const;
};

/// A_s(x, xt) = loss(xt)/lambda - L ||x - xt||^q, the objective the sample
/// ascent maximizes.
double adv_sample_objective(const SampleCostSpec& cost, const Vec& x, const Vec& xt,
                            double loss_value, double lambda);

struct AdvSampleResult {
    Vec x_tilde;
    double objective;  // A_s at the returned point, re-evaluated exactly
};

/// M plain-gradient ascent steps on A_s, clamping to the data box after each
/// step. Starting from xt = x the initial objective is loss(x)/lambda
/// exactly (zero transport cost). Throws on a non-finite gradient, naming
/// the step.
AdvSampleResult adv_sample(const Vec& x, const LossFn& loss, double lambda,
                           const InnerConfig& cfg);

/// CE adapter: loss(xt) = CE(phi(xt), y_class).
AdvSampleResult adv_sample(const Mlp& net, const Vec& x, int y_class, double lambda,
                           const InnerConfig& cfg);

/// Batched variant (rows = samples); per-sample ascents are independent.
struct AdvBatchResult {
    Mat x_tilde;
    Vec objectives;
};
AdvBatchResult adv_sample_batch(const Mlp& net, const Mat& x, const std::vector<int>& y,
                                double lambda, const InnerConfig& cfg);

struct AdvSampleLabelResult {
    Vec x_tilde;
    Vec y_tilde;   // adversarial label logits
    Vec p_tilde;   // softmax(y_tilde); p_tilde[k] > 1 - delta always holds
    double objective;
};

/// Joint sample+label ascent on A_{s,l}: alternates one x step and one y step
/// per iteration (x first). Labels start at the logits
/// log((N_c-1)(2-delta)/delta) * onehot_k, i.e. p_k = 1 - delta/2 with the
/// remaining mass spread evenly. If an update drives p_k <= 1 - delta the
/// label state is reset to that initialization.
AdvSampleLabelResult adv_sample_label(const Mlp& net, const Vec& x, int k, double lambda,
                                      const InnerConfig& cfg);

/// The initial adversarial label distribution for class k.
Vec initial_adv_label_logits(int num_classes, int k, double delta);

struct AdvBinaryResult {
    Vec x_tilde;
    double objective;
    int flips = 0;
};

/// Monotone-binary ascent: up to M rounds of greedy coordinate search over
/// the currently-zero bits, flipping the bit with the largest exact A_s
/// improvement; stops early when no flip helps. Bits never flip 1 -> 0.
AdvBinaryResult adv_binary_monotone(const Vec& x_bits, const LossFn& loss, double lambda,
                                    const InnerConfig& cfg);
AdvBinaryResult adv_binary_monotone(const Mlp& net, const Vec& x_bits, int y_class,
                                    double lambda, const InnerConfig& cfg);

/// CE loss adapter used by the ascents above and by the attacks.
LossFn make_ce_loss(const Mlp& net, int y_class);

}  // namespace armor
