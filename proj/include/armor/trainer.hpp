#pragma once

#include "armor/attacks.hpp"
#include "armor/dataio.hpp"
#include "armor/innermax.hpp"

namespace armor {

enum class AdvMode { AdvS, AdvSL };

enum class TrainVariant { Plain, Nat, Asym, AsymNat };

/// Hyperparameters of the adversarial training loop. Key names in JSON
/// configs mirror the usual hyperparameter symbols (epsilon, L, q, K, delta,
/// alpha, beta, norm, lr_lambda, t, s, M, lr_x, lr_y).
struct TrainConfig {
    int epochs = 5;
    int batch = 32;
    DivergenceSpec divergence = DivergenceSpec::kl();
    double epsilon = 0.1;
    SampleCostSpec cost;
    std::optional<LabelCostSpec> label_cost;
    InnerConfig inner;           // clamp bounds are filled in from the dataset
    double lr_lambda = 1e-3;
    double lr_theta = 0.1;
    AdvMode adv_mode = AdvMode::AdvS;
    TrainVariant variant = TrainVariant::Plain;
    double t = 0.5;              // natural-sample weight; t = 1 is plain ERM
    double s = 0.5;              // robustified-component weight (asym)
    int robust_class = 1;        // class whose samples are robustified (asym)
    std::vector<int> hidden = {32};
    double lambda_init = 1.0;
    double rho_init = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainLogEntry {
    int epoch;
    int batch;
    double lambda;
    double rho;        // 0 for the KL objective
    double objective;
};

struct TrainResult {
    Mlp net;
    std::vector<TrainLogEntry> log;
    long monotone_violations = 0;  // binary domain: adversarial samples with x~ < x
    bool aborted_nan = false;      // net then holds the last good checkpoint
    double lambda_final = 0.0;
};

/// Algorithm-1 style training: per minibatch, run the inner maximizer on the
/// robustified samples, take one gradient step on (lambda[, rho]) and then
/// one on theta, in that order. lambda is kept positive through a softplus
/// reparametrization; lambda carries across batches.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

struct Metrics {
    double accuracy = 0.0;
    double fnr = 0.0;
    double fpr = 0.0;
};

/// Accuracy / FNR / FPR, optionally under attack. Binary tasks treat class 1
/// as positive; multiclass tasks report macro-averaged one-vs-rest rates.
Metrics evaluate(const Mlp& net, const Dataset& data,
                 const std::optional<AttackConfig>& attack = std::nullopt);

}  // namespace armor
