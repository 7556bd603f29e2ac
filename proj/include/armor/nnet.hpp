#pragma once

#include "armor/fdiv.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace armor {

/// Fully-connected classifier with ReLU hidden layers and logit outputs.
/// Forward/backward passes are written out by hand; everything is double
/// precision (32-bit accumulation is not enough for the duality suite).
struct Mlp {
    std::vector<Mat> weights;  // layer l maps dims[l] -> dims[l+1]
    std::vector<Vec> biases;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    std::size_t layer_count() const { return weights.size(); }

    void validate() const;

    /// Scaled-uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    /// deterministic in the seed.
    static Mlp init(const std::vector<int>& dims, std::uint64_t seed);
};

/// Cached per-layer inputs and pre-activations for backprop. Rows are batch
/// samples throughout.
struct ForwardTrace {
    std::vector<Mat> inputs;   // inputs[l] feeds layer l; inputs[0] is X
    std::vector<Mat> pre;      // pre-activations of layer l
};

/// Logits for a batch (rows = samples). The trace is optional.
Mat forward(const Mlp& net, const Mat& x, ForwardTrace* trace = nullptr);

/// Single-sample convenience wrapper.
Vec forward(const Mlp& net, const Vec& x);

Mat softmax_rows(const Mat& logits);
Mat log_softmax_rows(const Mat& logits);

/// Cross entropy -sum_i target_i log softmax(logits)_i for a one-hot class
/// index or a general probability-vector target. The KL-form loss used with
/// adversarial labels is loss_ce(logits, p) - entropy(p).
double loss_ce(const Vec& logits, int target_class);
double loss_ce(const Vec& logits, const Vec& target_probs);
double entropy(const Vec& probs);

struct Grads {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
    Mat input;  // gradient with respect to the batch input
};

/// Backpropagates d(loss)/d(logits) (rows = samples) through the cached
/// trace. ReLU subgradient at 0 is 0.
Grads backward(const Mlp& net, const ForwardTrace& trace, const Mat& dlogits);

/// d(mean CE)/d(logits) for integer class targets: (softmax - onehot) / B.
Mat ce_logit_grad(const Mat& logits, const std::vector<int>& targets);

/// log(1 + exp(z)) evaluated stably for large |z|; always positive.
double softplus(double z);
double sigmoid(double z);
/// Inverse of softplus on (0, inf).
double softplus_inv(double y);

/// Flat binary checkpoint: magic string, layer shapes, row-major doubles.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace armor
