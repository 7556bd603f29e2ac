#include "armor/nnet.hpp"

#include "armor/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace armor {

void Mlp::validate() const {
    if (weights.empty() || weights.size() != biases.size())
        throw std::invalid_argument("Mlp: empty or mismatched layer lists");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != biases[l].size())
            throw std::invalid_argument("Mlp: bias length does not match layer rows");
        if (l > 0 && weights[l].cols() != weights[l - 1].rows())
            throw std::invalid_argument("Mlp: consecutive layer dimensions do not chain");
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw std::invalid_argument("Mlp: non-finite parameter");
    }
}

Mlp Mlp::init(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp::init: need at least two dims");
    Rng rng(seed);
    Mlp net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        Mat w(dims[l + 1], dims[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vec::Zero(dims[l + 1]));
    }
    return net;
}

Mat forward(const Mlp& net, const Mat& x, ForwardTrace* trace) {
    if (x.cols() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    Mat h = x;
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
    }
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (trace) trace->inputs.push_back(h);
        Mat pre = (h * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
        if (trace) trace->pre.push_back(pre);
        if (l + 1 < net.layer_count())
            h = pre.cwiseMax(0.0);  // ReLU on hidden layers
        else
            h = std::move(pre);
    }
    return h;
}

Vec forward(const Mlp& net, const Vec& x) {
    return forward(net, Mat(x.transpose()), nullptr).row(0).transpose();
}

Mat softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double shift = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - shift).exp();
        out.row(r) = e / e.sum();
    }
    return out;
}

Mat log_softmax_rows(const Mat& logits) {
    Mat out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double shift = logits.row(r).maxCoeff();
        const double lse = shift + std::log((logits.row(r).array() - shift).exp().sum());
        out.row(r) = logits.row(r).array() - lse;
    }
    return out;
}

double loss_ce(const Vec& logits, int target_class) {
    if (target_class < 0 || target_class >= logits.size())
        throw std::invalid_argument("loss_ce: target class out of range");
    const Mat ls = log_softmax_rows(logits.transpose());
    return -ls(0, target_class);
}

double loss_ce(const Vec& logits, const Vec& target_probs) {
    if (logits.size() != target_probs.size())
        throw std::invalid_argument("loss_ce: target length mismatch");
    const Mat ls = log_softmax_rows(logits.transpose());
    return -(target_probs.array() * ls.row(0).transpose().array()).sum();
}

double entropy(const Vec& probs) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return h;
}

Grads backward(const Mlp& net, const ForwardTrace& trace, const Mat& dlogits) {
    if (trace.pre.size() != net.layer_count())
        throw std::invalid_argument("backward: trace does not match the network");
    Grads g;
    g.weights.resize(net.layer_count());
    g.biases.resize(net.layer_count());
    Mat delta = dlogits;
    for (std::size_t l = net.layer_count(); l-- > 0;) {
        g.weights[l] = delta.transpose() * trace.inputs[l];
        g.biases[l] = delta.colwise().sum().transpose();
        Mat dinput = delta * net.weights[l];
        if (l > 0) {
            // ReLU mask of the previous layer; subgradient 0 at the kink.
            dinput = (trace.pre[l - 1].array() > 0.0).cast<double>() * dinput.array();
        }
        delta = std::move(dinput);
    }
    g.input = std::move(delta);
    return g;
}

Mat ce_logit_grad(const Mat& logits, const std::vector<int>& targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
        throw std::invalid_argument("ce_logit_grad: target count mismatch");
    Mat g = softmax_rows(logits);
    const double inv_b = 1.0 / static_cast<double>(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) g(r, targets[r]) -= 1.0;
    return g * inv_b;
}

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double softplus_inv(double y) {
    if (!(y > 0.0)) throw std::invalid_argument("softplus_inv: argument must be > 0");
    // log(exp(y) - 1), stable for large y.
    return y > 30.0 ? y : std::log(std::expm1(y));
}

namespace {
constexpr char kMagic[] = "ARMORNET1";
}

void save_checkpoint(const Mlp& net, const std::string& path) {
    net.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic) - 1);
    const std::uint32_t layers = static_cast<std::uint32_t>(net.layer_count());
    out.write(reinterpret_cast<const char*>(&layers), sizeof(layers));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const std::uint32_t rows = static_cast<std::uint32_t>(net.weights[l].rows());
        const std::uint32_t cols = static_cast<std::uint32_t>(net.weights[l].cols());
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                const double v = net.weights[l](r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
            const double v = net.biases[l][r];
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[sizeof(kMagic) - 1];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    std::uint32_t layers = 0;
    in.read(reinterpret_cast<char*>(&layers), sizeof(layers));
    Mlp net;
    for (std::uint32_t l = 0; l < layers; ++l) {
        std::uint32_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
        Mat w(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                w(r, c) = v;
            }
        Vec b(rows);
        for (std::uint32_t r = 0; r < rows; ++r) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            b[r] = v;
        }
        if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    net.validate();
    return net;
}

}  // namespace armor
