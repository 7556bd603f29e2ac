#pragma once

#include "armor/fdiv.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace armor {

/// Data loading errors carry a category so the CLI can map them to distinct
/// messages and a data exit code.
struct DataError : std::runtime_error {
    enum class Code { BadMagic, Truncated, CountMismatch, Io, Format };
    Code code;
    DataError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

enum class DataDomain { BoxContinuous, BinaryMonotone };

struct Dataset {
    Mat features;             // n x d
    std::vector<int> labels;  // class indices in [0, num_classes)
    int num_classes = 2;
    DataDomain domain = DataDomain::BoxContinuous;
    Vec box_lo, box_hi;       // declared feature box (box domains)

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    /// Asserts the declared domain actually holds for the stored features.
    void validate() const;

    Dataset head(Eigen::Index n) const;
};

/// MNIST-style IDX reader. Headers are big-endian; the image magic is
/// 0x00000803 and the label magic 0x00000801. Pixels are scaled by 1/255
/// into [0, 1]. `limit` caps the number of samples (0 = all).
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);

/// Two interleaved half-circles rescaled into [0,1]^2 with balanced classes.
/// Gaussian noise is added before the (fixed) affine rescale; noise = 0
/// puts the points exactly on the arcs.
Dataset gen_moons(int n, double noise, std::uint64_t seed);

/// Monotone rule: label = OR over clauses of AND over the clause's bits,
/// with independent label-flip noise.
struct PlantedRule {
    std::vector<std::vector<int>> clauses{{0, 1}, {2, 3}};
    double flip_noise = 0.0;

    bool eval(const Vec& bits) const;
};

/// Uniform random bits with a planted monotone label; the binary-monotone
/// domain marks that adversarial perturbations may only flip 0 -> 1.
Dataset gen_binary(int n, int d, const PlantedRule& rule, std::uint64_t seed);

/// CSV with header f0..f{d-1},label and 17 significant digits.
void save_csv(const Dataset& data, const std::string& path);
Dataset load_csv(const std::string& path, DataDomain domain);

}  // namespace armor
