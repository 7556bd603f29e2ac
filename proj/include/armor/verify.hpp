#pragma once

#include "armor/dro.hpp"
#include "armor/trainer.hpp"

#include <string>

namespace armor {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240501;
    int threads = 1;
};

/// Named sub-suites: duality, fixture, robust-equiv, interpolation,
/// properties, weights, gradcheck, binary-monotone, or "all".
std::vector<CheckResult> verify_suite(const std::string& suite, const VerifyOptions& opts);
std::vector<std::string> verify_suite_names();

bool all_passed(const std::vector<CheckResult>& results);

/// Canonical text rendering (17 significant digits); two runs with the same
/// seed must produce identical bytes.
std::string format_results(const std::vector<CheckResult>& results);

/// The fixed 20-instance certification suite: |X| in {2,3},
/// D in {KL, Alpha(2), Alpha(3)}, eps in {0.05, 0.1, 0.5}, kappa in {0, 0.2},
/// with seeded losses, costs and baselines over a shared sample=candidate set.
std::vector<DroProblem> duality_suite_instances(std::uint64_t seed);

struct DemoRun {
    std::uint64_t seed;
    Metrics nonrobust_clean, nonrobust_adv;
    Metrics robust_clean, robust_adv;
};

struct DemoOutcome {
    std::vector<DemoRun> runs;
    bool used_mnist = false;
    bool pass = false;
    std::string detail;
};

/// Desk-scale robustness demonstration: trains a non-robust and a
/// KL-regularized adversarial model per seed and compares PGD^40 accuracy at
/// eps = 0.1 (linf). Uses the MNIST IDX files under `mnist_dir` when present
/// (2000 train / 1000 test) and the two-moons task otherwise; the pass
/// margins are the same either way: +20 accuracy points under attack on
/// every seed and at most 3 points of clean-accuracy loss.
DemoOutcome run_robustness_demo(const std::string& mnist_dir,
                                const std::vector<std::uint64_t>& seeds);

std::string format_demo(const DemoOutcome& demo);

}  // namespace armor
