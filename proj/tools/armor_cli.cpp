// Batch front end: divergence computation, DRO solving with optional
// brute-force certification, property verification, adversarial training,
// attack evaluation and r-scaling sweeps. Outputs are values, tables and
// plot-ready CSV; reports embed the exact config and seed.

#include "armor/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace armor;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 2 usage, 3 config, 4 data, 5 verification failure.
enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kData = 4, kVerifyFail = 5 };

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 1;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(DataError::Code::Io, "cannot open config " + path);
    json j;
    in >> j;
    return j;
}

void write_report(const CommonArgs& args, const std::string& command, const json& config,
                  const json& results, double wall_s) {
    json report{{"command", command}, {"version", kVersion},   {"seed", args.seed},
                {"threads", args.threads}, {"config", config}, {"results", results},
                {"wall_time_s", wall_s}};
    fs::create_directories(args.out_dir);
    std::ofstream out(args.out_dir + "/report.json");
    out << report.dump(2) << "\n";
}

Vec to_vec(const json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

Mat to_mat(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw std::invalid_argument("ragged cost matrix");
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (j[r][c].is_string())  // "inf" entries mark forbidden routes
                m(r, c) = kInf;
            else
                m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

json vec_json(const Vec& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

DivergenceSpec parse_divergence(const json& cfg) {
    const std::string kind = cfg.value("kind", cfg.value("divergence", "kl"));
    if (kind == "kl") return DivergenceSpec::kl();
    if (kind == "alpha") return DivergenceSpec::alpha_div(cfg.value("alpha", 2.0));
    if (kind == "indicator") return DivergenceSpec::indicator();
    if (kind == "betamix") {
        const std::string base = cfg.value("base", "kl");
        const DivergenceSpec base_spec = base == "alpha"
                                             ? DivergenceSpec::alpha_div(cfg.value("alpha", 2.0))
                                             : DivergenceSpec::kl();
        return DivergenceSpec::beta_mix(base_spec, cfg.value("beta", 1.0));
    }
    throw std::invalid_argument("unknown divergence kind: " + kind);
}

Norm parse_norm(const std::string& name) {
    if (name == "l1") return Norm::L1;
    if (name == "l2") return Norm::L2;
    if (name == "linf") return Norm::LInf;
    throw std::invalid_argument("unknown norm: " + name);
}

DroProblem parse_problem(const json& cfg) {
    DroProblem pr;
    pr.divergence = parse_divergence(cfg.value("divergence", json{{"kind", "kl"}}));
    pr.baseline = to_vec(cfg.at("baseline"));
    pr.loss = to_vec(cfg.at("loss"));
    pr.cost = to_mat(cfg.at("cost"));
    pr.epsilon = cfg.value("epsilon", 0.1);
    pr.kappa = cfg.value("kappa", 0.0);
    if (cfg.contains("variant")) {
        const json& v = cfg["variant"];
        const std::string kind = v.value("kind", "plain");
        std::vector<uint8_t> mask;
        if (v.contains("robust_mask"))
            for (const auto& b : v["robust_mask"]) mask.push_back(b.get<int>() != 0);
        if (kind == "nat")
            pr.variant = DroVariant::nat(v.value("t", 0.5));
        else if (kind == "asym")
            pr.variant = DroVariant::asym(v.value("s", 0.5), mask);
        else if (kind == "asym_nat")
            pr.variant = DroVariant::asym_nat(v.value("s", 0.5), v.value("t", 0.5), mask);
        else if (kind != "plain")
            throw std::invalid_argument("unknown variant kind: " + kind);
    }
    return pr;
}

json fixture_config() {
    return json{{"divergence", {{"kind", "kl"}}},
                {"baseline", {1.0}},
                {"loss", {0.0, 1.0}},
                {"cost", {{0.0, 1.0}}},
                {"epsilon", 0.1},
                {"kappa", 0.0}};
}

Dataset parse_dataset(const json& cfg, std::uint64_t seed) {
    const std::string kind = cfg.value("kind", "moons");
    if (kind == "moons")
        return gen_moons(cfg.value("n", 2000), cfg.value("noise", 0.1),
                         cfg.value("seed", seed));
    if (kind == "binary") {
        PlantedRule rule;
        rule.flip_noise = cfg.value("flip_noise", 0.0);
        if (cfg.contains("clauses")) {
            rule.clauses.clear();
            for (const auto& cl : cfg["clauses"])
                rule.clauses.push_back(cl.get<std::vector<int>>());
        }
        return gen_binary(cfg.value("n", 1000), cfg.value("d", 16), rule,
                          cfg.value("seed", seed));
    }
    if (kind == "idx")
        return load_idx(cfg.at("images").get<std::string>(),
                        cfg.at("labels").get<std::string>(), cfg.value("limit", 0));
    if (kind == "csv") {
        const std::string domain = cfg.value("domain", "box");
        return load_csv(cfg.at("path").get<std::string>(),
                        domain == "binary" ? DataDomain::BinaryMonotone
                                           : DataDomain::BoxContinuous);
    }
    throw std::invalid_argument("unknown dataset kind: " + kind);
}

TrainConfig parse_train_config(const json& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = cfg.value("epochs", 5);
    tc.batch = cfg.value("batch", 32);
    tc.divergence = parse_divergence(cfg);
    tc.epsilon = cfg.value("epsilon", 0.1);
    tc.cost.L = cfg.value("L", 0.1);
    tc.cost.q = cfg.value("q", 2.0);
    tc.cost.norm = parse_norm(cfg.value("norm", "l2"));
    if (cfg.contains("K") || cfg.contains("delta")) {
        LabelCostSpec lc;
        lc.K = cfg.value("K", 1.0);
        lc.delta = cfg.value("delta", 0.1);
        tc.label_cost = lc;
    }
    tc.inner.M = cfg.value("M", 10);
    tc.inner.lr_x = cfg.value("lr_x", 0.01);
    tc.inner.lr_y = cfg.value("lr_y", 0.01);
    tc.lr_lambda = cfg.value("lr_lambda", 1e-3);
    tc.lr_theta = cfg.value("lr_theta", 0.1);
    const std::string adv = cfg.value("adv", "s");
    tc.adv_mode = adv == "sl" ? AdvMode::AdvSL : AdvMode::AdvS;
    const std::string variant = cfg.value("variant", "plain");
    if (variant == "plain") tc.variant = TrainVariant::Plain;
    else if (variant == "nat") tc.variant = TrainVariant::Nat;
    else if (variant == "asym") tc.variant = TrainVariant::Asym;
    else if (variant == "asym_nat") tc.variant = TrainVariant::AsymNat;
    else throw std::invalid_argument("unknown train variant: " + variant);
    tc.t = cfg.value("t", 0.5);
    tc.s = cfg.value("s", 0.5);
    tc.robust_class = cfg.value("robust_class", 1);
    if (cfg.contains("hidden")) tc.hidden = cfg["hidden"].get<std::vector<int>>();
    tc.lambda_init = cfg.value("lambda_init", 1.0);
    tc.seed = cfg.value("seed", seed);
    return tc;
}

AttackConfig parse_attack(const json& a) {
    AttackConfig cfg;
    const std::string kind = a.value("kind", "fgsm");
    if (kind == "fgsm") cfg.kind = AttackConfig::Kind::FGSM;
    else if (kind == "pgd") cfg.kind = AttackConfig::Kind::PGD;
    else if (kind == "rfgsm") cfg.kind = AttackConfig::Kind::RFGSM;
    else throw std::invalid_argument("unknown attack kind: " + kind);
    cfg.eps = a.value("eps", 0.1);
    cfg.steps = a.value("steps", kind == "pgd" ? 40 : (kind == "rfgsm" ? 50 : 1));
    cfg.step_size = a.value("step_size", 0.01);
    return cfg;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, Metrics>>& rows) {
    std::ofstream out(path);
    out << "attack,accuracy,fnr,fpr\n";
    char buf[128];
    for (const auto& [name, m] : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", name.c_str(), m.accuracy,
                      m.fnr, m.fpr);
        out << buf;
    }
}

int cmd_divergence(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const DivergenceSpec div = parse_divergence(cfg.value("divergence", json{{"kind", "kl"}}));
    const Mat cost = to_mat(cfg.at("cost"));
    const Vec p = to_vec(cfg.at("P"));
    const Vec q = to_vec(cfg.at("Q"));
    const auto t0 = std::chrono::steady_clock::now();
    const DcResult res = dc_primal(div, cost, p, q);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json results{{"value", std::isfinite(res.value) ? json(res.value) : json("inf")},
                 {"eta_star", vec_json(res.eta_star)},
                 {"iterations", res.iterations},
                 {"gap_estimate", res.gap_estimate},
                 {"converged", res.converged}};
    write_report(args, "divergence", cfg, results, wall);
    std::cout << "D^c = " << res.value << " (gap " << res.gap_estimate << ", "
              << res.iterations << " iters)\n";
    return kOk;
}

int cmd_dro_solve(const CommonArgs& args, bool certify, double grid_step) {
    const json cfg = args.config_path.empty() ? fixture_config() : load_config(args.config_path);
    const DroProblem pr = parse_problem(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const DualSolution sol = solve_outer(pr);

    json results{{"value", sol.value},
                 {"lambda_star", sol.lambda_star},
                 {"ctransform", vec_json(sol.ctransform)},
                 {"argmax", sol.argmax},
                 {"weights", vec_json(sol.weights)},
                 {"lambda_at_lower", sol.lambda_at_lower},
                 {"lambda_at_upper", sol.lambda_at_upper},
                 {"objective_evaluations", sol.trace.size()}};
    if (sol.rho_star) results["rho_star"] = *sol.rho_star;
    std::cout << "dual value = " << sol.value << " at lambda* = " << sol.lambda_star;
    if (sol.rho_star) std::cout << ", rho* = " << *sol.rho_star;
    std::cout << "\n";
    if (sol.lambda_at_lower || sol.lambda_at_upper)
        std::cout << "note: lambda stopped at the search-box boundary\n";

    if (certify) {
        const PrimalBracket primal = bruteforce_primal(pr, grid_step);
        const double gap = std::abs(sol.value - primal.value);
        results["primal"] = {{"value", primal.value},
                             {"lower", primal.lower},
                             {"upper", primal.upper},
                             {"q_best", vec_json(primal.q_best)}};
        results["certify_gap"] = gap;
        std::cout << "primal (brute force) = " << primal.value << ", |gap| = " << gap << "\n";
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_report(args, "dro-solve", cfg, results, wall);
    return kOk;
}

int cmd_verify(const CommonArgs& args, const std::string& suite) {
    VerifyOptions opts;
    opts.seed = args.seed == 0 ? 20240501 : args.seed;
    opts.threads = args.threads;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = verify_suite(suite, opts);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << format_results(results);
    json jres = json::array();
    for (const CheckResult& r : results)
        jres.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    write_report(args, "verify", json{{"suite", suite}, {"seed", opts.seed}}, jres, wall);
    return all_passed(results) ? kOk : kVerifyFail;
}

int cmd_demo(const CommonArgs& args, const std::string& mnist_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const DemoOutcome demo = run_robustness_demo(mnist_dir, {0, 1, 2});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << format_demo(demo);
    json runs = json::array();
    for (const DemoRun& r : demo.runs)
        runs.push_back({{"seed", r.seed},
                        {"robust_pgd", r.robust_adv.accuracy},
                        {"nonrobust_pgd", r.nonrobust_adv.accuracy},
                        {"robust_clean", r.robust_clean.accuracy},
                        {"nonrobust_clean", r.nonrobust_clean.accuracy}});
    write_report(args, "demo", json{{"mnist_dir", mnist_dir}},
                 json{{"used_mnist", demo.used_mnist}, {"pass", demo.pass}, {"runs", runs}},
                 wall);
    return demo.pass ? kOk : kVerifyFail;
}

int cmd_train(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const Dataset data = parse_dataset(cfg.value("data", json{{"kind", "moons"}}), args.seed);
    TrainConfig tc = parse_train_config(cfg, args.seed);
    if (data.domain == DataDomain::BinaryMonotone) tc.inner.domain = InnerDomain::BinaryMonotone;

    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult run = train(data, tc);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(args.out_dir);
    save_checkpoint(run.net, args.out_dir + "/model.ckpt");
    {
        // Newline-delimited JSON training log.
        std::ofstream log(args.out_dir + "/train_log.ndjson");
        for (const TrainLogEntry& e : run.log)
            log << json{{"epoch", e.epoch},
                        {"batch", e.batch},
                        {"lambda", e.lambda},
                        {"rho", e.rho},
                        {"objective", e.objective}}
                       .dump()
                << "\n";
    }
    const Metrics clean = evaluate(run.net, data);
    write_metrics_csv(args.out_dir + "/metrics.csv", {{"none", clean}});

    json results{{"aborted_nan", run.aborted_nan},
                 {"monotone_violations", run.monotone_violations},
                 {"lambda_final", run.lambda_final},
                 {"train_accuracy", clean.accuracy},
                 {"train_fnr", clean.fnr},
                 {"train_fpr", clean.fpr},
                 {"checkpoint", args.out_dir + "/model.ckpt"}};
    write_report(args, "train", cfg, results, wall);
    std::cout << "trained " << run.log.size() << " batches; train accuracy " << clean.accuracy
              << "; checkpoint " << args.out_dir << "/model.ckpt\n";
    return kOk;
}

int cmd_attack_eval(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const Mlp net = load_checkpoint(cfg.at("checkpoint").get<std::string>());
    const Dataset data = parse_dataset(cfg.at("data"), args.seed);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, Metrics>> rows;
    rows.emplace_back("none", evaluate(net, data));
    if (cfg.contains("attacks"))
        for (const auto& a : cfg["attacks"]) {
            const AttackConfig attack = parse_attack(a);
            rows.emplace_back(a.value("kind", "fgsm"), evaluate(net, data, attack));
        }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(args.out_dir);
    write_metrics_csv(args.out_dir + "/metrics.csv", rows);
    json results = json::array();
    for (const auto& [name, m] : rows) {
        results.push_back(
            {{"attack", name}, {"accuracy", m.accuracy}, {"fnr", m.fnr}, {"fpr", m.fpr}});
        std::cout << name << ": acc=" << m.accuracy << " fnr=" << m.fnr << " fpr=" << m.fpr
                  << "\n";
    }
    write_report(args, "attack-eval", cfg, results, wall);
    return kOk;
}

int cmd_scan_r(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const DivergenceSpec div = parse_divergence(cfg.value("divergence", json{{"kind", "kl"}}));
    const Mat cost = to_mat(cfg.at("cost"));
    const Vec p = to_vec(cfg.at("P"));
    const Vec q = to_vec(cfg.at("Q"));
    std::vector<double> ladder{1e-4, 1e-2, 1.0, 1e2, 1e4};
    if (cfg.contains("r_ladder")) ladder = cfg["r_ladder"].get<std::vector<double>>();

    const auto t0 = std::chrono::steady_clock::now();
    const auto scan = dc_scan_r(div, cost, p, q, ladder);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(args.out_dir);
    {
        std::ofstream csv(args.out_dir + "/sweep.csv");
        csv << "r,dc_value,dc_value_over_r\n";
        char buf[128];
        for (const auto& [r, v] : scan) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", r, v, v / r);
            csv << buf;
        }
    }
    json results = json::array();
    for (const auto& [r, v] : scan) {
        results.push_back({{"r", r}, {"value", v}});
        std::cout << "r=" << r << "  D^{c_r}=" << v << "  r^-1 D^{c_r}=" << v / r << "\n";
    }
    write_report(args, "scan-r", cfg, results, wall);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OT-regularized divergences, DRO solving and adversarial training"};
    app.require_subcommand(1);

    CommonArgs args;
    app.add_option("--seed", args.seed, "run seed");
    app.add_option("--out", args.out_dir, "output directory for reports");
    app.add_option("--threads", args.threads, "fan-out cap for per-sample work");

    auto* divergence = app.add_subcommand("divergence", "compute D^c(Q||P) from a JSON instance");
    divergence->add_option("--config", args.config_path, "instance JSON")->required();

    bool certify = false;
    double grid_step = 1e-2;
    auto* dro = app.add_subcommand("dro-solve", "solve the DRO dual (bundled fixture by default)");
    dro->add_option("--config", args.config_path, "problem JSON");
    dro->add_flag("--certify", certify, "run the brute-force primal and print the gap");
    dro->add_option("--grid-step", grid_step, "primal grid step (<= 1e-2)");

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run the property/acceptance suites");
    verify->add_option("--suite", suite, "duality|fixture|robust-equiv|interpolation|properties|"
                                         "weights|gradcheck|binary-monotone|all");

    std::string mnist_dir = "data/mnist";
    auto* demo = app.add_subcommand("demo", "desk-scale robustness demonstration");
    demo->add_option("--mnist-dir", mnist_dir, "IDX directory (two-moons fallback when absent)");

    auto* train_cmd = app.add_subcommand("train", "adversarial training from a JSON config");
    train_cmd->add_option("--config", args.config_path, "training config JSON")->required();

    auto* attack = app.add_subcommand("attack-eval", "evaluate a checkpoint under attacks");
    attack->add_option("--config", args.config_path, "evaluation config JSON")->required();

    auto* scan = app.add_subcommand("scan-r", "D^{c_r} sweep over an r ladder, CSV output");
    scan->add_option("--config", args.config_path, "instance JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (divergence->parsed()) return cmd_divergence(args);
        if (dro->parsed()) return cmd_dro_solve(args, certify, grid_step);
        if (verify->parsed()) return cmd_verify(args, suite);
        if (demo->parsed()) return cmd_demo(args, mnist_dir);
        if (train_cmd->parsed()) return cmd_train(args);
        if (attack->parsed()) return cmd_attack_eval(args);
        if (scan->parsed()) return cmd_scan_r(args);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsage;
}
