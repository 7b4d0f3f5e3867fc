// Command-line front end: factorization, transform optimization, and the
// bundled experiments. Outputs are binary tensor/matrix files plus CSV and
// JSON reports; failures print a JSON error object to stderr and exit
// nonzero.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "starm/experiments.hpp"
#include "starm/io.hpp"
#include "starm/optim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return json::parse(in);
}

void apply_step_spec(const std::string& spec, starm::OptimConfig& cfg) {
    if (spec == "backtrack") {
        cfg.step_rule = starm::StepRule::Backtracking;
        return;
    }
    if (spec.rfind("fixed:", 0) == 0) {
        cfg.step_rule = starm::StepRule::Fixed;
        cfg.alpha0 = std::stod(spec.substr(6));
        if (cfg.alpha0 <= 0.0)
            throw std::invalid_argument("fixed step must be positive");
        return;
    }
    throw std::invalid_argument("unknown step spec: " + spec);
}

struct OptimizeArgs {
    std::string input;
    std::string input_b;
    std::string objective = "lowrank";
    starm::Index k = 1;
    double lambda = 0.0;
    std::string transform = "identity";
    int iters = 1000;
    double tol = 1e-10;
    std::string step = "backtrack";
    std::uint64_t seed = 0;
    int log_every = 1;
    std::string output = ".";

    void apply_config(const json& config) {
        starm::validate_config_keys(
            config, {},
            {"objective", "input", "input_b", "k", "lambda", "transform",
             "iters", "tol", "step", "seed", "log_every", "output"});
        if (config.contains("objective")) objective = config["objective"];
        if (config.contains("input")) input = config["input"];
        if (config.contains("input_b")) input_b = config["input_b"];
        if (config.contains("k")) k = config["k"].get<starm::Index>();
        if (config.contains("lambda")) lambda = config["lambda"].get<double>();
        if (config.contains("transform")) transform = config["transform"];
        if (config.contains("iters")) iters = config["iters"].get<int>();
        if (config.contains("tol")) tol = config["tol"].get<double>();
        if (config.contains("step")) step = config["step"];
        if (config.contains("seed")) seed = config["seed"].get<std::uint64_t>();
        if (config.contains("log_every"))
            log_every = config["log_every"].get<int>();
        if (config.contains("output")) output = config["output"];
    }
};

int run_optimize(const OptimizeArgs& args) {
    if (args.input.empty())
        throw std::invalid_argument("optimize: --input is required");
    starm::Tensor3d a = starm::read_tensor(args.input);

    starm::OptimConfig cfg;
    cfg.max_iters = args.iters;
    cfg.grad_tol = args.tol;
    cfg.seed = args.seed;
    cfg.log_every = args.log_every;
    apply_step_spec(args.step, cfg);

    starm::Transformd m0 =
        starm::parse_transform_spec(args.transform, a.n3(), &a);

    starm::Objective obj;
    if (args.objective == "lowrank") {
        obj = starm::Objective::low_rank(std::move(a), args.k);
    } else if (args.objective == "regression") {
        if (args.input_b.empty())
            throw std::invalid_argument(
                "optimize: regression needs --input-b observations");
        starm::Tensor3d b = starm::read_tensor(args.input_b);
        obj = starm::Objective::regression(std::move(a), std::move(b),
                                           args.lambda);
    } else {
        throw std::invalid_argument("unknown objective: " + args.objective);
    }

    starm::OptimTrace trace = starm::optimize(obj, m0, cfg);

    fs::create_directories(args.output);
    starm::write_matrix(fs::path(args.output) / "learned_m.stmm", trace.m);
    starm::write_text_file(fs::path(args.output) / "trace.csv",
                           starm::trace_csv(trace, cfg.log_every));

    json summary;
    summary["objective"] = trace.records.back().objective;
    summary["riem_grad_norm"] = trace.records.back().riem_grad_norm;
    summary["iterations"] = trace.records.back().iter;
    summary["converged"] = trace.converged;
    summary["line_search_failed"] = trace.line_search_failed;
    starm::write_text_file(fs::path(args.output) / "summary.json",
                           summary.dump(2) + "\n");
    std::cout << summary.dump(2) << std::endl;
    return 0;
}

int run_tsvdm(const std::string& input, const std::string& transform,
              starm::Index k, const std::string& output) {
    starm::Tensor3d a = starm::read_tensor(input);
    starm::Transformd m = starm::parse_transform_spec(transform, a.n3(), &a);
    auto result = starm::tsvdm_compression(a, m, k);

    fs::create_directories(output);
    const fs::path dir(output);
    starm::write_tensor(dir / "u.stm", result.factors.U);
    starm::write_tensor(dir / "s.stm", result.factors.S);
    starm::write_tensor(dir / "v.stm", result.factors.V);
    starm::write_matrix(dir / "m.stmm", m.matrix());

    json report = starm::compression_report(result);
    report["input"] = input;
    report["transform"] = transform;
    starm::write_text_file(dir / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << std::endl;
    return 0;
}

int run_angle(const std::vector<double>& theta0, double alpha, int iters,
              const std::string& output) {
    auto runs = starm::run_angle_experiment(theta0, alpha, iters);
    starm::write_text_file(output, starm::angle_csv(runs));
    json summary = json::array();
    for (const auto& run : runs) {
        summary.push_back({{"theta0", run.theta0},
                           {"theta_final", run.theta.back()},
                           {"objective_final", run.objective.back()}});
    }
    std::cout << summary.dump(2) << std::endl;
    return 0;
}

int run_synthetic(int d, double noise, const std::string& method, int iters,
                  double tol, std::uint64_t seed, const std::string& output) {
    auto problem = starm::make_synthetic_regression(d, noise, seed);
    starm::OptimConfig cfg;
    cfg.max_iters = iters;
    cfg.grad_tol = tol;
    cfg.seed = seed;
    auto result = starm::run_synthetic_regression(problem, method, cfg);

    fs::create_directories(output);
    const fs::path dir(output);
    starm::write_text_file(dir / (method + "_trace.csv"),
                           starm::trace_csv(result.trace));
    starm::write_matrix(dir / (method + "_m.stmm"), result.trace.m);

    json report;
    report["method"] = method;
    report["d"] = d;
    report["noise"] = noise;
    report["final_objective"] = result.trace.records.back().objective;
    report["converged"] = result.trace.converged;
    report["line_search_failed"] = result.trace.line_search_failed;
    if (result.recovery_computed)
        report["transform_recovery_error"] = result.recovery_error;
    starm::write_text_file(dir / (method + "_report.json"),
                           report.dump(2) + "\n");
    std::cout << report.dump(2) << std::endl;
    return 0;
}

struct RomArgs {
    starm::Index n_space = 64;
    starm::Index n_time = 31;
    double speed_min = 0.5;
    double speed_max = 2.0;
    starm::Index n_speeds = 8;
    double t_final = 2.0;
    starm::Index k = 2;
    int iters = 200;
    double tol = 1e-10;
    std::string step = "backtrack";
    std::uint64_t seed = 0;
    std::string output = "rom_out";

    void apply_config(const json& config) {
        starm::validate_config_keys(
            config, {},
            {"n_space", "n_time", "speed_min", "speed_max", "n_speeds",
             "t_final", "k", "iters", "tol", "step", "seed", "output"});
        if (config.contains("n_space"))
            n_space = config["n_space"].get<starm::Index>();
        if (config.contains("n_time"))
            n_time = config["n_time"].get<starm::Index>();
        if (config.contains("speed_min"))
            speed_min = config["speed_min"].get<double>();
        if (config.contains("speed_max"))
            speed_max = config["speed_max"].get<double>();
        if (config.contains("n_speeds"))
            n_speeds = config["n_speeds"].get<starm::Index>();
        if (config.contains("t_final")) t_final = config["t_final"].get<double>();
        if (config.contains("k")) k = config["k"].get<starm::Index>();
        if (config.contains("iters")) iters = config["iters"].get<int>();
        if (config.contains("tol")) tol = config["tol"].get<double>();
        if (config.contains("step")) step = config["step"];
        if (config.contains("seed")) seed = config["seed"].get<std::uint64_t>();
        if (config.contains("output")) output = config["output"];
    }
};

int run_rom(const RomArgs& args) {
    starm::RomOptions opts;
    opts.wave.n_space = args.n_space;
    opts.wave.n_time = args.n_time;
    opts.wave.t_final = args.t_final;
    opts.wave.speeds =
        starm::equispaced_speeds(args.speed_min, args.speed_max, args.n_speeds);
    opts.k = args.k;
    opts.optim.max_iters = args.iters;
    opts.optim.grad_tol = args.tol;
    opts.optim.seed = args.seed;
    apply_step_spec(args.step, opts.optim);

    auto result = starm::run_rom_experiment(opts);

    fs::create_directories(args.output);
    const fs::path dir(args.output);
    starm::write_tensor(dir / "snapshots.stm", result.snapshots);
    starm::write_tensor(dir / "basis_u.stm", result.learned_basis.U);
    starm::write_matrix(dir / "learned_m.stmm", result.learned_m);
    starm::write_text_file(dir / "trace.csv", starm::trace_csv(result.trace));
    starm::write_text_file(dir / "report.json",
                           starm::rom_report(result).dump(2) + "\n");
    std::cout << starm::rom_report(result).dump(2) << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-mimetic tensor algebra tools"};
    app.require_subcommand(1);

    // --- tsvdm
    auto* tsvdm_cmd =
        app.add_subcommand("tsvdm", "truncated factorization of a tensor file");
    std::string ts_input, ts_transform = "identity", ts_output = ".";
    starm::Index ts_k = 1;
    tsvdm_cmd->add_option("--input", ts_input, "input tensor file")->required();
    tsvdm_cmd->add_option("--transform", ts_transform,
                          "identity|dct|random:SEED|data|file:PATH");
    tsvdm_cmd->add_option("--k", ts_k, "truncation index")->required();
    tsvdm_cmd->add_option("--output", ts_output, "output directory");

    // --- optimize
    auto* opt_cmd =
        app.add_subcommand("optimize", "learn a transform for an objective");
    OptimizeArgs opt_args;
    std::string opt_config;
    opt_cmd->add_option("--input", opt_args.input, "model/data tensor file");
    opt_cmd->add_option("--input-b", opt_args.input_b,
                        "observation tensor file (regression)");
    opt_cmd->add_option("--objective", opt_args.objective,
                        "lowrank|regression");
    opt_cmd->add_option("--k", opt_args.k, "truncation index (lowrank)");
    opt_cmd->add_option("--lambda", opt_args.lambda,
                        "ridge weight (regression)");
    opt_cmd->add_option("--transform", opt_args.transform,
                        "initial transform spec");
    opt_cmd->add_option("--iters", opt_args.iters, "iteration budget");
    opt_cmd->add_option("--tol", opt_args.tol, "gradient tolerance");
    opt_cmd->add_option("--step", opt_args.step, "fixed:A|backtrack");
    opt_cmd->add_option("--seed", opt_args.seed, "seed for random choices");
    opt_cmd->add_option("--log-every", opt_args.log_every, "CSV row stride");
    opt_cmd->add_option("--output", opt_args.output, "output directory");
    opt_cmd->add_option("--config", opt_config,
                        "JSON config; overrides the flags above");

    // --- experiment-angle
    auto* angle_cmd = app.add_subcommand(
        "experiment-angle", "plane-rotation descent trajectories");
    std::vector<double> angle_theta0{0.39269908169872414};  // pi/8
    double angle_alpha = 0.1;
    int angle_iters = 200;
    std::string angle_output = "angle.csv";
    angle_cmd->add_option("--theta0", angle_theta0, "initial angles");
    angle_cmd->add_option("--alpha", angle_alpha, "fixed step size");
    angle_cmd->add_option("--iters", angle_iters, "iteration budget");
    angle_cmd->add_option("--output", angle_output, "CSV output path");

    // --- experiment-synthetic-regression
    auto* synth_cmd = app.add_subcommand("experiment-synthetic-regression",
                                         "transform recovery on planted data");
    int synth_d = 2;
    double synth_noise = 0.0;
    std::string synth_method = "varpro";
    int synth_iters = 5000;
    double synth_tol = 1e-10;
    std::uint64_t synth_seed = 0;
    std::string synth_output = "synthetic_out";
    synth_cmd->add_option("--d", synth_d, "n3 = 2^d, d in 1..4");
    synth_cmd->add_option("--noise", synth_noise, "Gaussian noise level");
    synth_cmd->add_option("--method", synth_method, "varpro|altdesc");
    synth_cmd->add_option("--iters", synth_iters, "iteration budget");
    synth_cmd->add_option("--tol", synth_tol, "gradient tolerance");
    synth_cmd->add_option("--seed", synth_seed, "data/init seed");
    synth_cmd->add_option("--output", synth_output, "output directory");

    // --- experiment-rom
    auto* rom_cmd = app.add_subcommand("experiment-rom",
                                       "wave-snapshot compression study");
    RomArgs rom_args;
    std::string rom_config;
    rom_cmd->add_option("--n-space", rom_args.n_space, "spatial grid nodes");
    rom_cmd->add_option("--n-time", rom_args.n_time, "snapshot count");
    rom_cmd->add_option("--speed-min", rom_args.speed_min, "lowest wave speed");
    rom_cmd->add_option("--speed-max", rom_args.speed_max, "highest wave speed");
    rom_cmd->add_option("--n-speeds", rom_args.n_speeds, "number of speeds");
    rom_cmd->add_option("--t-final", rom_args.t_final, "simulated time span");
    rom_cmd->add_option("--k", rom_args.k, "truncation index");
    rom_cmd->add_option("--iters", rom_args.iters, "optimizer budget");
    rom_cmd->add_option("--tol", rom_args.tol, "gradient tolerance");
    rom_cmd->add_option("--step", rom_args.step, "fixed:A|backtrack");
    rom_cmd->add_option("--seed", rom_args.seed, "seed");
    rom_cmd->add_option("--output", rom_args.output, "output directory");
    rom_cmd->add_option("--config", rom_config,
                        "JSON config; overrides the flags above");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tsvdm_cmd->parsed())
            return run_tsvdm(ts_input, ts_transform, ts_k, ts_output);
        if (opt_cmd->parsed()) {
            if (!opt_config.empty()) opt_args.apply_config(load_config(opt_config));
            return run_optimize(opt_args);
        }
        if (angle_cmd->parsed())
            return run_angle(angle_theta0, angle_alpha, angle_iters,
                             angle_output);
        if (synth_cmd->parsed())
            return run_synthetic(synth_d, synth_noise, synth_method, synth_iters,
                                 synth_tol, synth_seed, synth_output);
        if (rom_cmd->parsed()) {
            if (!rom_config.empty()) rom_args.apply_config(load_config(rom_config));
            return run_rom(rom_args);
        }
    } catch (const std::exception& e) {
        nlohmann::json error;
        error["error"] = e.what();
        std::cerr << error.dump() << std::endl;
        return 1;
    }
    return 0;
}
