#pragma once

// Experiment drivers behind the command-line tool: the planar-rotation
// regression study, the synthetic transform-recovery problem, truncated
// factorization of tensor files, and the wave-snapshot compression study.

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "starm/optim.hpp"
#include "starm/tsvdm.hpp"
#include "starm/wave.hpp"

namespace starm {

// Builds a transform from a spec string: identity | dct | random:SEED |
// data | file:PATH. The data tensor is needed only for "data".
Transformd parse_transform_spec(const std::string& spec, Index n3,
                                const Tensor3d* data = nullptr);

// CSV with columns iter,objective,riem_grad_norm,eucl_grad_norm,step,
// elapsed_s; rows sampled every log_every iterations (first and last always
// included).
std::string trace_csv(const OptimTrace& trace, int log_every = 1);

// Rejects unknown keys and missing required keys.
void validate_config_keys(const nlohmann::json& config,
                          const std::set<std::string>& required,
                          const std::set<std::string>& optional);

// ---------------------------------------------------------------------------
// Planar-rotation study: a fixed 3 x 2 x 2 regression pair whose reduced
// objective depends on a 2 x 2 rotation angle only.

Objective angle_problem();

struct AngleRun {
    double theta0 = 0;
    std::vector<double> theta;      // iterate angles
    std::vector<double> objective;  // reduced objective per iterate
    std::vector<double> grad_abs;   // |d objective / d theta| per iterate
};

std::vector<AngleRun> run_angle_experiment(const std::vector<double>& theta0,
                                           double alpha, int max_iters,
                                           double grad_tol = 1e-10);

std::string angle_csv(const std::vector<AngleRun>& runs);

// ---------------------------------------------------------------------------
// Synthetic regression with a known optimal transform.

struct SyntheticRegression {
    Tensor3d a;             // n1 x 2 x n3
    Tensor3d b;             // n1 x 1 x n3
    Eigen::MatrixXd m_true; // the transform that zeroes the objective
};

// n3 = 2^d slicewise linear models sampled at n1 = 100 points, mapped to the
// spatial domain through the cosine transform, plus optional Gaussian noise.
SyntheticRegression make_synthetic_regression(int d, double noise,
                                              std::uint64_t seed);

// min over row permutations and per-row signs of |m - P D m_true|_F;
// exhaustive, so callers restrict to n3 <= 4.
double transform_recovery_error(const Eigen::MatrixXd& m,
                                const Eigen::MatrixXd& m_true);

struct SyntheticRunResult {
    OptimTrace trace;
    double recovery_error = 0;
    bool recovery_computed = false;
};

// method: "varpro" or "altdesc". The initial transform is seeded random
// orthogonal; the baseline starts its representation at zero.
SyntheticRunResult run_synthetic_regression(const SyntheticRegression& problem,
                                            const std::string& method,
                                            const OptimConfig& cfg);

// ---------------------------------------------------------------------------
// Truncated factorization of a tensor under a fixed transform.

struct CompressionResult {
    TsvdmFactorsd factors;                                  // truncated to k
    double relative_error = 0;                              // |A - A_k| / |A|
    std::vector<std::vector<double>> energy_pct;            // per slice
    std::vector<std::vector<double>> energy_cumulative_pct; // per slice
};

CompressionResult tsvdm_compression(const Tensor3d& a, const Transformd& m,
                                    Index k);

nlohmann::json compression_report(const CompressionResult& result);

// ---------------------------------------------------------------------------
// Wave-snapshot study: compare heuristic transforms against an optimized one
// at a fixed truncation.

struct RomOptions {
    WaveConfig wave;
    Index k = 2;
    OptimConfig optim;
};

struct RomEntry {
    std::string name;
    double global_error = 0;
    std::vector<double> per_parameter_error;
    std::vector<std::vector<double>> energy_cumulative_pct;  // per slice
};

struct RomResult {
    Tensor3d snapshots;
    std::vector<double> dt_used;
    std::vector<RomEntry> heuristics;  // identity, dct, data
    RomEntry learned;
    std::string init_name;  // heuristic the optimizer started from
    Eigen::MatrixXd learned_m;
    TsvdmFactorsd learned_basis;  // truncated factors under the learned transform
    OptimTrace trace;
};

RomResult run_rom_experiment(const RomOptions& opts);

nlohmann::json rom_report(const RomResult& result);

// Relative projection error through the truncated basis, per slice and
// globally.
struct ProjectionError {
    double global = 0;
    std::vector<double> per_parameter;
};

ProjectionError projection_error(const Tensor3d& x,
                                 const TsvdmFactorsd& truncated);

}  // namespace starm
