#include "starm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "starm/io.hpp"

namespace starm {

namespace {

// Deterministic uniform draws in [-1, 1).
class UniformSampler {
public:
    explicit UniformSampler(std::uint64_t seed) : rng_(seed) {}
    double operator()() {
        return 2.0 * (static_cast<double>(rng_() >> 11) * 0x1.0p-53) - 1.0;
    }

private:
    std::mt19937_64 rng_;
};

std::vector<std::vector<double>> slice_energies(const Tensor3d& a,
                                                const Transformd& m,
                                                bool cumulative) {
    Tensor3d a_hat = mode3_product(a, m.matrix());
    std::vector<std::vector<double>> out;
    for (Index i = 0; i < a.n3(); ++i) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_hat.slice(i));
        Eigen::VectorXd sigma = svd.singularValues();
        const double total = sigma.squaredNorm();
        std::vector<double> row(static_cast<std::size_t>(sigma.size()), 0.0);
        double acc = 0.0;
        for (Index j = 0; j < sigma.size(); ++j) {
            const double part = total > 0.0 ? 100.0 * sigma[j] * sigma[j] / total
                                            : 0.0;
            acc += part;
            row[static_cast<std::size_t>(j)] = cumulative ? acc : part;
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

Transformd parse_transform_spec(const std::string& spec, Index n3,
                                const Tensor3d* data) {
    if (spec == "identity") return make_identity(n3);
    if (spec == "dct") return make_dct(n3);
    if (spec == "data") {
        if (data == nullptr)
            throw std::invalid_argument(
                "transform spec 'data' needs an input tensor");
        return make_data_dependent(*data);
    }
    if (spec.rfind("random:", 0) == 0) {
        const std::uint64_t seed = std::stoull(spec.substr(7));
        return make_random_orthogonal(n3, seed);
    }
    if (spec.rfind("file:", 0) == 0) {
        Eigen::MatrixXd m = read_matrix(spec.substr(5));
        if (m.rows() != n3)
            throw std::invalid_argument("transform file size does not match n3");
        return Transformd(std::move(m), TransformKind::Custom);
    }
    throw std::invalid_argument("unknown transform spec: " + spec);
}

std::string trace_csv(const OptimTrace& trace, int log_every) {
    if (log_every < 1) log_every = 1;
    std::ostringstream out;
    out << "iter,objective,riem_grad_norm,eucl_grad_norm,step,elapsed_s\n";
    const std::size_t last = trace.records.empty() ? 0 : trace.records.size() - 1;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        if (i % static_cast<std::size_t>(log_every) != 0 && i != last) continue;
        const auto& r = trace.records[i];
        out << r.iter << ',' << format_double(r.objective) << ','
            << format_double(r.riem_grad_norm) << ','
            << format_double(r.eucl_grad_norm) << ',' << format_double(r.step)
            << ',' << format_double(r.elapsed_s) << '\n';
    }
    return out.str();
}

void validate_config_keys(const nlohmann::json& config,
                          const std::set<std::string>& required,
                          const std::set<std::string>& optional) {
    if (!config.is_object())
        throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : config.items()) {
        if (!required.contains(key) && !optional.contains(key))
            throw std::invalid_argument("unknown config key: " + key);
    }
    for (const auto& key : required) {
        if (!config.contains(key))
            throw std::invalid_argument("missing config key: " + key);
    }
}

// ---------------------------------------------------------------------------

Objective angle_problem() {
    Tensor3d a = Tensor3d::Zero(3, 2, 2);
    a(0, 0, 0) = 1;
    a(1, 1, 0) = 1;
    a(1, 0, 1) = 1;
    a(2, 1, 1) = 1;
    Tensor3d b = Tensor3d::Zero(3, 1, 2);
    b.slice(0).setOnes();
    b.slice(1).setOnes();
    return Objective::regression(std::move(a), std::move(b));
}

std::vector<AngleRun> run_angle_experiment(const std::vector<double>& theta0,
                                           double alpha, int max_iters,
                                           double grad_tol) {
    const Objective obj = angle_problem();

    std::vector<AngleRun> runs;
    runs.reserve(theta0.size());
    for (double t0 : theta0) {
        AngleRun run;
        run.theta0 = t0;

        Eigen::MatrixXd q0(2, 2);
        q0 << std::cos(t0), -std::sin(t0), std::sin(t0), std::cos(t0);

        OptimConfig cfg;
        cfg.step_rule = StepRule::Fixed;
        cfg.alpha0 = alpha;
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        cfg.observer = [&run](int, const Eigen::MatrixXd& m) {
            run.theta.push_back(std::atan2(m(1, 0), m(0, 0)));
        };

        OptimTrace trace = optimize(obj, Transformd(q0), cfg);
        for (const auto& rec : trace.records) {
            run.objective.push_back(rec.objective);
            // A unit angular speed corresponds to a tangent of norm sqrt(2),
            // so the scalar derivative is sqrt(2) times the projected norm.
            run.grad_abs.push_back(std::sqrt(2.0) * rec.riem_grad_norm);
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

std::string angle_csv(const std::vector<AngleRun>& runs) {
    std::ostringstream out;
    out << "run,theta0,iter,theta,objective,grad_abs\n";
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        for (std::size_t i = 0; i < run.theta.size(); ++i) {
            out << r << ',' << format_double(run.theta0) << ',' << i << ','
                << format_double(run.theta[i]) << ','
                << format_double(run.objective[i]) << ','
                << format_double(run.grad_abs[i]) << '\n';
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------

SyntheticRegression make_synthetic_regression(int d, double noise,
                                              std::uint64_t seed) {
    if (d < 1 || d > 4)
        throw std::invalid_argument("make_synthetic_regression: d must be 1..4");
    const Index n3 = Index(1) << d;
    const Index n1 = 100;

    UniformSampler uniform(seed);
    Tensor3d a_hat(n1, 2, n3);
    Tensor3d b_hat(n1, 1, n3);
    for (Index i = 0; i < n3; ++i) {
        const double slope = -1.0 + 2.0 * static_cast<double>(i + 1) /
                                        static_cast<double>(n3);
        const double intercept = slope;
        for (Index j = 0; j < n1; ++j) {
            const double z = uniform();
            a_hat(j, 0, i) = 1.0;
            a_hat(j, 1, i) = z;
            b_hat(j, 0, i) = intercept + slope * z;
        }
    }

    SyntheticRegression problem;
    problem.m_true = make_dct(n3).matrix();
    problem.a = mode3_product(a_hat, Eigen::MatrixXd(problem.m_true.transpose()));
    problem.b = mode3_product(b_hat, Eigen::MatrixXd(problem.m_true.transpose()));

    if (noise > 0.0) {
        detail::GaussianSampler gauss(seed ^ 0x9e3779b97f4a7c15ull);
        for (Index idx = 0; idx < problem.a.size(); ++idx)
            problem.a.storage()[idx] += noise * gauss();
        for (Index idx = 0; idx < problem.b.size(); ++idx)
            problem.b.storage()[idx] += noise * gauss();
    }
    return problem;
}

double transform_recovery_error(const Eigen::MatrixXd& m,
                                const Eigen::MatrixXd& m_true) {
    const Index n = m.rows();
    if (n != m.cols() || n != m_true.rows() || n != m_true.cols())
        throw std::invalid_argument("transform_recovery_error: shape mismatch");
    if (n > 4)
        throw std::invalid_argument(
            "transform_recovery_error: exhaustive search limited to n3 <= 4");

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index(0));
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (Index r = 0; r < n; ++r) {
            const auto target = m_true.row(perm[static_cast<std::size_t>(r)]);
            cost += std::min((m.row(r) - target).squaredNorm(),
                             (m.row(r) + target).squaredNorm());
        }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

SyntheticRunResult run_synthetic_regression(const SyntheticRegression& problem,
                                            const std::string& method,
                                            const OptimConfig& cfg) {
    const Index n3 = problem.m_true.rows();
    Transformd m0 = make_random_orthogonal(n3, cfg.seed);
    Objective obj = Objective::regression(problem.a, problem.b);

    SyntheticRunResult result;
    if (method == "varpro") {
        result.trace = optimize(obj, m0, cfg);
    } else if (method == "altdesc") {
        Tensor3d x0 = Tensor3d::Zero(problem.a.n2(), problem.b.n2(), n3);
        result.trace = alternating_descent(obj, m0, x0, cfg);
    } else {
        throw std::invalid_argument("unknown method: " + method);
    }

    if (n3 <= 4) {
        result.recovery_error =
            transform_recovery_error(result.trace.m, problem.m_true);
        result.recovery_computed = true;
    }
    return result;
}

// ---------------------------------------------------------------------------

CompressionResult tsvdm_compression(const Tensor3d& a, const Transformd& m,
                                    Index k) {
    CompressionResult result;
    auto factors = tsvdm(a, m);
    result.factors = truncate(factors, k);

    Tensor3d approx = starm_product(
        starm_product(result.factors.U, result.factors.S, m),
        starm_transpose(result.factors.V), m);
    const double denom = frobenius_norm(a);
    result.relative_error =
        denom > 0.0 ? frobenius_norm(a - approx) / denom : 0.0;

    result.energy_pct = slice_energies(a, m, false);
    result.energy_cumulative_pct = slice_energies(a, m, true);
    return result;
}

nlohmann::json compression_report(const CompressionResult& result) {
    nlohmann::json report;
    report["relative_error"] = result.relative_error;
    report["k"] = result.factors.S.n1();
    report["energy_pct"] = result.energy_pct;
    report["energy_cumulative_pct"] = result.energy_cumulative_pct;
    return report;
}

// ---------------------------------------------------------------------------

ProjectionError projection_error(const Tensor3d& x,
                                 const TsvdmFactorsd& truncated) {
    const Transformd& m = truncated.M;
    Tensor3d coeff = starm_product(starm_transpose(truncated.U), x, m);
    Tensor3d projected = starm_product(truncated.U, coeff, m);

    ProjectionError err;
    const double denom = frobenius_norm(x);
    err.global = denom > 0.0 ? frobenius_norm(x - projected) / denom : 0.0;
    for (Index i = 0; i < x.n3(); ++i) {
        const double slice_denom = x.slice(i).norm();
        const double slice_err = (x.slice(i) - projected.slice(i)).norm();
        err.per_parameter.push_back(
            slice_denom > 0.0 ? slice_err / slice_denom : 0.0);
    }
    return err;
}

namespace {

RomEntry rom_entry(const std::string& name, const Tensor3d& x,
                   const Transformd& m, Index k) {
    RomEntry entry;
    entry.name = name;
    auto truncated = truncate(tsvdm(x, m), k);
    auto err = projection_error(x, truncated);
    entry.global_error = err.global;
    entry.per_parameter_error = std::move(err.per_parameter);
    entry.energy_cumulative_pct = slice_energies(x, m, true);
    return entry;
}

}  // namespace

RomResult run_rom_experiment(const RomOptions& opts) {
    RomResult result;
    auto wave = wave_snapshots(opts.wave);
    result.snapshots = std::move(wave.snapshots);
    result.dt_used = std::move(wave.dt_used);
    const Tensor3d& x = result.snapshots;
    const Index n3 = x.n3();

    const std::vector<std::pair<std::string, Transformd>> candidates = {
        {"identity", make_identity(n3)},
        {"dct", make_dct(n3)},
        {"data", make_data_dependent(x)},
    };
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        result.heuristics.push_back(
            rom_entry(candidates[i].first, x, candidates[i].second, opts.k));
        if (result.heuristics[i].global_error <
            result.heuristics[best].global_error)
            best = i;
    }

    // Optimize from the best heuristic; descent keeps the learned transform
    // at least as good on the training objective.
    result.init_name = candidates[best].first;
    Objective obj = Objective::low_rank(x, opts.k);
    result.trace = optimize(obj, candidates[best].second, opts.optim);
    result.learned_m = result.trace.m;

    Transformd learned(result.learned_m, TransformKind::Learned);
    result.learned = rom_entry("learned", x, learned, opts.k);
    result.learned_basis = truncate(tsvdm(x, learned), opts.k);
    return result;
}

nlohmann::json rom_report(const RomResult& result) {
    nlohmann::json report;
    report["k"] = result.learned_basis.S.n1();
    report["init"] = result.init_name;
    report["dt_used"] = result.dt_used;
    auto entry_json = [](const RomEntry& e) {
        nlohmann::json j;
        j["global_error"] = e.global_error;
        j["per_parameter_error"] = e.per_parameter_error;
        j["energy_cumulative_pct"] = e.energy_cumulative_pct;
        return j;
    };
    for (const auto& h : result.heuristics) report[h.name] = entry_json(h);
    report["learned"] = entry_json(result.learned);
    report["final_objective"] = result.trace.records.back().objective;
    report["iterations"] =
        result.trace.records.empty() ? 0 : result.trace.records.back().iter;
    return report;
}

}  // namespace starm
