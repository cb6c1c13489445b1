#include "apkr/power_regression.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

namespace apkr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_power_inputs(const DenseMatrix& a, double eps, double delta,
                           const char* who) {
    if (a.rows() < 1 || a.cols() < 1 || a.rows() < a.cols()) {
        throw DimensionError(std::string(who) + ": need n >= d >= 1");
    }
    if (!(eps > 0.0 && eps < 0.1)) {
        throw ParameterError(std::string(who) + ": eps must lie in (0, 0.1)");
    }
    if (!(delta > 0.0 && delta < 0.1)) {
        throw ParameterError(std::string(who) + ": delta must lie in (0, 0.1)");
    }
}

// Stage tolerance eps_k / kappa^(2k), computed in log space and floored.
double stage_tolerance(double eps_k, double kappa, int k, bool* floored,
                       const Config& cfg) {
    double log_tol = std::log(eps_k) - 2.0 * k * std::log(std::max(kappa, 1.0));
    double tol = std::exp(log_tol);
    if (tol < cfg.tolerance_floor) {
        *floored = true;
        return cfg.tolerance_floor;
    }
    return tol;
}

// ||(A^T A)^j x - b|| via sequential mat-vec passes.
double even_residual(const DenseMatrix& a, const Vector& x, const Vector& b, int j) {
    Vector w = x;
    for (int k = 0; k < j; ++k) w = a.transpose() * (a * w);
    return (w - b).norm();
}

// ||A (A^T A)^j x - b|| likewise.
double odd_residual(const DenseMatrix& a, const Vector& x, const Vector& b, int j) {
    Vector w = x;
    for (int k = 0; k < j; ++k) w = a.transpose() * (a * w);
    return (a * w - b).norm();
}

// Shared even-power chain over a prepared system; records stages into rep.
Vector run_even_chain(const PrecondSystem& sys, const Vector& b,
                      const PrecisionBudget& budget, SolveReport& rep,
                      const Config& cfg) {
    Vector current = b;
    for (int k = 1; k <= budget.stages; ++k) {
        StageRecord stage;
        stage.eps_k = budget.eps[static_cast<std::size_t>(k - 1)];
        stage.delta_k = budget.delta[static_cast<std::size_t>(k - 1)];
        stage.floored = false;
        stage.tolerance =
            stage_tolerance(stage.eps_k, sys.kappa_est, k, &stage.floored, cfg);
        IterResult it = psd_iterate(sys, current, stage.tolerance, cfg);
        stage.iterations = it.iterations;
        stage.converged = it.converged;
        current = it.x;
        stage.solution = current;
        rep.iterations += it.iterations;
        rep.tolerance_floored = rep.tolerance_floored || stage.floored;
        rep.max_iterations_hit = rep.max_iterations_hit || !it.converged;
        rep.converged = rep.converged && it.converged;
        rep.stage_log.push_back(std::move(stage));
    }
    return current;
}

}  // namespace

PrecisionBudget PrecisionBudget::even_schedule(double eps_final, double delta_final,
                                               int stages) {
    if (stages < 1) {
        throw ParameterError("PrecisionBudget: stage count must be >= 1");
    }
    if (!(eps_final > 0.0 && eps_final < 0.1) ||
        !(delta_final > 0.0 && delta_final < 0.1)) {
        throw ParameterError("PrecisionBudget: eps and delta must lie in (0, 0.1)");
    }
    PrecisionBudget b;
    b.eps_final = eps_final;
    b.delta_final = delta_final;
    b.stages = stages;
    b.eps.resize(static_cast<std::size_t>(stages));
    b.delta.resize(static_cast<std::size_t>(stages));
    for (int k = 1; k <= stages; ++k) {
        b.eps[static_cast<std::size_t>(k - 1)] =
            eps_final * std::pow(0.5, static_cast<double>(stages - k));
        b.delta[static_cast<std::size_t>(k - 1)] = delta_final / k;
    }
    return b;
}

SolveReport even_powers(const DenseMatrix& a, const Vector& b, int power,
                        double eps_final, double delta_final, std::uint64_t seed,
                        const Config& cfg) {
    auto start = Clock::now();
    validate_power_inputs(a, eps_final, delta_final, "even_powers");
    if (power < 1) throw ParameterError("even_powers: power must be >= 1");
    if (power > cfg.max_power) {
        throw ParameterError("even_powers: power exceeds configured maximum " +
                             std::to_string(cfg.max_power));
    }
    if (b.size() != a.cols()) {
        throw DimensionError("even_powers: rhs length must equal column count");
    }
    PrecondSystem sys = make_precond_system(a, delta_final / 2.0, seed, cfg);
    PrecisionBudget budget = PrecisionBudget::even_schedule(eps_final, delta_final, power);
    SolveReport rep;
    rep.kappa_estimate = sys.kappa_est;
    rep.solution = run_even_chain(sys, b, budget, rep, cfg);
    rep.residual = even_residual(a, rep.solution, b, power);
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SolveReport odd_powers(const DenseMatrix& a, const Vector& b, int power,
                       double eps_final, double delta_final, std::uint64_t seed,
                       const Config& cfg) {
    auto start = Clock::now();
    validate_power_inputs(a, eps_final, delta_final, "odd_powers");
    if (power < 1) throw ParameterError("odd_powers: power must be >= 1");
    if (power > cfg.max_power) {
        throw ParameterError("odd_powers: power exceeds configured maximum " +
                             std::to_string(cfg.max_power));
    }
    if (b.size() != a.rows()) {
        throw DimensionError("odd_powers: rhs length must equal row count");
    }
    PrecondSystem sys = make_precond_system(a, delta_final / 4.0, seed, cfg);
    SolveReport rep;
    rep.kappa_estimate = sys.kappa_est;

    IterResult lin = lin_iterate(sys, b, 0.1 * eps_final, cfg);
    StageRecord lin_stage;
    lin_stage.eps_k = 0.1 * eps_final;
    lin_stage.delta_k = delta_final / 2.0;
    lin_stage.tolerance = lin_stage.eps_k;
    lin_stage.iterations = lin.iterations;
    lin_stage.converged = lin.converged;
    lin_stage.solution = lin.x;
    rep.iterations += lin.iterations;
    rep.max_iterations_hit = !lin.converged;
    rep.converged = lin.converged;
    rep.stage_log.push_back(std::move(lin_stage));

    double eps_even = eps_final / sys.kappa_est;
    bool floored = eps_even < cfg.tolerance_floor;
    if (floored) eps_even = cfg.tolerance_floor;
    rep.tolerance_floored = floored;
    // The even schedule is validated for (0, 0.1); eps_even is below
    // eps_final, so build it directly here.
    PrecisionBudget budget;
    budget.eps_final = eps_even;
    budget.delta_final = delta_final / 2.0;
    budget.stages = power;
    for (int k = 1; k <= power; ++k) {
        budget.eps.push_back(eps_even * std::pow(0.5, static_cast<double>(power - k)));
        budget.delta.push_back(delta_final / 2.0 / k);
    }
    rep.solution = run_even_chain(sys, lin.x, budget, rep, cfg);
    rep.residual = odd_residual(a, rep.solution, b, power);
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SolveReport three_matrices(const DenseMatrix& a, const Vector& b, double eps3,
                           double delta3, std::uint64_t seed, const Config& cfg) {
    auto start = Clock::now();
    validate_power_inputs(a, eps3, delta3, "three_matrices");
    if (b.size() != a.rows()) {
        throw DimensionError("three_matrices: rhs length must equal row count");
    }
    PrecondSystem sys = make_precond_system(a, delta3 / 4.0, seed, cfg);
    SolveReport rep;
    rep.kappa_estimate = sys.kappa_est;

    IterResult lin = lin_iterate(sys, b, 0.1 * eps3, cfg);
    StageRecord lin_stage;
    lin_stage.eps_k = 0.1 * eps3;
    lin_stage.delta_k = delta3 / 2.0;
    lin_stage.tolerance = lin_stage.eps_k;
    lin_stage.iterations = lin.iterations;
    lin_stage.converged = lin.converged;
    lin_stage.solution = lin.x;
    rep.stage_log.push_back(std::move(lin_stage));

    double eps2 = eps3 / sys.kappa_est;
    bool floored = eps2 < cfg.tolerance_floor;
    if (floored) eps2 = cfg.tolerance_floor;
    IterResult psd = psd_iterate(sys, lin.x, eps2, cfg);
    StageRecord psd_stage;
    psd_stage.eps_k = eps2;
    psd_stage.delta_k = delta3 / 2.0;
    psd_stage.tolerance = eps2;
    psd_stage.iterations = psd.iterations;
    psd_stage.converged = psd.converged;
    psd_stage.solution = psd.x;
    rep.stage_log.push_back(std::move(psd_stage));

    rep.solution = psd.x;
    rep.iterations = lin.iterations + psd.iterations;
    rep.converged = lin.converged && psd.converged;
    rep.max_iterations_hit = !rep.converged;
    rep.tolerance_floored = floored;
    rep.residual = odd_residual(a, rep.solution, b, 1);
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SolveReport four_matrices(const DenseMatrix& a, const Vector& b4, double eps4,
                          double delta4, std::uint64_t seed, const Config& cfg) {
    auto start = Clock::now();
    validate_power_inputs(a, eps4, delta4, "four_matrices");
    if (b4.size() != a.cols()) {
        throw DimensionError("four_matrices: rhs length must equal column count");
    }
    PrecondSystem sys = make_precond_system(a, delta4 / 4.0, seed, cfg);
    SolveReport rep;
    rep.kappa_estimate = sys.kappa_est;

    double eps2 = 0.1 * eps4 / (sys.kappa_est * sys.kappa_est);
    bool floored = eps2 < cfg.tolerance_floor;
    if (floored) eps2 = cfg.tolerance_floor;
    rep.tolerance_floored = floored;

    Vector current = b4;
    for (int stage = 0; stage < 2; ++stage) {
        IterResult it = psd_iterate(sys, current, eps2, cfg);
        StageRecord record;
        record.eps_k = eps2;
        record.delta_k = delta4 / 2.0;
        record.tolerance = eps2;
        record.iterations = it.iterations;
        record.converged = it.converged;
        current = it.x;
        record.solution = current;
        rep.iterations += it.iterations;
        rep.converged = rep.converged && it.converged;
        rep.stage_log.push_back(std::move(record));
    }
    rep.max_iterations_hit = !rep.converged;
    rep.solution = current;
    rep.residual = even_residual(a, rep.solution, b4, 2);
    rep.wall_time_s = seconds_since(start);
    return rep;
}

AttentionReduction reduce_attention_to_odd(const DenseMatrix& x,
                                           const DenseMatrix& w, const Vector& y) {
    if (w.rows() != w.cols()) {
        throw DimensionError("reduce_attention_to_odd: W must be square");
    }
    if (x.cols() != w.rows()) {
        throw DimensionError("reduce_attention_to_odd: X columns must match W");
    }
    if (y.size() != x.rows()) {
        throw DimensionError("reduce_attention_to_odd: y length must equal X rows");
    }
    double asym = (w - w.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) {
        throw DefinitenessError("reduce_attention_to_odd: W is not symmetric "
                                "(asymmetry " + std::to_string(asym) + ")");
    }
    Eigen::LLT<DenseMatrix> llt(w);
    if (llt.info() != Eigen::Success) {
        throw DefinitenessError("reduce_attention_to_odd: W is not positive definite");
    }
    AttentionReduction red;
    red.factor = llt.matrixL();
    red.x_tilde = x * red.factor;
    red.y = y;
    return red;
}

}  // namespace apkr
