#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apkr/config.hpp"
#include "apkr/matrix.hpp"
#include "apkr/sketch.hpp"

namespace apkr {

// R such that the sketched matrix S*A*R has orthonormal columns; A*R is then
// well conditioned whenever the embedding event holds.
struct Preconditioner {
    DenseMatrix r_factor;   // d x d
    double kappa_ar = 0;    // observed condition number of A*R
    Index sketch_dim = 0;   // m
    std::uint64_t seed = 0;
};

struct StageRecord {
    double eps_k = 0;
    double delta_k = 0;
    double tolerance = 0;  // tolerance actually passed to the stage solver
    int iterations = 0;
    bool floored = false;
    bool converged = true;
    Vector solution;       // b_k, kept for the induction audit
};

struct SolveReport {
    Vector solution;
    double residual = 0;  // measured in the solved objective at exit
    int iterations = 0;   // total gradient steps across stages
    bool max_iterations_hit = false;
    bool tolerance_floored = false;
    bool converged = true;
    double wall_time_s = 0;
    double kappa_estimate = 1;
    std::vector<StageRecord> stage_log;
    // Filled only by the kernel path: relative residual against the exact
    // kernel when it is computable.
    double true_kernel_residual = -1;
    // Which branch ran ("gd", "dense", ...); empty for the power solvers.
    std::string branch;
};

Preconditioner build_preconditioner(const DenseMatrix& a, double delta_ose,
                                    std::uint64_t seed,
                                    const Config& cfg = default_config());

// Preconditioned view of a fixed matrix. Chained solvers build it once and
// reuse it across stages: the embedding event is shared, so the failure
// probability only improves, and the per-stage QR cost is paid once.
struct PrecondSystem {
    const DenseMatrix* a = nullptr;
    Preconditioner pre;
    DenseMatrix sketch_q;  // m x d, orthonormal columns of the sketched QR
    SrhtSketch sketch;
    double kappa_est = 1;
    // Measured extremes of A*R, used by the certified stopping rules.
    double sigma_min_ar = 1;
    double sigma_max_ar = 1;
};

PrecondSystem make_precond_system(const DenseMatrix& a, double delta_ose,
                                  std::uint64_t seed,
                                  const Config& cfg = default_config());

struct IterResult {
    Vector x;
    int iterations = 0;
    bool converged = true;
    double residual = 0;
};

// Single preconditioned solves against a prepared system.
// psd_iterate: ||A^T A x - b2|| <= eps2 ||b2||.
// lin_iterate: ||A x - b1|| <= (1 + eps1) OPT (certified from measurable
// quantities; see the stopping rule in the implementation).
IterResult psd_iterate(const PrecondSystem& sys, const Vector& b2, double eps2,
                       const Config& cfg = default_config());
IterResult lin_iterate(const PrecondSystem& sys, const Vector& b1, double eps1,
                       const Config& cfg = default_config());

SolveReport fast_linear_regression(const DenseMatrix& a, const Vector& b1,
                                   double eps1, double delta1, std::uint64_t seed,
                                   const Config& cfg = default_config());

SolveReport fast_psd_regression(const DenseMatrix& a, const Vector& b2,
                                double eps2, double delta2, std::uint64_t seed,
                                const Config& cfg = default_config());

struct GdResult {
    Vector solution;
    int iterations = 0;
    bool converged = true;
};

// Gradient descent x <- x - B^T (B x - y) for a square B whose singular
// values the caller certifies to lie in [3/4, 5/4]. Stops once the normal
// residual has dropped by target_eps relative to its initial value.
GdResult gd_well_conditioned(const DenseMatrix& b, const Vector& y,
                             double target_eps, int max_iter);

// Inflated condition-number estimate. Uses an exact SVD when min(n, d) is
// small; otherwise power iteration plus the preconditioner's R factor.
double estimate_condition_number(const DenseMatrix& a, const Preconditioner* pre,
                                 std::uint64_t seed,
                                 const Config& cfg = default_config());

// Iteration cap shared by all gradient loops.
int gd_iteration_cap(double kappa, double eps, const Config& cfg = default_config());

}  // namespace apkr
