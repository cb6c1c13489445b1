#include "apkr/solvers.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

namespace apkr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_tall(const DenseMatrix& a, const char* who) {
    if (a.rows() < 1 || a.cols() < 1 || a.rows() < a.cols()) {
        throw DimensionError(std::string(who) + ": need n >= d >= 1, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
}

void validate_accuracy(double eps, double delta, const char* who) {
    if (!(eps > 0.0 && eps < 0.1)) {
        throw ParameterError(std::string(who) + ": eps must lie in (0, 0.1)");
    }
    if (!(delta > 0.0 && delta < 0.1)) {
        throw ParameterError(std::string(who) + ": delta must lie in (0, 0.1)");
    }
}

}  // namespace

int gd_iteration_cap(double kappa, double eps, const Config& cfg) {
    double ratio = std::max(kappa, 1.0) / std::max(eps, 1e-300);
    int doublings = ratio > 1.0 ? static_cast<int>(std::ceil(std::log2(ratio))) : 0;
    return cfg.max_iter_scale * doublings + cfg.max_iter_base;
}

Preconditioner build_preconditioner(const DenseMatrix& a, double delta_ose,
                                    std::uint64_t seed, const Config& cfg) {
    PrecondSystem sys = make_precond_system(a, delta_ose, seed, cfg);
    return sys.pre;
}

PrecondSystem make_precond_system(const DenseMatrix& a, double delta_ose,
                                  std::uint64_t seed, const Config& cfg) {
    validate_tall(a, "build_preconditioner");
    if (!(delta_ose > 0.0 && delta_ose < 1.0)) {
        throw ParameterError("build_preconditioner: delta must lie in (0, 1)");
    }
    const Index n = a.rows();
    const Index d = a.cols();
    const Index m = srht_embedding_rows(n, d, cfg.eps_ose, delta_ose, cfg);

    PrecondSystem sys;
    sys.a = &a;
    sys.sketch = srht_new(n, m, CounterRng::derive(seed, rng_streams::kPreconditioner));
    DenseMatrix sa = srht_apply(sys.sketch, a);

    Eigen::HouseholderQR<DenseMatrix> qr(sa);
    DenseMatrix t = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    double max_diag = t.diagonal().cwiseAbs().maxCoeff();
    if (max_diag <= 0.0 ||
        t.diagonal().cwiseAbs().minCoeff() < cfg.rank_tolerance * max_diag) {
        throw RankError("build_preconditioner: sketched matrix is numerically "
                        "rank-deficient");
    }
    sys.sketch_q = qr.householderQ() * DenseMatrix::Identity(m, d);

    sys.pre.r_factor = t.triangularView<Eigen::Upper>().solve(DenseMatrix::Identity(d, d));
    sys.pre.sketch_dim = m;
    sys.pre.seed = seed;

    DenseMatrix ar = a * sys.pre.r_factor;
    Eigen::BDCSVD<DenseMatrix> svd(ar);
    sys.sigma_min_ar = svd.singularValues().minCoeff();
    sys.sigma_max_ar = svd.singularValues().maxCoeff();
    sys.pre.kappa_ar = sys.sigma_max_ar / sys.sigma_min_ar;

    sys.kappa_est = estimate_condition_number(a, &sys.pre, seed, cfg);
    return sys;
}

double estimate_condition_number(const DenseMatrix& a, const Preconditioner* pre,
                                 std::uint64_t seed, const Config& cfg) {
    const Index n = a.rows();
    const Index d = a.cols();
    if (std::min(n, d) <= cfg.kappa_svd_cutoff || pre == nullptr) {
        Eigen::BDCSVD<DenseMatrix> svd(a);
        double lo = svd.singularValues().minCoeff();
        double hi = svd.singularValues().maxCoeff();
        if (lo <= cfg.rank_tolerance * hi) {
            throw RankError("estimate_condition_number: matrix is rank-deficient");
        }
        return cfg.kappa_inflation * hi / lo;
    }
    // Power iteration for sigma_max(A); sigma_min(A) is bounded below through
    // the preconditioner: sigma_min(A) >= sigma_min(AR) / sigma_max(R).
    CounterRng rng(CounterRng::derive(seed, rng_streams::kConditionEstimate));
    Vector v(d);
    for (Index i = 0; i < d; ++i) v[i] = rng.next_gaussian();
    v.normalize();
    double sigma_max_a = 0.0;
    for (int round = 0; round < cfg.kappa_power_rounds; ++round) {
        Vector w = a.transpose() * (a * v);
        double norm = w.norm();
        if (norm == 0.0) break;
        v = w / norm;
        sigma_max_a = std::sqrt(norm);
    }
    Vector u(d);
    for (Index i = 0; i < d; ++i) u[i] = rng.next_gaussian();
    u.normalize();
    double sigma_max_r = 0.0;
    const DenseMatrix& r = pre->r_factor;
    for (int round = 0; round < cfg.kappa_power_rounds; ++round) {
        Vector w = r.transpose() * (r * u);
        double norm = w.norm();
        if (norm == 0.0) break;
        u = w / norm;
        sigma_max_r = std::sqrt(norm);
    }
    double kappa = sigma_max_a * sigma_max_r / (1.0 - cfg.eps_ose);
    return cfg.kappa_inflation * std::max(kappa, 1.0);
}

IterResult psd_iterate(const PrecondSystem& sys, const Vector& b2, double eps2,
                       const Config& cfg) {
    const DenseMatrix& a = *sys.a;
    const DenseMatrix& r = sys.pre.r_factor;
    const Index d = a.cols();
    if (b2.size() != d) {
        throw DimensionError("fast_psd_regression: rhs length does not match columns");
    }
    IterResult res;
    const double b_norm = b2.norm();
    if (b_norm == 0.0) {
        res.x = Vector::Zero(d);
        return res;
    }
    const double eps_internal = std::max(eps2 / (2.0 * sys.kappa_est), 1e-300);
    const int cap = gd_iteration_cap(sys.kappa_est, eps_internal, cfg);
    Vector z = Vector::Zero(d);
    int t = 0;
    while (true) {
        Vector x = r * z;
        Vector v = a.transpose() * (a * x);  // A^T A x, shared with the residual test
        res.residual = (v - b2).norm();
        if (res.residual <= eps2 * b_norm) {
            res.x = std::move(x);
            res.converged = true;
            break;
        }
        if (t >= cap) {
            res.x = std::move(x);
            res.converged = false;
            break;
        }
        Vector q = r.transpose() * (v - b2);           // M z - R^T b2
        Vector s = r.transpose() * (a.transpose() * (a * (r * q)));  // M q
        z -= s;
        ++t;
    }
    res.iterations = t;
    return res;
}

IterResult lin_iterate(const PrecondSystem& sys, const Vector& b1, double eps1,
                       const Config& cfg) {
    const DenseMatrix& a = *sys.a;
    const DenseMatrix& r = sys.pre.r_factor;
    if (b1.size() != a.rows()) {
        throw DimensionError("fast_linear_regression: rhs length does not match rows");
    }
    IterResult res;
    const double b_norm = b1.norm();
    if (b_norm == 0.0) {
        res.x = Vector::Zero(a.cols());
        return res;
    }
    // Sketched initial iterate: z0 = argmin ||S A R z - S b1||, and S A R is
    // the orthonormal Q of the preconditioner build.
    Vector sb = srht_apply(sys.sketch, b1);
    Vector z = sys.sketch_q.transpose() * sb;

    // Certified stop: with u = A R (z - z*), cost^2 = OPT^2 + ||u||^2 and the
    // gradient pins ||u|| within the measured spectrum of A R. Once the upper
    // bound on ||u||^2 drops below (2 eps + eps^2) times the implied lower
    // bound on OPT^2, the iterate is (1 + eps)-optimal.
    const double sigma_lb = 0.95 * std::min(sys.sigma_min_ar, 1.0);
    const double gap_factor = 2.0 * eps1 + eps1 * eps1;
    const int cap = gd_iteration_cap(sys.kappa_est, eps1, cfg);
    int t = 0;
    while (true) {
        Vector resid = a * (r * z) - b1;
        res.residual = resid.norm();
        if (res.residual <= cfg.residual_zero_floor * b_norm) {
            res.converged = true;
            break;
        }
        Vector g = r.transpose() * (a.transpose() * resid);
        double u_ub = g.norm() / sigma_lb;
        double opt_lb_sq = res.residual * res.residual - u_ub * u_ub;
        if (opt_lb_sq > 0.0 && u_ub * u_ub <= gap_factor * opt_lb_sq) {
            res.converged = true;
            break;
        }
        if (t >= cap) {
            res.converged = false;
            break;
        }
        z -= g;
        ++t;
    }
    res.x = r * z;
    res.iterations = t;
    return res;
}

SolveReport fast_linear_regression(const DenseMatrix& a, const Vector& b1,
                                   double eps1, double delta1, std::uint64_t seed,
                                   const Config& cfg) {
    auto start = Clock::now();
    validate_tall(a, "fast_linear_regression");
    validate_accuracy(eps1, delta1, "fast_linear_regression");
    PrecondSystem sys = make_precond_system(a, delta1 / 2.0, seed, cfg);
    IterResult it = lin_iterate(sys, b1, eps1, cfg);
    SolveReport rep;
    rep.solution = std::move(it.x);
    rep.residual = it.residual;
    rep.iterations = it.iterations;
    rep.converged = it.converged;
    rep.max_iterations_hit = !it.converged;
    rep.kappa_estimate = sys.kappa_est;
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SolveReport fast_psd_regression(const DenseMatrix& a, const Vector& b2,
                                double eps2, double delta2, std::uint64_t seed,
                                const Config& cfg) {
    auto start = Clock::now();
    validate_tall(a, "fast_psd_regression");
    validate_accuracy(eps2, delta2, "fast_psd_regression");
    PrecondSystem sys = make_precond_system(a, delta2 / 2.0, seed, cfg);
    IterResult it = psd_iterate(sys, b2, eps2, cfg);
    SolveReport rep;
    rep.solution = std::move(it.x);
    rep.residual = it.residual;
    rep.iterations = it.iterations;
    rep.converged = it.converged;
    rep.max_iterations_hit = !it.converged;
    rep.kappa_estimate = sys.kappa_est;
    rep.wall_time_s = seconds_since(start);
    return rep;
}

GdResult gd_well_conditioned(const DenseMatrix& b, const Vector& y,
                             double target_eps, int max_iter) {
    if (b.rows() != b.cols()) {
        throw DimensionError("gd_well_conditioned: matrix must be square");
    }
    if (y.size() != b.rows()) {
        throw DimensionError("gd_well_conditioned: rhs length does not match");
    }
    GdResult res;
    res.solution = Vector::Zero(b.rows());
    const double initial = (b.transpose() * y).norm();
    if (initial == 0.0) return res;
    for (int t = 0; t < max_iter; ++t) {
        Vector g = b.transpose() * (b * res.solution - y);
        if (g.norm() <= target_eps * initial) {
            res.converged = true;
            res.iterations = t;
            return res;
        }
        res.solution -= g;
        res.iterations = t + 1;
    }
    res.converged =
        (b.transpose() * (b * res.solution - y)).norm() <= target_eps * initial;
    return res;
}

}  // namespace apkr
