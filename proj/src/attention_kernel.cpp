#include "apkr/attention_kernel.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

namespace apkr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_kernel_size(Index n, const Config& cfg) {
    if (n > cfg.max_exact_kernel) {
        throw SizeError("exact_attention_kernel: n = " + std::to_string(n) +
                        " exceeds the exact-kernel limit " +
                        std::to_string(cfg.max_exact_kernel));
    }
}

// Rank bound for the degree-l self-tensoring: min(n, C(d + l - 1, l)),
// computed with early saturation.
Index tensor_rank_bound(Index n, Index d, int l) {
    double bound = 1.0;
    for (int i = 1; i <= l; ++i) {
        bound *= static_cast<double>(d + i - 1) / static_cast<double>(i);
        if (bound >= static_cast<double>(n)) return n;
    }
    return std::min<Index>(n, static_cast<Index>(std::ceil(bound)));
}

KernelFactor build_factor_impl(const DenseMatrix& a, double eps, double delta,
                               std::uint64_t seed, std::optional<Index> beta_hint,
                               const Config& cfg, bool parallel) {
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0)) {
        throw ParameterError("build_kernel_factor: eps and delta must lie in (0, 1)");
    }
    const Index n = a.rows();
    const Index d = a.cols();
    if (n < 1 || d < 1) {
        throw DimensionError("build_kernel_factor: empty data");
    }
    double radius = 0.0;
    for (Index i = 0; i < n; ++i) radius = std::max(radius, a.row(i).norm());
    if (radius > 1.0 + 1e-12 && !cfg.allow_large_radius) {
        throw RadiusError("build_kernel_factor: max row norm " +
                          std::to_string(radius) + " exceeds 1");
    }

    KernelFactor f;
    f.points = n;
    f.radius = radius;
    f.eps = eps;
    f.delta = delta;
    f.seed = seed;
    f.degree = kernel_truncation_degree(n, radius, eps, cfg);
    f.beta = beta_hint ? std::min<Index>(*beta_hint, n) : std::min<Index>(n, d);

    // Degree 0: the constant feature, exactly the all-ones row.
    f.blocks.push_back(DenseMatrix::Ones(1, n));
    f.block_betas.push_back(1);
    f.block_rows.push_back(1);

    for (int l = 1; l <= f.degree; ++l) {
        Index beta_l =
            beta_hint ? std::min<Index>(*beta_hint, n) : tensor_rank_bound(n, d, l);
        Index m_l = kernel_block_rows(l, beta_l, n, radius, f.degree, eps, cfg);
        std::uint64_t seed_t = CounterRng::derive(
            seed, rng_streams::kKernelSketch + 2 * static_cast<std::uint64_t>(l));
        SrhtSketch t_sketch = srht_new(d, m_l, seed_t);
        const double scale = std::exp(-0.5 * std::lgamma(static_cast<double>(l) + 1.0));

        DenseMatrix z(m_l, n);
        if (l == 1) {
            // Degree 1 is a plain SRHT of the data points.
            z = srht_apply(t_sketch, DenseMatrix(a.transpose()));
        } else {
            std::uint64_t seed_s = CounterRng::derive(
                seed,
                rng_streams::kKernelSketch + 2 * static_cast<std::uint64_t>(l) + 1);
            TensorSrhtSketch s_sketch = tensor_srht_new(m_l, m_l, seed_s);
#pragma omp parallel for schedule(dynamic) if (parallel)
            for (Index i = 0; i < n; ++i) {
                Vector zi = tensor_sketch_lim_rand(a.row(i).transpose(), l, s_sketch,
                                                   t_sketch);
                z.col(i) = zi;
            }
        }
        z *= scale;
        f.blocks.push_back(std::move(z));
        f.block_betas.push_back(beta_l);
        f.block_rows.push_back(m_l);
    }
    f.total_rows = 0;
    for (const auto& b : f.blocks) f.total_rows += b.rows();
    return f;
}

}  // namespace

int kernel_truncation_degree(Index n, double radius, double eps, const Config& cfg) {
    double q = cfg.c_q * (radius * radius + std::log(static_cast<double>(n) / eps));
    return std::max(1, static_cast<int>(std::ceil(q)));
}

Index kernel_block_rows(int degree, Index beta, Index points, double radius,
                        int truncation, double eps, const Config& cfg) {
    (void)radius;
    (void)truncation;
    double l = std::max(1, degree);
    double raw = cfg.c_m / (eps * eps) * static_cast<double>(beta) * l * l;
    double cap =
        cfg.block_budget * static_cast<double>(points) / std::pow(2.0, l - 1.0);
    double rows = std::min(raw, cap);
    rows = std::max(rows, static_cast<double>(std::max<Index>(beta, 8)));
    return static_cast<Index>(std::ceil(rows));
}

DenseMatrix exact_attention_kernel_serial(const DenseMatrix& a, const Config& cfg) {
    check_kernel_size(a.rows(), cfg);
    const Index n = a.rows();
    DenseMatrix g(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            double v = std::exp(a.row(i).dot(a.row(j)));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

DenseMatrix exact_attention_kernel(const DenseMatrix& a, const Config& cfg) {
    check_kernel_size(a.rows(), cfg);
    const Index n = a.rows();
    DenseMatrix g(n, n);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            double v = std::exp(a.row(i).dot(a.row(j)));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Vector tensor_sketch_lim_rand(const Vector& x, int degree,
                              const TensorSrhtSketch& s, const SrhtSketch& t) {
    if (degree < 1) {
        throw ParameterError("tensor_sketch_lim_rand: degree must be >= 1");
    }
    int levels = 0;
    while ((1 << (levels + 1)) <= degree) ++levels;  // floor(log2 degree)
    std::vector<Vector> w(static_cast<std::size_t>(levels) + 1);
    w[0] = srht_apply(t, x);
    for (int l = 1; l <= levels; ++l) {
        w[static_cast<std::size_t>(l)] =
            tensor_srht_apply(s, w[static_cast<std::size_t>(l - 1)],
                              w[static_cast<std::size_t>(l - 1)]);
    }
    int lowest = 0;
    while (((degree >> lowest) & 1) == 0) ++lowest;
    Vector z = w[static_cast<std::size_t>(lowest)];
    for (int bit = lowest + 1; bit <= levels; ++bit) {
        if ((degree >> bit) & 1) {
            z = tensor_srht_apply(s, z, w[static_cast<std::size_t>(bit)]);
        }
    }
    return z;
}

Vector KernelFactor::apply(const Vector& x) const {
    if (x.size() != points) {
        throw DimensionError("KernelFactor::apply: length mismatch");
    }
    Vector out(total_rows);
    Index offset = 0;
    for (const auto& block : blocks) {
        out.segment(offset, block.rows()) = block * x;
        offset += block.rows();
    }
    return out;
}

Vector KernelFactor::apply_transpose(const Vector& u) const {
    if (u.size() != total_rows) {
        throw DimensionError("KernelFactor::apply_transpose: length mismatch");
    }
    Vector out = Vector::Zero(points);
    Index offset = 0;
    for (const auto& block : blocks) {
        out.noalias() += block.transpose() * u.segment(offset, block.rows());
        offset += block.rows();
    }
    return out;
}

DenseMatrix KernelFactor::gram() const {
    DenseMatrix g = DenseMatrix::Zero(points, points);
    for (const auto& block : blocks) {
        g.noalias() += block.transpose() * block;
    }
    return 0.5 * (g + DenseMatrix(g.transpose()));
}

DenseMatrix KernelFactor::materialize() const {
    DenseMatrix w(total_rows, points);
    Index offset = 0;
    for (const auto& block : blocks) {
        w.middleRows(offset, block.rows()) = block;
        offset += block.rows();
    }
    return w;
}

KernelFactor build_kernel_factor(const DenseMatrix& a, double eps, double delta,
                                 std::uint64_t seed, std::optional<Index> beta_hint,
                                 const Config& cfg) {
    return build_factor_impl(a, eps, delta, seed, beta_hint, cfg, true);
}

KernelFactor build_kernel_factor_serial(const DenseMatrix& a, double eps,
                                        double delta, std::uint64_t seed,
                                        std::optional<Index> beta_hint,
                                        const Config& cfg) {
    return build_factor_impl(a, eps, delta, seed, beta_hint, cfg, false);
}

KernelPreconditioner make_kernel_preconditioner(const KernelFactor& f,
                                                Index inner_rows, std::uint64_t seed,
                                                const Config& cfg) {
    KernelPreconditioner p;
    p.inner_rows = inner_rows;
    SrhtSketch s = srht_new(f.points, inner_rows,
                            CounterRng::derive(seed, rng_streams::kPreconditioner));
    DenseMatrix wt = f.materialize().transpose();  // n x m
    DenseMatrix swt = srht_apply(s, wt);           // s x m
    Eigen::BDCSVD<DenseMatrix> svd(swt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    p.sigma = svd.singularValues();
    double sigma_max = p.sigma.maxCoeff();
    if (p.sigma.minCoeff() <= cfg.rank_tolerance * sigma_max) {
        throw RankError("make_kernel_preconditioner: sketched factor is "
                        "numerically rank-deficient");
    }
    p.u = svd.matrixU();
    p.v = svd.matrixV();
    p.r_factor = p.u * p.sigma.cwiseAbs2().cwiseInverse().asDiagonal();

    // Condition of the operator the iteration actually sees.
    DenseMatrix str = srht_apply_transpose(s, p.r_factor);  // n x m
    DenseMatrix phi(f.points, p.r_factor.cols());
    for (Index j = 0; j < phi.cols(); ++j) {
        phi.col(j) = f.apply_transpose(f.apply(str.col(j)));
    }
    Eigen::BDCSVD<DenseMatrix> phi_svd(phi);
    p.sigma_phi_max = phi_svd.singularValues().maxCoeff();
    p.sigma_phi_min = phi_svd.singularValues().minCoeff();
    p.kappa_phi = p.sigma_phi_max / p.sigma_phi_min;
    return p;
}

namespace {

// Exact dense solve of the factor normal equations, used when the sketch
// dimension already reaches n.
SolveReport dense_factor_solve(const KernelFactor& f, const Vector& y,
                               const Config& cfg) {
    SolveReport rep;
    rep.branch = "dense";
    DenseMatrix g = f.gram();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(g);
    double lambda_max = eig.eigenvalues().maxCoeff();
    double cutoff = cfg.rank_tolerance * std::max(lambda_max, 0.0);
    if (lambda_max <= 0.0 || eig.eigenvalues().minCoeff() <= cutoff) {
        throw RankError("preconditioned_gd: factor normal matrix is "
                        "numerically rank-deficient");
    }
    Vector coeffs = eig.eigenvectors().transpose() * y;
    coeffs.array() /= eig.eigenvalues().array();
    rep.solution = eig.eigenvectors() * coeffs;
    rep.residual = (g * rep.solution - y).norm();
    rep.converged = true;
    return rep;
}

}  // namespace

SolveReport preconditioned_gd(const KernelFactor& f, const Vector& y,
                              double eps_final, double delta_final,
                              std::uint64_t seed, const PgdOptions& opts,
                              const Config& cfg) {
    auto start = Clock::now();
    if (!(eps_final > 0.0 && eps_final < 1.0) ||
        !(delta_final > 0.0 && delta_final < 1.0)) {
        throw ParameterError("preconditioned_gd: eps and delta must lie in (0, 1)");
    }
    if (y.size() != f.points) {
        throw DimensionError("preconditioned_gd: rhs length must equal point count");
    }
    const Index m = f.total_rows;
    const Index n = f.points;
    if (m >= n && !opts.force_iterative) {
        SolveReport rep = dense_factor_solve(f, y, cfg);
        rep.wall_time_s = seconds_since(start);
        return rep;
    }

    // Sketch rows: the growth formula from the analysis, capped once it
    // exceeds the input dimension (oversampling past n adds nothing).
    Index s_rows;
    if (opts.inner_rows) {
        s_rows = *opts.inner_rows;
    } else {
        double formula = static_cast<double>(m) *
                         std::log(static_cast<double>(m) * n / (cfg.eps0 * delta_final)) *
                         std::log(static_cast<double>(n) / delta_final) /
                         (cfg.eps0 * cfg.eps0);
        double cap = cfg.s_cap_factor * static_cast<double>(std::max(n, 2 * m));
        s_rows = static_cast<Index>(std::ceil(std::min(formula, cap)));
    }
    s_rows = std::max<Index>(s_rows, m);

    KernelPreconditioner pre = make_kernel_preconditioner(f, s_rows, seed, cfg);
    SrhtSketch s = srht_new(n, s_rows,
                            CounterRng::derive(seed, rng_streams::kPreconditioner));
    DenseMatrix p = srht_apply_transpose(s, pre.r_factor);  // S^T R, n x m

    SolveReport rep;
    rep.branch = "gd";
    rep.kappa_estimate = pre.kappa_phi;
    const double y_norm = y.norm();
    if (y_norm == 0.0) {
        rep.solution = Vector::Zero(n);
        rep.wall_time_s = seconds_since(start);
        return rep;
    }
    double kappa_w = pre.sigma.maxCoeff() / pre.sigma.minCoeff();
    const int cap = gd_iteration_cap(kappa_w * kappa_w, eps_final, cfg);
    // Step chosen from the measured spectrum of the preconditioned operator;
    // it is ~1 when the embedding holds at eps0 and keeps the iteration a
    // contraction when the inner sketch is looser.
    const double step = 2.0 / (pre.sigma_phi_max * pre.sigma_phi_max +
                               pre.sigma_phi_min * pre.sigma_phi_min);
    Vector z = Vector::Zero(m);
    Vector x = Vector::Zero(n);
    int t = 0;
    while (true) {
        x = p * z;
        Vector r = f.apply_transpose(f.apply(x)) - y;  // W^T W x - y
        rep.residual = r.norm();
        if (rep.residual <= eps_final * y_norm) {
            rep.converged = true;
            break;
        }
        if (t >= cap) {
            rep.converged = false;
            rep.max_iterations_hit = true;
            break;
        }
        Vector grad = p.transpose() * f.apply_transpose(f.apply(r));
        z -= step * grad;
        ++t;
    }
    rep.iterations = t;
    rep.solution = x;
    rep.wall_time_s = seconds_since(start);
    return rep;
}

SolveReport attention_kernel_regression(const DenseMatrix& a, const Vector& b,
                                        double eps_final, double delta_final,
                                        std::uint64_t seed, const Config& cfg) {
    auto start = Clock::now();
    if (!(eps_final > 0.0 && eps_final < 1.0) ||
        !(delta_final > 0.0 && delta_final < 1.0)) {
        throw ParameterError("attention_kernel_regression: eps and delta must lie "
                             "in (0, 1)");
    }
    if (b.size() != a.rows()) {
        throw DimensionError("attention_kernel_regression: rhs length must equal "
                             "row count");
    }
    KernelFactor f = build_kernel_factor(a, eps_final / 4.0, delta_final / 2.0,
                                         CounterRng::derive(seed, rng_streams::kKernelSketch),
                                         std::nullopt, cfg);
    SolveReport rep = preconditioned_gd(f, b, eps_final / 2.0, delta_final / 2.0,
                                        CounterRng::derive(seed, rng_streams::kPreconditioner),
                                        {}, cfg);
    if (a.rows() <= 512) {
        DenseMatrix g = exact_attention_kernel(a, cfg);
        rep.true_kernel_residual = (g * rep.solution - b).norm() / b.norm();
    }
    rep.wall_time_s = seconds_since(start);
    return rep;
}

EntryBoundReport kernel_entry_bound_check(const DenseMatrix& b, double r, double eps) {
    if (!(r > 0.0)) {
        throw ParameterError("kernel_entry_bound_check: r must be positive");
    }
    if (eps > 0.25 * std::exp(-4.0 * r)) {
        throw ParameterError("kernel_entry_bound_check: eps violates "
                             "eps <= exp(-4r)/4");
    }
    const double lo = (1.0 - std::sqrt(eps)) * std::exp(-r);
    const double hi = (1.0 + eps) * std::exp(r);
    EntryBoundReport rep;
    for (Index i = 0; i < b.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            if (b(i, j) < lo || b(i, j) > hi) {
                rep.all_pass = false;
                rep.failing.emplace_back(i, j);
            }
        }
    }
    return rep;
}

bool psd_minor_check(const DenseMatrix& b, double tol) {
    if (b.rows() != b.cols()) {
        throw DimensionError("psd_minor_check: matrix must be square");
    }
    for (Index i = 0; i < b.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            if (b(i, i) * b(j, j) < b(i, j) * b(i, j) - tol) return false;
        }
    }
    return true;
}

}  // namespace apkr
