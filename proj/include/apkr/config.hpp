#pragma once

#include <cmath>
#include <cstdint>

#include "apkr/matrix.hpp"

namespace apkr {

// Repo-wide tunables. Defaults are validated by the statistical checks in
// the acceptance suite; the CLI exposes them as flags.
struct Config {
    // Subspace-embedding sketch size: m = ceil(se_constant * eps^-2 * d * ln(n/delta)).
    double se_constant = 8.0;

    // Embedding distortion used by both base solvers.
    double eps_ose = 0.1;

    // Gradient-descent iteration cap: max_iter_scale * ceil(log2(kappa/eps)) + max_iter_base.
    int max_iter_scale = 10;
    int max_iter_base = 50;

    // Stage tolerances are floored here; below it double precision cannot
    // certify residuals anyway.
    double tolerance_floor = 1e-14;

    // Relative residual treated as an exact fit (consistent systems).
    double residual_zero_floor = 1e-14;

    // Repo-wide relative rank cutoff.
    double rank_tolerance = 1e-12;

    // Largest permitted power j (the kappa^{2j} schedule is numerically
    // meaningless beyond this in binary64).
    int max_power = 16;

    // Safety inflation applied to condition-number estimates.
    double kappa_inflation = 1.5;

    // Exact SVD is used for kappa when min(n, d) is at most this; power
    // iteration otherwise.
    Index kappa_svd_cutoff = 512;
    int kappa_power_rounds = 30;

    // Kernel factor: truncation degree q = ceil(c_q * (r^2 + ln(n/eps))).
    double c_q = 2.0;
    // Per-degree sketch rows: m_l = ceil(c_m * eps^-2 * beta_l * max(l,1)^2),
    // capped at block_budget * n / 2^(l-1). The geometric cap follows the
    // 1/l! weight of block l in the kernel sum; the floor keeps every block
    // at least rank-representable.
    double c_m = 8.0;
    double block_budget = 512.0;
    // Inner embedding distortion of the kernel preconditioner.
    double eps0 = 0.01;
    // Inner sketch rows are capped at s_cap_factor * max(n, m); beyond the
    // input dimension extra rows add no information.
    double s_cap_factor = 2.0;

    // Exact kernels are refused above this size.
    Index max_exact_kernel = 2048;

    // Allow kernel-factor construction on data with row norms above 1.
    bool allow_large_radius = false;
};

inline const Config& default_config() {
    static const Config cfg{};
    return cfg;
}

// Sketch rows for an (n, d, eps, delta) subspace embedding.
inline Index srht_embedding_rows(Index n, Index d, double eps, double delta,
                                 const Config& cfg = default_config()) {
    double m = cfg.se_constant / (eps * eps) * static_cast<double>(d) *
               std::log(static_cast<double>(n) / delta);
    return static_cast<Index>(std::ceil(std::max(m, 1.0)));
}

}  // namespace apkr
