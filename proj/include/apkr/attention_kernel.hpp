#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "apkr/config.hpp"
#include "apkr/matrix.hpp"
#include "apkr/sketch.hpp"
#include "apkr/solvers.hpp"

namespace apkr {

// Reference kernel G[i][j] = exp(<a_i, a_j>) over the rows of A. Refused
// above the configured exact-kernel size.
DenseMatrix exact_attention_kernel(const DenseMatrix& a,
                                   const Config& cfg = default_config());
DenseMatrix exact_attention_kernel_serial(const DenseMatrix& a,
                                          const Config& cfg = default_config());

// Degree-p tensor sketch of a single vector: repeated squaring through the
// tensor sketch S, combining the powers selected by p's binary digits.
Vector tensor_sketch_lim_rand(const Vector& x, int degree,
                              const TensorSrhtSketch& s, const SrhtSketch& t);

// Stacked per-degree sketches approximating the attention kernel as
// W^T W ~= exp(A A^T). Block l is the degree-l sketch of the data scaled by
// 1/sqrt(l!); block 0 is the all-ones row.
struct KernelFactor {
    std::vector<DenseMatrix> blocks;  // m_l x n, already scaled
    int degree = 0;                   // q
    Index total_rows = 0;             // m
    Index points = 0;                 // n
    double radius = 0;                // max row norm of the data
    Index beta = 0;                   // degree-1 rank bound used for sizing
    std::vector<Index> block_betas;
    std::vector<Index> block_rows;
    double eps = 0;
    double delta = 0;
    std::uint64_t seed = 0;

    Vector apply(const Vector& x) const;             // W x, length m
    Vector apply_transpose(const Vector& u) const;   // W^T u, length n
    DenseMatrix gram() const;                        // W^T W, n x n
    DenseMatrix materialize() const;                 // stacked m x n
};

KernelFactor build_kernel_factor(const DenseMatrix& a, double eps, double delta,
                                 std::uint64_t seed,
                                 std::optional<Index> beta_hint = std::nullopt,
                                 const Config& cfg = default_config());
KernelFactor build_kernel_factor_serial(const DenseMatrix& a, double eps,
                                        double delta, std::uint64_t seed,
                                        std::optional<Index> beta_hint = std::nullopt,
                                        const Config& cfg = default_config());

// SVD-based preconditioner for the factor normal equations, from a sketch of
// W^T. kappa_phi measures the conditioning of the preconditioned operator
// W^T W S^T R actually iterated on.
struct KernelPreconditioner {
    Index inner_rows = 0;  // s
    DenseMatrix u;         // s x m
    Vector sigma;          // m
    DenseMatrix v;         // m x m
    DenseMatrix r_factor;  // s x m, U * Sigma^-2
    double kappa_phi = 0;
    // Measured singular extremes of the preconditioned operator; they set
    // the gradient step so the iteration contracts even when the inner
    // sketch is looser than the nominal eps0.
    double sigma_phi_max = 0;
    double sigma_phi_min = 0;
};

KernelPreconditioner make_kernel_preconditioner(const KernelFactor& f, Index inner_rows,
                                                std::uint64_t seed,
                                                const Config& cfg = default_config());

struct PgdOptions {
    bool force_iterative = false;        // take the GD branch even when m >= n
    std::optional<Index> inner_rows;     // override the sketch size s
};

// Solve min ||W^T W x - y|| to eps_final * ||y||. Dispatches to an exact
// dense solve of the normal equations when m >= n; otherwise runs
// preconditioned gradient descent on the sketched factor.
SolveReport preconditioned_gd(const KernelFactor& f, const Vector& y,
                              double eps_final, double delta_final,
                              std::uint64_t seed, const PgdOptions& opts = {},
                              const Config& cfg = default_config());

// End-to-end attention kernel regression min ||exp(A A^T) x - b||. Builds the
// factor at eps/4, solves the factor problem to eps/2, and reports the true
// kernel residual whenever the exact kernel is computable.
SolveReport attention_kernel_regression(const DenseMatrix& a, const Vector& b,
                                        double eps_final, double delta_final,
                                        std::uint64_t seed,
                                        const Config& cfg = default_config());

// Entrywise range check B[i][j] in [(1 - sqrt(eps)) e^-r, (1 + eps) e^r] for
// matrices spectrally sandwiched around a kernel with entries in [e^-r, e^r].
struct EntryBoundReport {
    bool all_pass = true;
    std::vector<std::pair<Index, Index>> failing;
};

EntryBoundReport kernel_entry_bound_check(const DenseMatrix& b, double r, double eps);

// Diagonal-dominance fact for PSD matrices: B[i][i] B[j][j] >= B[i][j]^2.
bool psd_minor_check(const DenseMatrix& b, double tol = 1e-10);

// Per-degree sketch width used by build_kernel_factor; exposed for tests.
Index kernel_block_rows(int degree, Index beta, Index points, double radius,
                        int truncation, double eps,
                        const Config& cfg = default_config());

// Truncation degree q for radius r and accuracy eps over n points.
int kernel_truncation_degree(Index n, double radius, double eps,
                             const Config& cfg = default_config());

}  // namespace apkr
