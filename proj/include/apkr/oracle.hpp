#pragma once

#include <cstdint>

#include "apkr/config.hpp"
#include "apkr/matrix.hpp"

namespace apkr {

// Exact singular-value extremes of a matrix. kappa is +inf for
// rank-deficient input (sentinel, not an error).
struct SpectrumInfo {
    double sigma_min = 0;
    double sigma_max = 0;
    double kappa = 0;
    double rank_tol = 0;
};

struct OracleReport {
    Vector exact_solution;
    double exact_cost = 0;            // OPT of the least-squares objective
    double residual_of_candidate = 0; // ||M c - b|| for the supplied candidate
    double relative_gap = 0;          // (residual_of_candidate - exact_cost) / ||b||
};

// Minimum-norm least squares via full SVD with the repo rank tolerance.
// When a candidate is supplied, its residual and gap are filled in.
OracleReport svd_lstsq(const DenseMatrix& m, const Vector& b);
OracleReport svd_lstsq(const DenseMatrix& m, const Vector& b, const Vector& candidate);

enum class Parity { kEven, kOdd };

// (A^T A)^j or A (A^T A)^j by repeated squaring of the Gram matrix.
DenseMatrix dense_power_matrix(const DenseMatrix& a, int j, Parity parity);

SpectrumInfo spectrum(const DenseMatrix& a);

// Checks (1 - eps) K <= Kapprox <= (1 + eps) K in the PSD order, allowing
// eigenvalues of the two difference matrices down to -slack.
bool spectral_sandwich(const DenseMatrix& k_exact, const DenseMatrix& k_approx,
                       double eps, double slack = 1e-8);

// Random n x d test matrix with orthonormal factors and a geometric spectrum
// running from 1 to kappa_target. Pure function of the arguments.
DenseMatrix gen_matrix(Index n, Index d, double kappa_target, std::uint64_t seed);

}  // namespace apkr
