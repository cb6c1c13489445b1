#pragma once

#include <cstdint>

#include "apkr/config.hpp"
#include "apkr/matrix.hpp"
#include "apkr/solvers.hpp"

namespace apkr {

// Stage schedule for the chained power solvers: eps_k = eps_final * 0.5^(j-k),
// delta_k = delta_final / k. Earlier stages are solved tighter; each eps_k is
// twice the previous one.
struct PrecisionBudget {
    double eps_final = 0;
    double delta_final = 0;
    int stages = 0;
    std::vector<double> eps;    // index k-1 holds eps_k
    std::vector<double> delta;

    static PrecisionBudget even_schedule(double eps_final, double delta_final,
                                         int stages);
};

// min ||A A^T A x - b||: one overconstrained solve feeding one PSD solve.
SolveReport three_matrices(const DenseMatrix& a, const Vector& b, double eps3,
                           double delta3, std::uint64_t seed,
                           const Config& cfg = default_config());

// min ||(A^T A)^2 x - b4||: two chained PSD solves.
SolveReport four_matrices(const DenseMatrix& a, const Vector& b4, double eps4,
                          double delta4, std::uint64_t seed,
                          const Config& cfg = default_config());

// min ||(A^T A)^j x - b||.
SolveReport even_powers(const DenseMatrix& a, const Vector& b, int power,
                        double eps_final, double delta_final, std::uint64_t seed,
                        const Config& cfg = default_config());

// min ||A (A^T A)^j x - b||: overconstrained solve, then the even chain.
SolveReport odd_powers(const DenseMatrix& a, const Vector& b, int power,
                       double eps_final, double delta_final, std::uint64_t seed,
                       const Config& cfg = default_config());

// Reduction of min ||X W X^T X v - y|| (W symmetric PD) to the plain cubic
// problem on X~ = X U with W = U U^T. Solutions map back as v = U v~, and
// corresponding residuals are identical.
struct AttentionReduction {
    DenseMatrix x_tilde;
    DenseMatrix factor;  // lower-triangular U
    Vector y;

    Vector recover(const Vector& v_tilde) const { return factor * v_tilde; }
};

AttentionReduction reduce_attention_to_odd(const DenseMatrix& x,
                                           const DenseMatrix& w, const Vector& y);

}  // namespace apkr
