#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "apkr/config.hpp"
#include "apkr/matrix.hpp"

namespace apkr {

// In-place fast Walsh-Hadamard transform for the unnormalized Sylvester
// matrix: applying it twice multiplies the input by its length. Length must
// be a power of two.
void fwht(double* data, Index length);
void fwht(Vector& v);

// Subsampled randomized Hadamard transform, kept in factored form: a sign
// diagonal over the padded input space plus row samples drawn with
// replacement. Construction is a pure function of (n, m, seed).
struct SrhtSketch {
    Index input_dim = 0;   // declared input length n
    Index padded_dim = 0;  // power of two >= n
    Index rows = 0;        // m
    std::vector<double> signs;            // length padded_dim, entries +-1
    std::vector<Index> sample_rows;       // length m, values in [0, padded_dim)
    std::uint64_t seed = 0;
};

SrhtSketch srht_new(Index n, Index m, std::uint64_t seed);

// S * x for a length-n vector (zero-padded internally).
Vector srht_apply(const SrhtSketch& s, const Vector& x);

// S * A column by column. The parallel version splits columns across OpenMP
// workers; outputs are bit-identical to the serial one.
DenseMatrix srht_apply(const SrhtSketch& s, const DenseMatrix& a);
DenseMatrix srht_apply_serial(const SrhtSketch& s, const DenseMatrix& a);

// S^T * u: scatter-add over the sampled rows followed by the (self-inverse
// up to scale) Hadamard recursion and the sign diagonal.
Vector srht_apply_transpose(const SrhtSketch& s, const Vector& u);
DenseMatrix srht_apply_transpose(const SrhtSketch& s, const DenseMatrix& u);

// Sketch for order-2 tensors x (x) y, evaluated without forming the tensor:
// out[k] = (H D1 x)_{i_k} (H D2 y)_{j_k} / sqrt(m). The two sign diagonals
// come from independent derived streams.
struct TensorSrhtSketch {
    Index side_dim = 0;  // power of two; inputs are zero-padded to it
    Index rows = 0;      // m
    std::vector<double> signs_left;
    std::vector<double> signs_right;
    std::vector<std::pair<Index, Index>> sample_pairs;  // values in [0, side_dim)^2
    std::uint64_t seed = 0;
};

// max_input is the largest vector length the sketch must accept; the side
// dimension is the next power of two.
TensorSrhtSketch tensor_srht_new(Index max_input, Index m, std::uint64_t seed);

Vector tensor_srht_apply(const TensorSrhtSketch& s, const Vector& x, const Vector& y);

// Statistical verification of the subspace-embedding property. Each trial
// draws a fresh sketch from the factory and measures the singular-value
// range of S * U for an orthonormal basis U of A.
struct EmbeddingReport {
    double min_singular = 0;
    double max_singular = 0;
    double epsilon_observed = 0;  // max(|1 - min|, |max - 1|) over all trials
    int trials = 0;
    double failure_rate = 0;      // fraction of trials with distortion > eps
};

using SrhtFactory = std::function<SrhtSketch(int trial)>;

EmbeddingReport check_embedding(const SrhtFactory& factory, const DenseMatrix& a,
                                double eps, int trials);

// ||U^T S^T S U - I||_2, the Gram route to the same distortion.
double embedding_distortion_gram(const SrhtSketch& s, const DenseMatrix& u);

// Empirical failure rate of the Frobenius-norm approximate matrix product
// property ||A^T B - A^T S^T S B||_F <= eps ||A||_F ||B||_F.
double check_famp(const SrhtFactory& factory, const DenseMatrix& a,
                  const DenseMatrix& b, double eps, int trials);

}  // namespace apkr
