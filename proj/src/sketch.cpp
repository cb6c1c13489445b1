#include "apkr/sketch.hpp"

#include <bit>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apkr {

namespace {

bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Index next_pow2(Index n) {
    return static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(n)));
}

// Copy a length-n column into the padded scratch buffer with the sign
// diagonal applied, transform, then gather the sampled rows.
void sketch_column(const SrhtSketch& s, const double* col, Index stride, Index n,
                   double* scratch, double* out, Index out_stride) {
    for (Index i = 0; i < n; ++i) scratch[i] = s.signs[i] * col[i * stride];
    for (Index i = n; i < s.padded_dim; ++i) scratch[i] = 0.0;
    fwht(scratch, s.padded_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
    for (Index k = 0; k < s.rows; ++k) {
        out[k * out_stride] = scale * scratch[s.sample_rows[k]];
    }
}

}  // namespace

void fwht(double* data, Index length) {
    if (!is_pow2(length)) {
        throw DimensionError("fwht: length " + std::to_string(length) +
                             " is not a power of two");
    }
    for (Index half = 1; half < length; half *= 2) {
        for (Index block = 0; block < length; block += 2 * half) {
            for (Index i = block; i < block + half; ++i) {
                double lo = data[i];
                double hi = data[i + half];
                data[i] = lo + hi;
                data[i + half] = lo - hi;
            }
        }
    }
}

void fwht(Vector& v) { fwht(v.data(), v.size()); }

SrhtSketch srht_new(Index n, Index m, std::uint64_t seed) {
    if (n < 1 || m < 1) {
        throw DimensionError("srht_new: dimensions must be positive, got n=" +
                             std::to_string(n) + " m=" + std::to_string(m));
    }
    SrhtSketch s;
    s.input_dim = n;
    s.padded_dim = next_pow2(n);
    s.rows = m;
    s.seed = seed;
    CounterRng sign_rng(CounterRng::derive(seed, rng_streams::kSrhtSigns));
    s.signs.resize(static_cast<std::size_t>(s.padded_dim));
    for (auto& v : s.signs) v = sign_rng.next_sign();
    CounterRng sample_rng(CounterRng::derive(seed, rng_streams::kSrhtSamples));
    s.sample_rows.resize(static_cast<std::size_t>(m));
    for (auto& r : s.sample_rows) {
        r = static_cast<Index>(
            sample_rng.next_below(static_cast<std::uint64_t>(s.padded_dim)));
    }
    return s;
}

Vector srht_apply(const SrhtSketch& s, const Vector& x) {
    if (x.size() != s.input_dim) {
        throw DimensionError("srht_apply: vector length " + std::to_string(x.size()) +
                             " does not match sketch input dim " +
                             std::to_string(s.input_dim));
    }
    std::vector<double> scratch(static_cast<std::size_t>(s.padded_dim));
    Vector out(s.rows);
    sketch_column(s, x.data(), 1, s.input_dim, scratch.data(), out.data(), 1);
    return out;
}

DenseMatrix srht_apply_serial(const SrhtSketch& s, const DenseMatrix& a) {
    if (a.rows() != s.input_dim) {
        throw DimensionError("srht_apply: matrix has " + std::to_string(a.rows()) +
                             " rows, sketch expects " + std::to_string(s.input_dim));
    }
    DenseMatrix out(s.rows, a.cols());
    std::vector<double> scratch(static_cast<std::size_t>(s.padded_dim));
    for (Index j = 0; j < a.cols(); ++j) {
        sketch_column(s, a.data() + j, a.cols(), a.rows(), scratch.data(),
                      out.data() + j, out.cols());
    }
    return out;
}

DenseMatrix srht_apply(const SrhtSketch& s, const DenseMatrix& a) {
    if (a.rows() != s.input_dim) {
        throw DimensionError("srht_apply: matrix has " + std::to_string(a.rows()) +
                             " rows, sketch expects " + std::to_string(s.input_dim));
    }
    DenseMatrix out(s.rows, a.cols());
    // Columns are independent, so the parallel result is bit-identical to the
    // serial one.
#pragma omp parallel
    {
        std::vector<double> scratch(static_cast<std::size_t>(s.padded_dim));
#pragma omp for schedule(static)
        for (Index j = 0; j < a.cols(); ++j) {
            sketch_column(s, a.data() + j, a.cols(), a.rows(), scratch.data(),
                          out.data() + j, out.cols());
        }
    }
    return out;
}

Vector srht_apply_transpose(const SrhtSketch& s, const Vector& u) {
    if (u.size() != s.rows) {
        throw DimensionError("srht_apply_transpose: vector length " +
                             std::to_string(u.size()) + " does not match sketch rows " +
                             std::to_string(s.rows));
    }
    std::vector<double> scratch(static_cast<std::size_t>(s.padded_dim), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
    for (Index k = 0; k < s.rows; ++k) {
        scratch[s.sample_rows[k]] += scale * u[k];
    }
    fwht(scratch.data(), s.padded_dim);
    Vector out(s.input_dim);
    for (Index i = 0; i < s.input_dim; ++i) out[i] = s.signs[i] * scratch[i];
    return out;
}

DenseMatrix srht_apply_transpose(const SrhtSketch& s, const DenseMatrix& u) {
    if (u.rows() != s.rows) {
        throw DimensionError("srht_apply_transpose: matrix rows " +
                             std::to_string(u.rows()) + " do not match sketch rows " +
                             std::to_string(s.rows));
    }
    DenseMatrix out(s.input_dim, u.cols());
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (Index j = 0; j < u.cols(); ++j) {
            scratch.assign(static_cast<std::size_t>(s.padded_dim), 0.0);
            const double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
            for (Index k = 0; k < s.rows; ++k) {
                scratch[s.sample_rows[k]] += scale * u(k, j);
            }
            fwht(scratch.data(), s.padded_dim);
            for (Index i = 0; i < s.input_dim; ++i) out(i, j) = s.signs[i] * scratch[i];
        }
    }
    return out;
}

TensorSrhtSketch tensor_srht_new(Index max_input, Index m, std::uint64_t seed) {
    if (max_input < 1 || m < 1) {
        throw DimensionError("tensor_srht_new: dimensions must be positive");
    }
    TensorSrhtSketch s;
    s.side_dim = next_pow2(max_input);
    s.rows = m;
    s.seed = seed;
    CounterRng left(CounterRng::derive(seed, rng_streams::kTensorSignsLeft));
    CounterRng right(CounterRng::derive(seed, rng_streams::kTensorSignsRight));
    s.signs_left.resize(static_cast<std::size_t>(s.side_dim));
    s.signs_right.resize(static_cast<std::size_t>(s.side_dim));
    for (auto& v : s.signs_left) v = left.next_sign();
    for (auto& v : s.signs_right) v = right.next_sign();
    CounterRng samples(CounterRng::derive(seed, rng_streams::kTensorSamples));
    s.sample_pairs.resize(static_cast<std::size_t>(m));
    for (auto& p : s.sample_pairs) {
        p.first = static_cast<Index>(
            samples.next_below(static_cast<std::uint64_t>(s.side_dim)));
        p.second = static_cast<Index>(
            samples.next_below(static_cast<std::uint64_t>(s.side_dim)));
    }
    return s;
}

Vector tensor_srht_apply(const TensorSrhtSketch& s, const Vector& x, const Vector& y) {
    if (x.size() > s.side_dim || y.size() > s.side_dim) {
        throw DimensionError("tensor_srht_apply: input length exceeds side dim " +
                             std::to_string(s.side_dim));
    }
    std::vector<double> left(static_cast<std::size_t>(s.side_dim), 0.0);
    std::vector<double> right(static_cast<std::size_t>(s.side_dim), 0.0);
    for (Index i = 0; i < x.size(); ++i) left[i] = s.signs_left[i] * x[i];
    for (Index i = 0; i < y.size(); ++i) right[i] = s.signs_right[i] * y[i];
    fwht(left.data(), s.side_dim);
    fwht(right.data(), s.side_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
    Vector out(s.rows);
    for (Index k = 0; k < s.rows; ++k) {
        const auto& [i, j] = s.sample_pairs[static_cast<std::size_t>(k)];
        out[k] = scale * left[i] * right[j];
    }
    return out;
}

namespace {

// Orthonormal basis of A's column space; rejects rank-deficient input.
DenseMatrix orthonormal_basis(const DenseMatrix& a) {
    Eigen::HouseholderQR<DenseMatrix> qr(a);
    DenseMatrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    double max_diag = r.diagonal().cwiseAbs().maxCoeff();
    if (max_diag <= 0.0 ||
        r.diagonal().cwiseAbs().minCoeff() < 1e-12 * max_diag) {
        throw RankError("check_embedding: input matrix is numerically rank-deficient");
    }
    return qr.householderQ() * DenseMatrix::Identity(a.rows(), a.cols());
}

}  // namespace

EmbeddingReport check_embedding(const SrhtFactory& factory, const DenseMatrix& a,
                                double eps, int trials) {
    if (trials < 1) throw ParameterError("check_embedding: trials must be positive");
    DenseMatrix u = orthonormal_basis(a);
    std::vector<double> mins(static_cast<std::size_t>(trials));
    std::vector<double> maxs(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
        SrhtSketch s = factory(t);
        DenseMatrix su = srht_apply_serial(s, u);
        Eigen::BDCSVD<DenseMatrix> svd(su);
        mins[static_cast<std::size_t>(t)] = svd.singularValues().minCoeff();
        maxs[static_cast<std::size_t>(t)] = svd.singularValues().maxCoeff();
    }
    EmbeddingReport rep;
    rep.trials = trials;
    rep.min_singular = mins[0];
    rep.max_singular = maxs[0];
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        double lo = mins[static_cast<std::size_t>(t)];
        double hi = maxs[static_cast<std::size_t>(t)];
        rep.min_singular = std::min(rep.min_singular, lo);
        rep.max_singular = std::max(rep.max_singular, hi);
        if (std::max(1.0 - lo, hi - 1.0) > eps) ++failures;
    }
    rep.epsilon_observed =
        std::max(std::abs(1.0 - rep.min_singular), std::abs(rep.max_singular - 1.0));
    rep.failure_rate = static_cast<double>(failures) / trials;
    return rep;
}

double embedding_distortion_gram(const SrhtSketch& s, const DenseMatrix& u) {
    DenseMatrix su = srht_apply_serial(s, u);
    DenseMatrix gram = su.transpose() * su;
    gram -= DenseMatrix::Identity(u.cols(), u.cols());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double check_famp(const SrhtFactory& factory, const DenseMatrix& a,
                  const DenseMatrix& b, double eps, int trials) {
    if (a.rows() != b.rows()) {
        throw DimensionError("check_famp: row counts differ");
    }
    if (trials < 1) throw ParameterError("check_famp: trials must be positive");
    const double bound = eps * a.norm() * b.norm();
    const DenseMatrix exact = a.transpose() * b;
    std::vector<int> failed(static_cast<std::size_t>(trials), 0);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
        SrhtSketch s = factory(t);
        DenseMatrix sa = srht_apply_serial(s, a);
        DenseMatrix sb = srht_apply_serial(s, b);
        double err = (exact - sa.transpose() * sb).norm();
        failed[static_cast<std::size_t>(t)] = err > bound ? 1 : 0;
    }
    int failures = 0;
    for (int f : failed) failures += f;
    return static_cast<double>(failures) / trials;
}

}  // namespace apkr
