#include "apkr/oracle.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

namespace apkr {

namespace {

constexpr double kOverflowSentinel = 1e300;

Eigen::BDCSVD<DenseMatrix> full_svd(const DenseMatrix& m) {
    return Eigen::BDCSVD<DenseMatrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

DenseMatrix orthonormal_from_gaussian(Index rows, Index cols, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix g(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) g(i, j) = rng.next_gaussian();
    }
    Eigen::HouseholderQR<DenseMatrix> qr(g);
    return qr.householderQ() * DenseMatrix::Identity(rows, cols);
}

}  // namespace

OracleReport svd_lstsq(const DenseMatrix& m, const Vector& b) {
    if (m.rows() != b.size()) {
        throw DimensionError("svd_lstsq: matrix rows do not match rhs length");
    }
    auto svd = full_svd(m);
    const auto& sv = svd.singularValues();
    const double cutoff = default_config().rank_tolerance * sv.maxCoeff();
    Vector coeffs = svd.matrixU().transpose() * b;
    Vector scaled = Vector::Zero(coeffs.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff) scaled[i] = coeffs[i] / sv[i];
    }
    OracleReport rep;
    rep.exact_solution = svd.matrixV() * scaled;
    rep.exact_cost = (m * rep.exact_solution - b).norm();
    rep.residual_of_candidate = rep.exact_cost;
    rep.relative_gap = 0.0;
    return rep;
}

OracleReport svd_lstsq(const DenseMatrix& m, const Vector& b, const Vector& candidate) {
    OracleReport rep = svd_lstsq(m, b);
    if (candidate.size() != m.cols()) {
        throw DimensionError("svd_lstsq: candidate length does not match columns");
    }
    rep.residual_of_candidate = (m * candidate - b).norm();
    double scale = std::max(b.norm(), std::numeric_limits<double>::min());
    rep.relative_gap = (rep.residual_of_candidate - rep.exact_cost) / scale;
    return rep;
}

DenseMatrix dense_power_matrix(const DenseMatrix& a, int j, Parity parity) {
    if (j < 1) throw ParameterError("dense_power_matrix: power must be >= 1");
    DenseMatrix gram = a.transpose() * a;
    DenseMatrix result = DenseMatrix::Identity(gram.rows(), gram.cols());
    DenseMatrix base = gram;
    int remaining = j;
    while (remaining > 0) {
        if (remaining & 1) result = result * base;
        remaining >>= 1;
        if (remaining > 0) base = base * base;
        if (result.cwiseAbs().maxCoeff() > kOverflowSentinel ||
            base.cwiseAbs().maxCoeff() > kOverflowSentinel) {
            throw OverflowError("dense_power_matrix: entries exceeded 1e300");
        }
    }
    if (parity == Parity::kOdd) return a * result;
    return result;
}

SpectrumInfo spectrum(const DenseMatrix& a) {
    Eigen::BDCSVD<DenseMatrix> svd(a);
    const auto& sv = svd.singularValues();
    SpectrumInfo info;
    info.sigma_max = sv.maxCoeff();
    info.sigma_min = sv.minCoeff();
    info.rank_tol = default_config().rank_tolerance * info.sigma_max;
    if (info.sigma_min <= info.rank_tol) {
        info.kappa = std::numeric_limits<double>::infinity();
    } else {
        info.kappa = info.sigma_max / info.sigma_min;
    }
    return info;
}

bool spectral_sandwich(const DenseMatrix& k_exact, const DenseMatrix& k_approx,
                       double eps, double slack) {
    if (k_exact.rows() != k_exact.cols() || k_approx.rows() != k_approx.cols() ||
        k_exact.rows() != k_approx.rows()) {
        throw DimensionError("spectral_sandwich: matrices must be square and conformal");
    }
    DenseMatrix lower = k_approx - (1.0 - eps) * k_exact;
    DenseMatrix upper = (1.0 + eps) * k_exact - k_approx;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> lo(lower, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> hi(upper, Eigen::EigenvaluesOnly);
    return lo.eigenvalues().minCoeff() >= -slack && hi.eigenvalues().minCoeff() >= -slack;
}

DenseMatrix gen_matrix(Index n, Index d, double kappa_target, std::uint64_t seed) {
    if (n < 1 || d < 1 || n < d) {
        throw ParameterError("gen_matrix: need n >= d >= 1");
    }
    if (kappa_target < 1.0) {
        throw ParameterError("gen_matrix: kappa_target must be >= 1");
    }
    DenseMatrix u = orthonormal_from_gaussian(
        n, d, CounterRng::derive(seed, rng_streams::kGenLeftFactor));
    DenseMatrix v = orthonormal_from_gaussian(
        d, d, CounterRng::derive(seed, rng_streams::kGenRightFactor));
    Vector sigma(d);
    for (Index i = 0; i < d; ++i) {
        double t = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
        sigma[i] = std::pow(kappa_target, t);
    }
    return u * sigma.asDiagonal() * v.transpose();
}

}  // namespace apkr
