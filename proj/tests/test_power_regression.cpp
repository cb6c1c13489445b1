#include <doctest.h>

#include <cmath>

#include "apkr/errors.hpp"
#include "apkr/oracle.hpp"
#include "apkr/power_regression.hpp"
#include "apkr/rng.hpp"
#include "test_helpers.hpp"

using namespace apkr;
namespace th = apkr::testing;

namespace {

// Right-hand side in the range of the even-power operator: b = (A^T A)^j w,
// normalized. Keeps residuals measurable in binary64 at large kappa^(2j).
Vector range_rhs_even(const DenseMatrix& a, int j, std::uint64_t seed) {
    Vector w = th::random_vector(a.cols(), seed);
    for (int k = 0; k < j; ++k) w = a.transpose() * (a * w);
    return w / w.norm();
}

// b = A w + small off-range noise for the odd-power problems.
Vector range_rhs_odd(const DenseMatrix& a, std::uint64_t seed, double noise = 0.01) {
    Vector w = th::random_vector(a.cols(), seed);
    Vector b = a * w;
    b.normalize();
    Vector g = th::random_vector(a.rows(), seed + 1);
    b += noise * g / g.norm();
    return b;
}

double odd_objective(const DenseMatrix& a, const Vector& x, const Vector& b, int j) {
    Vector w = x;
    for (int k = 0; k < j; ++k) w = a.transpose() * (a * w);
    return (a * w - b).norm();
}

}  // namespace

TEST_SUITE_BEGIN("power_regression");

TEST_CASE("even schedule laws hold exactly") {
    PrecisionBudget budget = PrecisionBudget::even_schedule(1e-6, 0.05, 5);
    for (int k = 1; k <= 5; ++k) {
        CHECK(budget.eps[k - 1] == 1e-6 * std::pow(0.5, 5 - k));
        CHECK(budget.delta[k - 1] == 0.05 / k);
    }
    // Earlier stages are at most half of the next one.
    for (int k = 2; k <= 5; ++k) {
        CHECK(budget.eps[k - 2] <= 0.5 * budget.eps[k - 1]);
    }
    CHECK_THROWS_AS(PrecisionBudget::even_schedule(0.5, 0.05, 2), ParameterError);
}

TEST_CASE("three_matrices on identity-like systems") {
    DenseMatrix eye = DenseMatrix::Identity(2, 2);
    Vector b(2);
    b << 5, -2;
    SolveReport rep = three_matrices(eye, b, 1e-6, 0.05, 3);
    CHECK((rep.solution - b).norm() < 1e-5);
    CHECK(rep.residual < 1e-5);

    DenseMatrix two = 2.0 * DenseMatrix::Identity(2, 2);
    Vector b2(2);
    b2 << 8, 16;
    rep = three_matrices(two, b2, 1e-8, 0.05, 4);
    Vector expected(2);
    expected << 1, 2;  // A A^T A = 8 I
    CHECK((rep.solution - expected).norm() < 1e-6);
}

TEST_CASE("three_matrices meets the additive-relative bound") {
    DenseMatrix a = gen_matrix(256, 8, 10.0, 71);
    Vector b = range_rhs_odd(a, 72);
    const double eps = 1e-5;
    SolveReport rep = three_matrices(a, b, eps, 0.05, 73);
    CHECK(rep.converged);
    DenseMatrix m3 = dense_power_matrix(a, 1, Parity::kOdd);
    OracleReport oracle = svd_lstsq(m3, b, rep.solution);
    CHECK(oracle.residual_of_candidate <=
          (1.0 + eps) * oracle.exact_cost + eps * b.norm() + 1e-12);
}

TEST_CASE("four_matrices on identity and diagonal instances") {
    DenseMatrix eye = DenseMatrix::Identity(3, 3);
    Vector b(3);
    b << 1, 2, 3;
    SolveReport rep = four_matrices(eye, b, 1e-6, 0.05, 5);
    CHECK((rep.solution - b).norm() < 1e-5);

    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    Vector b4(2);
    b4 << 1, 16;
    rep = four_matrices(d, b4, 1e-8, 0.05, 6);
    Vector expected(2);
    expected << 1, 1;  // (A^T A)^2 = diag(1, 16)
    CHECK((rep.solution - expected).norm() < 1e-6);
}

TEST_CASE("four_matrices meets the relative backward bound") {
    DenseMatrix a = gen_matrix(256, 8, 10.0, 81);
    Vector b4 = th::random_vector(8, 82);
    b4.normalize();
    const double eps = 1e-5;
    SolveReport rep = four_matrices(a, b4, eps, 0.05, 83);
    CHECK(rep.converged);
    Vector w = rep.solution;
    for (int k = 0; k < 2; ++k) w = a.transpose() * (a * w);
    CHECK((w - b4).norm() <= eps * b4.norm());
    CHECK(rep.stage_log.size() == 2);
}

TEST_CASE("even_powers is exact on the identity for every power") {
    DenseMatrix eye = DenseMatrix::Identity(5, 5);
    Vector b = th::random_vector(5, 90);
    for (int j : {1, 3, 6}) {
        SolveReport rep = even_powers(eye, b, j, 1e-6, 0.05, 91);
        CHECK((rep.solution - b).norm() < 1e-5);
    }
}

TEST_CASE("even_powers with j = 1 matches fast_psd_regression") {
    DenseMatrix a = gen_matrix(128, 6, 20.0, 101);
    Vector b = range_rhs_even(a, 1, 102);
    const double eps = 1e-6;
    const double delta = 0.05;
    const std::uint64_t seed = 103;
    SolveReport chain = even_powers(a, b, 1, eps, delta, seed);

    double kappa_est = estimate_condition_number(a, nullptr, 0);
    double tol = std::exp(std::log(eps) - 2.0 * std::log(kappa_est));
    SolveReport direct = fast_psd_regression(a, b, tol, delta, seed);
    CHECK((chain.solution - direct.solution).norm() < 1e-9);
}

TEST_CASE("even_powers meets the final guarantee at desk scale") {
    DenseMatrix a = gen_matrix(256, 8, 20.0, 111);
    const double eps = 1e-6;
    for (int j : {2, 4}) {
        Vector b = range_rhs_even(a, j, 112 + static_cast<std::uint64_t>(j));
        SolveReport rep = even_powers(a, b, j, eps, 0.05, 113);
        DenseMatrix power = dense_power_matrix(a, j, Parity::kEven);
        CHECK((power * rep.solution - b).norm() <= eps * b.norm());
        CHECK(rep.stage_log.size() == static_cast<std::size_t>(j));
    }
}

TEST_CASE("even_powers induction audit: per-stage bounds hold") {
    DenseMatrix a = gen_matrix(256, 8, 20.0, 121);
    const int j = 4;
    const double eps = 1e-6;
    Vector b = range_rhs_even(a, j, 122);
    SolveReport rep = even_powers(a, b, j, eps, 0.05, 123);
    REQUIRE(rep.stage_log.size() == 4);
    SpectrumInfo info = spectrum(a);
    for (int k = 1; k <= j; ++k) {
        const StageRecord& stage = rep.stage_log[static_cast<std::size_t>(k - 1)];
        // ||(A^T A)^k b_k - b|| <= eps_k ||b||.
        Vector w = stage.solution;
        for (int i = 0; i < k; ++i) w = a.transpose() * (a * w);
        CHECK((w - b).norm() <= stage.eps_k * b.norm());
        // ||b_k|| <= 2 sigma_min^(-2k) ||b||.
        CHECK(stage.solution.norm() <=
              2.0 * std::pow(info.sigma_min, -2.0 * k) * b.norm());
    }
}

TEST_CASE("even_powers floors stage tolerances and records it") {
    DenseMatrix a = gen_matrix(128, 6, 500.0, 131);
    Vector b = range_rhs_even(a, 3, 132);
    SolveReport rep = even_powers(a, b, 3, 1e-6, 0.05, 133);
    // kappa^6 > 1e16 pushes late stages below the floor.
    CHECK(rep.tolerance_floored);
    for (const auto& stage : rep.stage_log) {
        CHECK(stage.tolerance >= 1e-14);
    }
}

TEST_CASE("even_powers parameter validation") {
    DenseMatrix a = gen_matrix(16, 4, 2.0, 1);
    Vector b = Vector::Ones(4);
    CHECK_THROWS_AS(even_powers(a, b, 0, 1e-4, 0.05, 1), ParameterError);
    CHECK_THROWS_AS(even_powers(a, b, 17, 1e-4, 0.05, 1), ParameterError);
    CHECK_THROWS_AS(even_powers(a, Vector::Ones(16), 2, 1e-4, 0.05, 1),
                    DimensionError);
}

TEST_CASE("odd_powers is exact on the identity") {
    DenseMatrix eye = DenseMatrix::Identity(3, 3);
    Vector b(3);
    b << 2, -4, 1;
    for (int j : {1, 2}) {
        SolveReport rep = odd_powers(eye, b, j, 1e-6, 0.05, 141);
        CHECK((rep.solution - b).norm() < 1e-4);
    }
}

TEST_CASE("odd_powers with j = 1 agrees with three_matrices on both bounds") {
    DenseMatrix a = gen_matrix(128, 6, 15.0, 151);
    Vector b = range_rhs_odd(a, 152);
    const double eps = 1e-5;
    SolveReport via_odd = odd_powers(a, b, 1, eps, 0.05, 153);
    SolveReport via_three = three_matrices(a, b, eps, 0.05, 153);
    DenseMatrix m3 = dense_power_matrix(a, 1, Parity::kOdd);
    OracleReport base = svd_lstsq(m3, b);
    double bound = (1.0 + eps) * base.exact_cost + eps * b.norm() + 1e-12;
    CHECK(odd_objective(a, via_odd.solution, b, 1) <= bound);
    CHECK(odd_objective(a, via_three.solution, b, 1) <= bound);
}

TEST_CASE("odd_powers meets the proof-level bound at desk scale") {
    DenseMatrix a = gen_matrix(256, 8, 20.0, 161);
    const double eps = 1e-6;
    const int j = 3;
    Vector b = range_rhs_odd(a, 162);
    SolveReport rep = odd_powers(a, b, j, eps, 0.05, 163);
    DenseMatrix m = dense_power_matrix(a, j, Parity::kOdd);
    OracleReport oracle = svd_lstsq(m, b, rep.solution);
    CHECK(oracle.residual_of_candidate <=
          (1.0 + eps) * oracle.exact_cost + eps * b.norm() + 1e-12);
    // First stage is the overconstrained solve, then j PSD stages.
    CHECK(rep.stage_log.size() == static_cast<std::size_t>(j + 1));
}

TEST_CASE("reduce_attention_to_odd identity and scaled cases") {
    DenseMatrix x = th::random_matrix(12, 3, 171);
    Vector y = th::random_vector(12, 172);

    AttentionReduction red = reduce_attention_to_odd(x, DenseMatrix::Identity(3, 3), y);
    CHECK((red.x_tilde - x).cwiseAbs().maxCoeff() < 1e-14);
    Vector v(3);
    v << 1, 2, 3;
    CHECK((red.recover(v) - v).norm() < 1e-14);

    red = reduce_attention_to_odd(x, DenseMatrix(4.0 * DenseMatrix::Identity(3, 3)), y);
    CHECK((red.x_tilde - 2.0 * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((red.recover(v) - 2.0 * v).norm() < 1e-12);
}

TEST_CASE("reduce_attention_to_odd rejects bad W") {
    DenseMatrix x = th::random_matrix(8, 3, 181);
    Vector y = th::random_vector(8, 182);
    DenseMatrix asym = DenseMatrix::Identity(3, 3);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(reduce_attention_to_odd(x, asym, y), DefinitenessError);

    DenseMatrix indefinite = DenseMatrix::Identity(3, 3);
    indefinite(2, 2) = -1.0;
    CHECK_THROWS_AS(reduce_attention_to_odd(x, indefinite, y), DefinitenessError);
}

TEST_CASE("reduction preserves residuals on random instances") {
    for (int trial = 0; trial < 50; ++trial) {
        auto seed = static_cast<std::uint64_t>(190 + trial);
        DenseMatrix x = th::random_matrix(10, 3, seed);
        DenseMatrix g = th::random_matrix(3, 3, seed + 1);
        DenseMatrix w = g * g.transpose() + 0.5 * DenseMatrix::Identity(3, 3);
        Vector y = th::random_vector(10, seed + 2);
        Vector v_tilde = th::random_vector(3, seed + 3);

        AttentionReduction red = reduce_attention_to_odd(x, w, y);
        Vector v = red.recover(v_tilde);
        double original = (x * (w * (x.transpose() * (x * v))) - y).norm();
        const DenseMatrix& xt = red.x_tilde;
        double reduced = (xt * (xt.transpose() * (xt * v_tilde)) - y).norm();
        CHECK(original == doctest::Approx(reduced).epsilon(1e-9));
    }
}

TEST_SUITE_END();
