#include <doctest.h>

#include <cmath>

#include "apkr/errors.hpp"
#include "apkr/oracle.hpp"
#include "apkr/sketch.hpp"
#include "test_helpers.hpp"

using namespace apkr;
namespace th = apkr::testing;

TEST_SUITE_BEGIN("sketch");

TEST_CASE("fwht basis and constant vectors") {
    Vector e(2);
    e << 1, 0;
    fwht(e);
    CHECK(e[0] == doctest::Approx(1.0));
    CHECK(e[1] == doctest::Approx(1.0));

    Vector ones = Vector::Ones(4);
    fwht(ones);
    CHECK(ones[0] == doctest::Approx(4.0));
    CHECK(ones.tail(3).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("fwht matches the dense Sylvester oracle") {
    Vector v = th::random_vector(8, 42);
    Vector expected = th::dense_hadamard(8) * v;
    Vector got = v;
    fwht(got);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fwht is an involution up to scale") {
    for (Index len : {1, 2, 64, 4096}) {
        Vector v = th::random_vector(len, 7 + static_cast<std::uint64_t>(len));
        Vector twice = v;
        fwht(twice);
        fwht(twice);
        CHECK((twice - static_cast<double>(len) * v).cwiseAbs().maxCoeff() <
              1e-12 * static_cast<double>(len));
    }
}

TEST_CASE("fwht rejects non power-of-two lengths") {
    Vector v = Vector::Zero(6);
    CHECK_THROWS_AS(fwht(v), DimensionError);
}

TEST_CASE("srht_new pads and is deterministic") {
    SrhtSketch s = srht_new(5, 3, 7);
    CHECK(s.padded_dim == 8);
    CHECK(s.rows == 3);
    SrhtSketch again = srht_new(5, 3, 7);
    CHECK(s.signs == again.signs);
    CHECK(s.sample_rows == again.sample_rows);
    SrhtSketch other = srht_new(5, 3, 8);
    CHECK(s.sample_rows != other.sample_rows);

    for (double v : s.signs) CHECK(std::abs(v) == 1.0);
    for (Index r : s.sample_rows) {
        CHECK(r >= 0);
        CHECK(r < s.padded_dim);
    }
}

TEST_CASE("srht_new rejects empty dimensions") {
    CHECK_THROWS_AS(srht_new(0, 3, 1), DimensionError);
    CHECK_THROWS_AS(srht_new(3, 0, 1), DimensionError);
}

TEST_CASE("dense srht materialization has entries of magnitude 1/sqrt(m)") {
    SrhtSketch s = srht_new(4, 4, 11);
    DenseMatrix dense = th::dense_srht(s);
    CHECK((dense.cwiseAbs().array() - 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("srht_apply equals the dense materialization") {
    SrhtSketch s = srht_new(8, 6, 123);
    DenseMatrix a = th::random_matrix(8, 3, 5);
    DenseMatrix got = srht_apply(s, a);
    DenseMatrix expected = th::dense_srht(s) * a;  // no padding needed at 8
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Padded case: materialize over 8 and zero-pad the 5-row input.
    SrhtSketch sp = srht_new(5, 4, 9);
    DenseMatrix b = th::random_matrix(5, 2, 17);
    DenseMatrix b_padded = DenseMatrix::Zero(8, 2);
    b_padded.topRows(5) = b;
    CHECK((srht_apply(sp, b) - th::dense_srht(sp) * b_padded).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("srht_apply maps zero to zero and is linear") {
    SrhtSketch s = srht_new(16, 8, 3);
    DenseMatrix zero = DenseMatrix::Zero(16, 4);
    CHECK(srht_apply(s, zero).cwiseAbs().maxCoeff() == 0.0);

    DenseMatrix a = th::random_matrix(16, 4, 21);
    DenseMatrix b = th::random_matrix(16, 4, 22);
    DenseMatrix lhs = srht_apply(s, DenseMatrix(2.5 * a - 0.75 * b));
    DenseMatrix rhs = 2.5 * srht_apply(s, a) - 0.75 * srht_apply(s, b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parallel srht_apply is bit-identical to the serial reference") {
    SrhtSketch s = srht_new(128, 64, 99);
    DenseMatrix a = th::random_matrix(128, 9, 31);
    DenseMatrix par = srht_apply(s, a);
    DenseMatrix ser = srht_apply_serial(s, a);
    CHECK((par - ser).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("srht_apply_transpose matches the dense transpose") {
    SrhtSketch s = srht_new(8, 5, 77);
    Vector u = th::random_vector(5, 3);
    Vector got = srht_apply_transpose(s, u);
    Vector expected = (th::dense_srht(s).transpose() * u).head(8);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("srht_apply rejects row mismatches") {
    SrhtSketch s = srht_new(8, 4, 1);
    DenseMatrix a = th::random_matrix(9, 2, 1);
    CHECK_THROWS_AS(srht_apply(s, a), DimensionError);
}

TEST_CASE("tensor srht is bilinear and matches the Kronecker oracle") {
    TensorSrhtSketch s = tensor_srht_new(4, 6, 2024);
    Vector zero = Vector::Zero(4);
    Vector x = th::random_vector(4, 8);
    Vector y = th::random_vector(4, 9);
    CHECK(tensor_srht_apply(s, zero, y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tensor_srht_apply(s, x, zero).cwiseAbs().maxCoeff() == 0.0);

    Vector got = tensor_srht_apply(s, x, y);
    Vector expected = th::dense_tensor_srht(s) * th::kron(x, y);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Bilinearity in the first slot.
    Vector x2 = th::random_vector(4, 10);
    Vector lhs = tensor_srht_apply(s, Vector(2.0 * x - x2), y);
    Vector rhs = 2.0 * tensor_srht_apply(s, x, y) - tensor_srht_apply(s, x2, y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tensor srht sign streams are independent") {
    TensorSrhtSketch s = tensor_srht_new(64, 4, 5);
    CHECK(s.signs_left != s.signs_right);
}

TEST_CASE("tensor srht norm estimate is unbiased within 10 percent") {
    Vector x = th::random_vector(8, 51);
    Vector y = th::random_vector(8, 52);
    x.normalize();
    y.normalize();
    double mean = 0.0;
    const int seeds = 200;
    for (int t = 0; t < seeds; ++t) {
        TensorSrhtSketch s = tensor_srht_new(8, 16, 900 + static_cast<std::uint64_t>(t));
        mean += tensor_srht_apply(s, x, y).squaredNorm();
    }
    mean /= seeds;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("tensor srht rejects oversized inputs") {
    TensorSrhtSketch s = tensor_srht_new(4, 3, 1);
    Vector big = Vector::Zero(5);
    Vector ok = Vector::Zero(4);
    CHECK_THROWS_AS(tensor_srht_apply(s, big, ok), DimensionError);
}

TEST_CASE("check_embedding structural case: identity sampling, unit signs") {
    // P = identity over the full padded space and D = +1 make S U exactly
    // orthonormal, so the observed distortion is zero.
    const Index n = 16;
    const Index d = 4;
    DenseMatrix a = DenseMatrix::Zero(n, d);
    for (Index j = 0; j < d; ++j) a(j, j) = 1.0;
    auto factory = [&](int) {
        SrhtSketch s;
        s.input_dim = n;
        s.padded_dim = n;
        s.rows = n;
        s.signs.assign(static_cast<std::size_t>(n), 1.0);
        for (Index i = 0; i < n; ++i) s.sample_rows.push_back(i);
        return s;
    };
    EmbeddingReport rep = check_embedding(factory, a, 0.25, 3);
    CHECK(rep.trials == 3);
    CHECK(rep.failure_rate == 0.0);
    CHECK(rep.epsilon_observed < 1e-10);
}

TEST_CASE("embedding distortion via svd and gram routes agree") {
    const Index n = 64;
    const Index d = 6;
    DenseMatrix a = gen_matrix(n, d, 10.0, 77);
    Eigen::HouseholderQR<DenseMatrix> qr(a);
    DenseMatrix u = qr.householderQ() * DenseMatrix::Identity(n, d);
    for (int t = 0; t < 5; ++t) {
        SrhtSketch s = srht_new(n, 48, 400 + static_cast<std::uint64_t>(t));
        DenseMatrix su = srht_apply(s, u);
        Eigen::BDCSVD<DenseMatrix> svd(su);
        double lo = svd.singularValues().minCoeff();
        double hi = svd.singularValues().maxCoeff();
        double via_svd = std::max(std::abs(hi * hi - 1.0), std::abs(lo * lo - 1.0));
        double via_gram = embedding_distortion_gram(s, u);
        CHECK(via_svd == doctest::Approx(via_gram).epsilon(1e-10));
    }
}

TEST_CASE("check_embedding rejects rank-deficient input") {
    DenseMatrix a = th::random_matrix(16, 3, 1);
    a.col(2) = a.col(1);  // duplicate column
    auto factory = [&](int t) {
        return srht_new(16, 8, static_cast<std::uint64_t>(t));
    };
    CHECK_THROWS_AS(check_embedding(factory, a, 0.5, 2), RankError);
}

TEST_CASE("check_embedding statistics at reduced desk scale") {
    const Index n = 256;
    const Index d = 8;
    DenseMatrix a = gen_matrix(n, d, 50.0, 3);
    const double eps = 0.25;
    const double delta = 0.05;
    Index m = srht_embedding_rows(n, d, eps, delta);
    auto factory = [&](int t) {
        return srht_new(n, m, CounterRng::derive(12345, rng_streams::kTrialBase +
                                                            static_cast<std::uint64_t>(t)));
    };
    EmbeddingReport rep = check_embedding(factory, a, eps, 30);
    CHECK(rep.failure_rate <= 0.05);
    CHECK(rep.min_singular <= rep.max_singular);
}

TEST_CASE("check_famp edge cases") {
    const Index n = 32;
    DenseMatrix zero = DenseMatrix::Zero(n, 3);
    auto factory = [&](int t) {
        return srht_new(n, 8, 50 + static_cast<std::uint64_t>(t));
    };
    CHECK(check_famp(factory, zero, zero, 0.1, 5) == 0.0);

    // Orthonormal columns with a generous sketch: failures should be rare.
    DenseMatrix a = gen_matrix(n, 4, 1.0, 9);
    auto big_factory = [&](int t) {
        return srht_new(n, 512, 70 + static_cast<std::uint64_t>(t));
    };
    CHECK(check_famp(big_factory, a, a, 0.5, 20) <= 0.05);

    // A single sketch row at a tight eps should essentially always fail.
    DenseMatrix g1 = th::random_matrix(n, 3, 100);
    DenseMatrix g2 = th::random_matrix(n, 3, 101);
    auto tiny_factory = [&](int t) {
        return srht_new(n, 1, 90 + static_cast<std::uint64_t>(t));
    };
    CHECK(check_famp(tiny_factory, g1, g2, 0.01, 20) >= 0.9);
}

TEST_CASE("check_famp rejects mismatched rows") {
    DenseMatrix a = th::random_matrix(8, 2, 1);
    DenseMatrix b = th::random_matrix(9, 2, 1);
    auto factory = [](int t) { return srht_new(8, 4, static_cast<std::uint64_t>(t)); };
    CHECK_THROWS_AS(check_famp(factory, a, b, 0.1, 2), DimensionError);
}

TEST_SUITE_END();
