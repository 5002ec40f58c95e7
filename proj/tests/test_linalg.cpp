#include <cmath>

#include "doctest.h"
#include "embsig/error.hpp"
#include "embsig/linalg.hpp"
#include "embsig/rng.hpp"

using namespace embsig;

TEST_CASE("matrix shape and element access") {
    Matrix m(2, 3, 0.0);
    m(0, 0) = 1.0;
    m(1, 2) = -2.5;
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.data.size() == 6);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 2) == -2.5);
    CHECK(shape_string(m) == "2x3");
    CHECK(m.same_shape(Matrix(2, 3, 9.0)));
    CHECK_FALSE(m.same_shape(Matrix(3, 2, 0.0)));
}

TEST_CASE("require_finite flags NaN and infinity") {
    Matrix m(2, 2, 1.0);
    CHECK_NOTHROW(require_finite(m, "here"));
    m(1, 1) = std::nan("");
    CHECK_THROWS_AS(require_finite(m, "here"), Error);
    Vector v{1.0, std::numeric_limits<double>::infinity()};
    try {
        require_finite(v, "ctx");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
    }
}

TEST_CASE("matmul and transpose against hand-computed products") {
    Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
    const Matrix c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 2);
    CHECK(c(0, 0) == doctest::Approx(58));
    CHECK(c(0, 1) == doctest::Approx(64));
    CHECK(c(1, 0) == doctest::Approx(139));
    CHECK(c(1, 1) == doctest::Approx(154));

    const Matrix at = transpose(a);
    CHECK(at.rows == 3);
    CHECK(at.cols == 2);
    CHECK(at(2, 1) == 6);

    CHECK_THROWS_AS(matmul(a, Matrix(2, 2, 0.0)), Error); // inner mismatch
}

TEST_CASE("dot, norm and cosine basics") {
    const Vector x{3.0, 4.0};
    const Vector y{4.0, -3.0};
    CHECK(dot(x, y) == doctest::Approx(0.0));
    CHECK(norm2(x) == doctest::Approx(5.0));
    CHECK(cosine(x, x) == doctest::Approx(1.0));
    CHECK(cosine(x, y) == doctest::Approx(0.0));
    CHECK(cosine(x, Vector{-3.0, -4.0}) == doctest::Approx(-1.0));
}

TEST_CASE("softmax is shift-stable and normalized") {
    const Vector big{1000.0, 1001.0, 1002.0};
    const Vector p = softmax(big);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(p[2] > p[1]);
    CHECK(p[1] > p[0]);
    // Same logits shifted must give bitwise-comparable probabilities.
    const Vector q = softmax(Vector{0.0, 1.0, 2.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
}

TEST_CASE("cosine_matrix works over columns") {
    // Columns: e1, e2, e1+e2.
    Matrix m(2, 3, {1, 0, 1, 0, 1, 1});
    const Matrix sim = cosine_matrix(m);
    CHECK(sim.rows == 3);
    CHECK(sim(0, 0) == doctest::Approx(1.0));
    CHECK(sim(0, 1) == doctest::Approx(0.0));
    CHECK(sim(0, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(sim(1, 2) == doctest::Approx(sim(2, 1)));
}

TEST_CASE("pearson matches a hand-computed correlation and rejects constants") {
    const Vector x{1, 2, 3, 4};
    const Vector y{2, 4, 6, 8.5}; // nearly linear
    CHECK(pearson(x, x) == doctest::Approx(1.0));
    CHECK(pearson(x, y) > 0.99);
    CHECK(pearson(x, Vector{8.5, 6, 4, 2}) < -0.99);
    try {
        pearson(Vector{1, 1, 1}, Vector{1, 2, 3});
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
    }
}

TEST_CASE("percentile ranks average ties and center within buckets") {
    const Vector v{1.0, 2.0, 2.0, 4.0};
    const Vector p = percentile_rank(v);
    CHECK(p[0] == doctest::Approx(0.125));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK(p[2] == doctest::Approx(0.5));
    CHECK(p[3] == doctest::Approx(0.875));

    const Matrix m(2, 2, {1, 2, 3, 4});
    const Matrix q = percentile_rank(m);
    CHECK(q(0, 0) == doctest::Approx(0.125));
    CHECK(q(0, 1) == doctest::Approx(0.375));
    CHECK(q(1, 0) == doctest::Approx(0.625));
    CHECK(q(1, 1) == doctest::Approx(0.875));
}

TEST_CASE("jacobi eigensolver: known 2x2 and random residual") {
    const Matrix m(2, 2, {2, 1, 1, 2});
    const EigenResult eig = symmetric_topk_eigen(m, 2);
    CHECK(eig.values[0] == doctest::Approx(3.0));
    CHECK(eig.values[1] == doctest::Approx(1.0));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(inv_sqrt2));
    CHECK(std::abs(eig.vectors(1, 0)) == doctest::Approx(inv_sqrt2));

    // Random symmetric 6x6: A v = lambda v to 1e-8 * ||A||, orthonormal basis.
    Rng rng(77);
    Matrix a(6, 6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double g = gaussian(rng);
            a(i, j) = g;
            a(j, i) = g;
        }
    }
    double a_norm = 0.0;
    for (double v : a.data) a_norm = std::max(a_norm, std::abs(v));
    const EigenResult full = symmetric_topk_eigen(a, 6);
    for (std::size_t j = 0; j + 1 < 6; ++j) CHECK(full.values[j] >= full.values[j + 1]);
    for (std::size_t j = 0; j < 6; ++j) {
        for (std::size_t i = 0; i < 6; ++i) {
            double av = 0.0;
            for (std::size_t k = 0; k < 6; ++k) av += a(i, k) * full.vectors(k, j);
            CHECK(std::abs(av - full.values[j] * full.vectors(i, j)) <= 1e-8 * a_norm);
        }
        for (std::size_t j2 = 0; j2 < 6; ++j2) {
            double d = 0.0;
            for (std::size_t i = 0; i < 6; ++i) d += full.vectors(i, j) * full.vectors(i, j2);
            CHECK(std::abs(d - (j == j2 ? 1.0 : 0.0)) <= 1e-8);
        }
    }
}

TEST_CASE("pca projects collinear points onto one axis") {
    // Points along direction (1,2,2)/3: coordinates -2,-1,0,1,2 plus offset.
    Matrix pts(3, 5);
    const Vector dir{1.0 / 3, 2.0 / 3, 2.0 / 3};
    for (int j = 0; j < 5; ++j) {
        for (std::size_t i = 0; i < 3; ++i) {
            pts(i, static_cast<std::size_t>(j)) = 10.0 + (j - 2) * dir[i];
        }
    }
    const PcaResult pca = pca_project(pts, 2);
    CHECK(pca.eigenvalues[0] > 1e-6);
    CHECK(std::abs(pca.eigenvalues[1]) <= 1e-9);
    double mean = 0.0;
    for (std::size_t j = 0; j < 5; ++j) mean += pca.scores(0, j);
    CHECK(std::abs(mean) <= 1e-9);
    // Scores are the centered coordinates, up to overall sign.
    const double sign = pca.scores(0, 4) > 0 ? 1.0 : -1.0;
    for (int j = 0; j < 5; ++j) {
        CHECK(pca.scores(0, static_cast<std::size_t>(j)) ==
              doctest::Approx(sign * (j - 2)).epsilon(1e-8));
    }
}

TEST_CASE("deterministic rng helpers") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(uniform_index(a, 17) == uniform_index(b, 17));
    }
    Rng c(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform_real01(c);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    // Box-Muller output is standard-normal-ish: crude moment check.
    Rng d(7);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double g = gaussian(d);
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) <= 0.05);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}
