#include "duct/numkit.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace duct;

TEST(Matrix, RejectsNonFiniteEntries) {
    EXPECT_THROW(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), NumericError);
    EXPECT_THROW(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), NumericError);
    EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
    EXPECT_THROW(Matrix::from_rows({{1.0, 2.0}, {3.0}}), ShapeError);
}

TEST(MatMul, IdentityAndSelection) {
    const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    EXPECT_EQ(mat_mul(Matrix::identity(2), m), m);
    EXPECT_EQ(mat_mul(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{2}, {5}})), Matrix::from_rows({{2}}));
}

TEST(MatMul, MatchesTripleLoop) {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        const Matrix a = oracle::random_matrix(3, 4, rng), b = oracle::random_matrix(4, 2, rng);
        const Matrix got = mat_mul(a, b), want = oracle::matmul(a, b);
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
    }
}

TEST(MatMul, ShapeMismatch) {
    EXPECT_THROW(mat_mul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST(MatMul, Associative) {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
        const Matrix a = oracle::random_matrix(3, 5, rng), b = oracle::random_matrix(5, 4, rng),
                     c = oracle::random_matrix(4, 2, rng);
        const Matrix l = mat_mul(mat_mul(a, b), c), r = mat_mul(a, mat_mul(b, c));
        for (std::size_t i = 0; i < l.size(); ++i)
            EXPECT_LE(oracle::relative_error(l.data()[i], r.data()[i], 1e-12), 1e-9);
    }
}

TEST(Normalize, Columns) {
    const Matrix n = l2_normalize_columns(Matrix::from_rows({{3, 0}, {4, 0}}));
    EXPECT_DOUBLE_EQ(n(0, 0), 0.6);
    EXPECT_DOUBLE_EQ(n(1, 0), 0.8);
    EXPECT_EQ(n(0, 1), 0.0);
    EXPECT_EQ(n(1, 1), 0.0);
    EXPECT_TRUE(n.all_finite());
}

TEST(Normalize, Idempotent) {
    Rng rng(3);
    const Matrix once = l2_normalize_columns(oracle::random_matrix(6, 4, rng));
    const Matrix twice = l2_normalize_columns(once);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once.data()[i], twice.data()[i], 1e-12);
}

TEST(PairwiseSqDist, KnownValues) {
    EXPECT_DOUBLE_EQ(pairwise_sq_dist(Matrix::from_rows({{0, 0}}), Matrix::from_rows({{3, 4}}))(0, 0), 25.0);
    Rng rng(5);
    const Matrix a = oracle::random_matrix(4, 3, rng);
    const Matrix d = pairwise_sq_dist(a, a);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d(i, i), 0.0);
}

TEST(PairwiseSqDist, MatchesLoopAndIsSymmetric) {
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
        const Matrix a = oracle::random_matrix(4, 3, rng), b = oracle::random_matrix(5, 3, rng);
        const Matrix got = pairwise_sq_dist(a, b), want = oracle::pairwise(a, b);
        const Matrix back = transpose(pairwise_sq_dist(b, a));
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got.data()[i], want.data()[i], 1e-10);
            EXPECT_GE(got.data()[i], 0.0);
            EXPECT_NEAR(got.data()[i], back.data()[i], 1e-12);
        }
    }
    EXPECT_THROW(pairwise_sq_dist(Matrix(2, 3), Matrix(2, 4)), ShapeError);
}

TEST(CosineSim, KnownValues) {
    const std::vector<double> u{1.0, 2.0, -1.0};
    EXPECT_NEAR(cosine_sim(u, u), 1.0, 1e-15);
    EXPECT_EQ(cosine_sim(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_NEAR(cosine_sim(std::vector<double>{1, 1}, std::vector<double>{1, 0}), 0.7071, 1e-4);
    EXPECT_EQ(cosine_sim(std::vector<double>{0, 0}, std::vector<double>{1, 0}), 0.0);
}

TEST(CosineSim, ScaleInvariantAndBounded) {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> u(5), v(5), cu(5);
        const double c = rng.uniform(0.01, 100.0);
        for (std::size_t k = 0; k < 5; ++k) {
            u[k] = rng.normal();
            v[k] = rng.normal();
            cu[k] = c * u[k];
        }
        const double s = cosine_sim(u, v);
        EXPECT_NEAR(cosine_sim(cu, v), s, 1e-12);
        EXPECT_LE(std::abs(s), 1.0 + 1e-9);
    }
}

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 10000; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs = differs || x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, KnownSplitMix64Values) {
    // first outputs of SplitMix64 seeded with 0
    Rng r(0);
    EXPECT_EQ(r.next_u64(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(r.next_u64(), 0x6E789E6AA1B965F4ULL);
}

TEST(Rng, StateRoundTrip) {
    Rng a(7);
    for (int i = 0; i < 5; ++i) a.next_u64();
    Rng b = Rng::from_state(a.state());
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformAndBelowInRange) {
    Rng r(9);
    double mean = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        mean += u;
        ASSERT_LT(r.below(7), 7u);
    }
    EXPECT_NEAR(mean / 20000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
    Rng r(10);
    double s = 0.0, ss = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        ss += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.02);
    EXPECT_NEAR(ss / n, 1.0, 0.03);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng r(1);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}
