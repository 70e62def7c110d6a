#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "skilltrack/hungarian.hpp"

using namespace skilltrack;

namespace {

Matrix<double> from(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix<double> m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

// Minimum over all injections of the smaller side into the larger one.
double brute_force(const Matrix<double>& m) {
    const bool transpose = m.rows() > m.cols();
    const std::size_t small = transpose ? m.cols() : m.rows(), big = transpose ? m.rows() : m.cols();
    std::vector<std::size_t> perm(big);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
        double s = 0;
        for (std::size_t i = 0; i < small; ++i) s += transpose ? m(perm[i], i) : m(i, perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

void expect_matching(const Assignment& a, std::size_t rows, std::size_t cols) {
    std::set<std::size_t> rs, cs;
    for (auto [r, c] : a.pairs) {
        EXPECT_TRUE(rs.insert(r).second);
        EXPECT_TRUE(cs.insert(c).second);
    }
    EXPECT_EQ(a.pairs.size(), std::min(rows, cols));
    EXPECT_EQ(a.pairs.size() + a.unmatched_rows.size(), rows);
    EXPECT_EQ(a.pairs.size() + a.unmatched_cols.size(), cols);
}

}  // namespace

TEST(Hungarian, DiagonalOptimum) {
    auto m = from({{1, 2}, {2, 1}});
    auto a = hungarian(m);
    EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
    EXPECT_EQ(assignment_cost(m, a.pairs), 2);
}

TEST(Hungarian, AntiDiagonalOptimum) {
    auto m = from({{4, 1}, {2, 3}});
    auto a = hungarian(m);
    EXPECT_EQ(a.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}}));
    EXPECT_EQ(assignment_cost(m, a.pairs), 3);
}

TEST(Hungarian, Random5x5MatchesBruteForce) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 300; ++trial) {
        Matrix<double> m(5, 5);
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 5; ++c) m(r, c) = u(rng);
        auto a = hungarian(m);
        expect_matching(a, 5, 5);
        EXPECT_NEAR(assignment_cost(m, a.pairs), brute_force(m), 1e-9);
    }
}

TEST(Hungarian, RectangularIntegerMatrices) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> dim(1, 6), val(0, 9);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t r = std::size_t(dim(rng)), c = std::size_t(dim(rng));
        Matrix<double> m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) m(i, j) = val(rng);
        auto a = hungarian(m, 100.0);
        expect_matching(a, r, c);
        EXPECT_EQ(assignment_cost(m, a.pairs), brute_force(m));
    }
}

TEST(Hungarian, EmptyMatrixLeavesEverythingUnmatched) {
    auto a = hungarian(Matrix<double>(0, 3));
    EXPECT_TRUE(a.pairs.empty());
    EXPECT_EQ(a.unmatched_cols.size(), 3u);
    auto b = hungarian(Matrix<double>(2, 0));
    EXPECT_EQ(b.unmatched_rows.size(), 2u);
}

TEST(Hungarian, NonFiniteRejected) {
    auto m = from({{1, std::numeric_limits<double>::infinity()}, {0, 1}});
    EXPECT_THROW(hungarian(m), ValidationError);
}

TEST(HungarianProperty, NoWorseThanRandomMatchings) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t n = std::size_t(dim(rng));
        Matrix<double> m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        double random_cost = 0;
        for (std::size_t i = 0; i < n; ++i) random_cost += m(i, perm[i]);
        ASSERT_LE(assignment_cost(m, hungarian(m).pairs), random_cost + 1e-12);
    }
}

TEST(HungarianProperty, ScalingKeepsAssignment) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix<double> m(6, 6), scaled(6, 6);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                m(i, j) = u(rng);
                scaled(i, j) = 8.0 * m(i, j);  // power of two: exact
            }
        EXPECT_EQ(hungarian(m).pairs, hungarian(scaled).pairs);
    }
}
