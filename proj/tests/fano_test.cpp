#include "topnpred/fano.hpp"
#include "topnpred/popularity.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace topnpred;
using topnpred::testing::flattened_distribution;
using topnpred::testing::shannon_bits;

namespace {

// Random valid problem with c drawn from a Zipf exponent.
fano_problem random_problem(std::mt19937_64& rng, std::size_t max_m, std::size_t max_r) {
    fano_problem p;
    p.m = std::uniform_int_distribution<std::size_t>(2, max_m)(rng);
    const auto r_cap = std::min(max_r, p.m - 1);
    const auto r = std::uniform_int_distribution<std::size_t>(1, r_cap)(rng);
    const double xi = std::uniform_real_distribution<double>(0.0, 1.5)(rng);
    p.c = zipf_c_ratios(xi, r);
    return p;
}

double random_feasible_x(const fano_problem& p, std::mt19937_64& rng) {
    auto dom = feasible_domain(p);
    return std::uniform_real_distribution<double>(dom.lo, dom.hi)(rng);
}

} // namespace

TEST(SfEval, UniformSingleHead) {
    EXPECT_NEAR(sf_eval({0.0, 4, {1.0}}, 0.25), 2.0, 1e-12);
}

TEST(SfEval, DeterministicIsZero) {
    for (std::size_t m : {2u, 10u, 5000u})
        EXPECT_NEAR(sf_eval({0.0, m, {1.0}}, 1.0), 0.0, 1e-15);
}

TEST(SfEval, MatchesExplicitDistribution) {
    const fano_problem p{0.0, 10, {1.0, 0.5}};
    std::vector<double> dist{0.4, 0.2};
    for (int i = 0; i < 8; ++i)
        dist.push_back(0.05);
    EXPECT_NEAR(sf_eval(p, 0.4), shannon_bits(dist), 1e-12);
}

TEST(SfEval, InfeasiblePointsReportConstraint) {
    const fano_problem p{0.0, 10, {1.0, 0.5}};
    try {
        sf_eval(p, 0.9);
        FAIL() << "expected infeasible_point";
    } catch (const infeasible_point& e) {
        EXPECT_EQ(e.constraint, fano_constraint::head_mass);
    }
    try {
        sf_eval(p, 0.01);
        FAIL() << "expected infeasible_point";
    } catch (const infeasible_point& e) {
        EXPECT_EQ(e.constraint, fano_constraint::tail_order);
    }
}

TEST(SfEval, OracleEquivalenceRandomized) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        auto p = random_problem(rng, 50, 5);
        const double x = random_feasible_x(p, rng);
        const auto dist = flattened_distribution(p.c, x, p.m);
        ASSERT_NEAR(sf_eval(p, x), shannon_bits(dist), 1e-12) << "trial " << trial;
    }
}

TEST(SfEval, StrictlyDecreasingOnFeasibleDomain) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        auto p = random_problem(rng, 100000, 10);
        auto dom = feasible_domain(p);
        double prev = sf_eval(p, dom.lo);
        for (int k = 1; k <= 50; ++k) {
            const double x = dom.lo + (dom.hi - dom.lo) * k / 50.0;
            const double cur = sf_eval(p, x);
            ASSERT_LT(cur, prev) << "trial " << trial << " k " << k;
            prev = cur;
        }
    }
}

TEST(SfEval, ConcaveOnFeasibleDomain) {
    std::mt19937_64 rng(29);
    const double h = 1e-4;
    for (int trial = 0; trial < 300; ++trial) {
        auto p = random_problem(rng, 1000, 10);
        auto dom = feasible_domain(p);
        if (dom.hi - dom.lo < 4 * h)
            continue;
        for (double x = dom.lo + h; x + h <= dom.hi; x += (dom.hi - dom.lo) / 37.0) {
            const double second = sf_eval(p, x + h) - 2 * sf_eval(p, x) + sf_eval(p, x - h);
            ASSERT_LE(second, 1e-9) << "trial " << trial << " x " << x;
        }
    }
}

TEST(SfEval, DerivativeMatchesCentralDifference) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        auto p = random_problem(rng, 5000, 10);
        auto dom = feasible_domain(p);
        const double width = dom.hi - dom.lo;
        const double x = dom.lo + width * std::uniform_real_distribution<double>(0.1, 0.9)(rng);
        const double h = width * 1e-5;
        const double fd = (sf_eval(p, x + h) - sf_eval(p, x - h)) / (2 * h);
        const double exact = sf_derivative(p, x);
        ASSERT_NEAR(fd, exact, 1e-6 * std::abs(exact)) << "trial " << trial;
    }
}

TEST(SfSolve, UniformCase) {
    auto res = sf_solve({2.0, 4, {1.0}});
    EXPECT_NEAR(res.pi1, 0.25, 1e-9);
}

TEST(SfSolve, RoundTripSingleHead) {
    const double s = sf_eval({0.0, 100, {1.0}}, 0.8);
    auto res = sf_solve({s, 100, {1.0}});
    EXPECT_NEAR(res.pi1, 0.8, 1e-9);
    EXPECT_FALSE(res.clamped);
    EXPECT_LT(res.residual, 1e-8);
}

TEST(SfSolve, WorkedExampleFourHeads) {
    const std::vector<double> c{1.0, 0.7, 0.6, 0.5};
    const double s = sf_eval({0.0, 1000, c}, 0.2);
    auto res = sf_solve({s, 1000, c});
    EXPECT_NEAR(res.pi1, 0.2, 1e-9);
    const std::vector<double> expected{0.2, 0.34, 0.46, 0.56};
    ASSERT_EQ(res.topn.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(res.topn[k], expected[k], 1e-9);
}

TEST(SfSolve, RoundTripRandomized) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 1000; ++trial) {
        auto p = random_problem(rng, 100000, 10);
        const double x = random_feasible_x(p, rng);
        p.entropy = sf_eval(p, x);
        auto res = sf_solve(p);
        ASSERT_NEAR(res.pi1, x, 1e-9) << "trial " << trial;
    }
}

TEST(SfSolve, ClampsAboveRepresentableEntropy) {
    auto res = sf_solve({12.0, 1000, {1.0, 0.7}});
    EXPECT_TRUE(res.clamped);
    EXPECT_DOUBLE_EQ(res.pi1, feasible_domain({0.0, 1000, {1.0, 0.7}}).lo);
}

TEST(SfSolve, ClampsAtUpperBoundary) {
    auto res = sf_solve({0.0, 1000, {1.0, 0.7}});
    EXPECT_TRUE(res.clamped);
    EXPECT_NEAR(res.pi1, 1.0 / 1.7, 1e-15);
    EXPECT_DOUBLE_EQ(res.topn.back(), 1.0);
}

TEST(SfSolve, TopNNonDecreasingAndCapped) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        auto p = random_problem(rng, 10000, 10);
        p.entropy = std::uniform_real_distribution<double>(0.0, 14.0)(rng);
        auto res = sf_solve(p);
        for (std::size_t k = 0; k < res.topn.size(); ++k) {
            ASSERT_GT(res.topn[k], 0.0);
            ASSERT_LE(res.topn[k], 1.0);
            if (k > 0) {
                ASSERT_GE(res.topn[k], res.topn[k - 1]);
            }
        }
        if (!res.clamped) {
            ASSERT_LT(res.residual, 1e-6);
        }
    }
}

TEST(SfSolve, OrderingChainAcrossRanks) {
    std::mt19937_64 rng(43);
    int compared = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto m = std::uniform_int_distribution<std::size_t>(50, 100000)(rng);
        const double xi = std::uniform_real_distribution<double>(0.3, 1.2)(rng);
        const double s = std::uniform_real_distribution<double>(0.5, std::log2(m) - 0.5)(rng);
        auto ladder = solve_rank_ladder(s, m, zipf_c_ratios(xi, 10));
        for (std::size_t r = 1; r < ladder.size(); ++r) {
            // The chain is a statement about actual roots; boundary clamps
            // are excluded.
            if (ladder[r].clamped || ladder[r - 1].clamped)
                continue;
            ++compared;
            ASSERT_LE(ladder[r].pi1, ladder[r - 1].pi1 + 1e-12) << "trial " << trial << " r " << r;
        }
    }
    EXPECT_GT(compared, 1000);
}

TEST(SfSolve, RejectsInvalidProblems) {
    EXPECT_THROW(sf_solve({1.0, 1, {1.0}}), domain_error);
    EXPECT_THROW(sf_solve({1.0, 3, {1.0, 0.5, 0.2}}), domain_error);
    EXPECT_THROW(sf_solve({-0.1, 10, {1.0}}), domain_error);
    EXPECT_THROW(sf_solve({1.0, 10, {0.9}}), domain_error);
    EXPECT_THROW(sf_solve({1.0, 10, {1.0, 0.5, 0.7}}), domain_error);
    EXPECT_THROW(sf_solve({1.0, 10, {1.0, 0.0}}), domain_error);
}

TEST(SolveClassic, Uniform) {
    EXPECT_NEAR(solve_classic(std::log2(50.0), 50).pi1, 0.02, 1e-9);
}

TEST(SolveClassic, ZeroEntropy) {
    auto res = solve_classic(0.0, 50);
    EXPECT_DOUBLE_EQ(res.pi1, 1.0);
    EXPECT_TRUE(res.clamped);
}

TEST(SolveClassic, MobilityRoundTrip) {
    const double s = sf_eval({0.0, 2651, {1.0}}, 0.93);
    EXPECT_NEAR(solve_classic(s, 2651).pi1, 0.93, 1e-9);
}

TEST(SolveNaiveTopN, InsensitiveToN) {
    // Regression values from an independent Brent root of
    // H(x) + (1 - x) log2(M - N - 1) = 5.
    const auto n1 = solve_naive_topn(5.0, 10000, 1);
    const auto n10 = solve_naive_topn(5.0, 10000, 10);
    EXPECT_NEAR(n1.pi1, 0.6908497863350113, 1e-9);
    EXPECT_NEAR(n10.pi1, 0.6908219816131631, 1e-9);
    EXPECT_LT(std::abs(n1.pi1 - n10.pi1), 0.01);
}

TEST(SolveNaiveTopN, ZeroNIsClassic) {
    EXPECT_DOUBLE_EQ(solve_naive_topn(3.3, 400, 0).pi1, solve_classic(3.3, 400).pi1);
}

TEST(SolveNaiveTopN, ZeroEntropy) {
    for (std::size_t n : {0u, 1u, 5u, 98u})
        EXPECT_DOUBLE_EQ(solve_naive_topn(0.0, 100, n).pi1, 1.0);
}

TEST(SolveNaiveTopN, TooLargeN) {
    EXPECT_THROW(solve_naive_topn(1.0, 10, 10), domain_error);
}
