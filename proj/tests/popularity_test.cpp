#include "topnpred/popularity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace topnpred;

namespace {

event_log log_of(const std::string& items) {
    std::string text;
    int t = 0;
    for (char ch : items)
        text += "u," + std::string(1, ch) + "," + std::to_string(t++) + "\n";
    std::istringstream in(text);
    return parse_events(in, {});
}

std::vector<double> power_law(double xi, std::size_t n, double scale = 1.0) {
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k)
        f[k] = scale * std::pow(static_cast<double>(k + 1), -xi);
    return f;
}

} // namespace

TEST(RankFrequencies, CountsDescending) {
    auto prof = rank_frequencies(log_of("aaabbc"));
    EXPECT_EQ(prof.freqs, (std::vector<std::uint64_t>{3, 2, 1}));
    EXPECT_EQ(prof.total(), 6u);
}

TEST(RankFrequencies, AllDistinct) {
    auto prof = rank_frequencies(log_of("abcdef"));
    EXPECT_EQ(prof.freqs, std::vector<std::uint64_t>(6, 1));
}

TEST(RankFrequencies, TieBreakByCode) {
    // c is coded 0, a 1, b 2; the tie between a and c keeps code order.
    auto log = log_of("cabab");
    auto prof = rank_frequencies(log);
    EXPECT_EQ(prof.freqs, (std::vector<std::uint64_t>{2, 2, 1}));
    EXPECT_EQ(log.item_names[prof.items[0]], "a");
    EXPECT_EQ(log.item_names[prof.items[1]], "b");
    EXPECT_EQ(log.item_names[prof.items[2]], "c");
}

TEST(RankFrequencies, RecoversConstructedCounts) {
    std::string text;
    std::vector<std::uint64_t> expected;
    int t = 0;
    for (int k = 1; k <= 40; ++k) {
        const auto f = static_cast<std::uint64_t>(std::llround(10000 * std::pow(k, -0.6)));
        expected.push_back(f);
        for (std::uint64_t j = 0; j < f; ++j)
            text += "u,item" + std::to_string(k) + "," + std::to_string(t++) + "\n";
    }
    std::istringstream in(text);
    auto prof = rank_frequencies(parse_events(in, {}));
    EXPECT_EQ(prof.freqs, expected);
}

TEST(RankFrequencies, EmptyLogIsDomainError) {
    EXPECT_THROW(rank_frequencies(event_log{}), domain_error);
}

TEST(FitZipf, ExactPowerLaws) {
    EXPECT_NEAR(fit_zipf(power_law(0.6, 1000)).xi, 0.6, 1e-3);
    EXPECT_NEAR(fit_zipf(power_law(1.0, 1000)).xi, 1.0, 1e-3);
}

TEST(FitZipf, UniformIsZero) {
    auto fit = fit_zipf(std::vector<double>(200, 7.0));
    EXPECT_NEAR(fit.xi, 0.0, 1e-12);
}

TEST(FitZipf, RespectsMaxRank) {
    auto f = power_law(0.6, 50);
    for (int k = 0; k < 50; ++k)
        f.push_back(1e-9);  // would drag the slope if included
    auto fit = fit_zipf(f, 50);
    EXPECT_EQ(fit.ranks_used, 50u);
    EXPECT_NEAR(fit.xi, 0.6, 1e-9);
}

TEST(FitZipf, NegativeSlopeFlaggedNotClamped) {
    auto fit = fit_zipf(std::vector<double>{1, 2, 4, 8});
    EXPECT_LT(fit.xi, 0.0);
    EXPECT_TRUE(fit.negative);
}

TEST(FitZipf, TooFewRanks) {
    EXPECT_THROW(fit_zipf(std::vector<double>{5, 3}), domain_error);
    EXPECT_THROW(fit_zipf(std::vector<double>{5, 3, 0, 0}), domain_error);
    EXPECT_THROW(fit_zipf(power_law(0.6, 10), 2), domain_error);
}

TEST(FitZipf, ScaleInvariant) {
    auto base = fit_zipf(power_law(0.73, 300)).xi;
    for (double s : {0.001, 3.0, 1e6})
        EXPECT_NEAR(fit_zipf(power_law(0.73, 300, s)).xi, base, 1e-9);
}

TEST(CRatios, WorkedExample) {
    auto c = c_ratios(std::vector<double>{10, 7, 6, 5}, 4);
    const std::vector<double> expected{1.0, 0.7, 0.6, 0.5};
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_DOUBLE_EQ(c[i], expected[i]);
}

TEST(CRatios, SingleRank) {
    EXPECT_EQ(c_ratios(std::vector<double>{10, 7}, 1), std::vector<double>{1.0});
}

TEST(CRatios, TenthRankOfXiPointSix) {
    auto c = c_ratios(power_law(0.6, 100), 10);
    EXPECT_NEAR(c[9], std::pow(10.0, -0.6), 1e-12);
    EXPECT_NEAR(c[9], 0.251, 1e-3);
}

TEST(CRatios, ScaleInvariantAndNonIncreasing) {
    auto f = rank_frequencies(log_of("aaaaabbbbcccdde")).freqs;
    auto c = c_ratios(f, 5);
    EXPECT_EQ(c[0], 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_LE(c[i], c[i - 1]);
        EXPECT_GT(c[i], 0.0);
    }
    std::vector<double> scaled;
    for (auto v : f)
        scaled.push_back(3.5 * static_cast<double>(v));
    auto c2 = c_ratios(scaled, 5);
    for (std::size_t i = 0; i < c.size(); ++i)
        EXPECT_DOUBLE_EQ(c[i], c2[i]);
}

TEST(CRatios, RankOutOfRange) {
    EXPECT_THROW(c_ratios(std::vector<double>{3, 2}, 3), domain_error);
    EXPECT_THROW(c_ratios(std::vector<double>{3, 2}, 0), domain_error);
}

TEST(ZipfCRatios, MatchesPowerLaw) {
    auto c = zipf_c_ratios(0.6, 10);
    EXPECT_EQ(c[0], 1.0);
    EXPECT_NEAR(c[1], std::pow(2.0, -0.6), 1e-15);
}
