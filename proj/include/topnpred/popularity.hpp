#pragma once

// Population item popularity: rank-frequency table, Zipf exponent, and the
// c-ratio vector c_i = f_i / f_1 that couples the top-r probabilities.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <ranges>
#include <vector>

#include "topnpred/errors.hpp"
#include "topnpred/events.hpp"

namespace topnpred {

struct popularity_profile {
    std::vector<std::uint64_t> freqs;  // descending
    std::vector<symbol_t> items;       // item code at each rank
    double xi = 0.0;                   // set by fit_zipf
    std::vector<double> c;             // set by c_ratios

    std::uint64_t total() const {
        return std::accumulate(freqs.begin(), freqs.end(), std::uint64_t{0});
    }
};

struct zipf_fit {
    double xi = 0.0;
    std::size_t ranks_used = 0;
    bool negative = false;  // rank law increasing; suspicious for real data
};

inline popularity_profile rank_frequencies(const event_log& log) {
    if (log.records.empty())
        throw domain_error("rank_frequencies: empty log");
    std::vector<std::uint64_t> counts(log.item_count(), 0);
    for (const auto& r : log.records)
        ++counts[r.item];

    popularity_profile prof;
    prof.items.resize(counts.size());
    std::iota(prof.items.begin(), prof.items.end(), symbol_t{0});
    std::stable_sort(prof.items.begin(), prof.items.end(),
                     [&](symbol_t a, symbol_t b) { return counts[a] > counts[b]; });
    // Items with zero count cannot occur; every dictionary entry came from a record.
    prof.freqs.reserve(counts.size());
    for (auto code : prof.items)
        prof.freqs.push_back(counts[code]);
    return prof;
}

// Least-squares slope of log f_k against log k over the leading ranks,
// negated. Non-positive frequencies end the usable prefix.
template <std::ranges::input_range R>
    requires std::is_arithmetic_v<std::ranges::range_value_t<R>>
zipf_fit fit_zipf(const R& freqs, std::size_t max_rank = 1000) {
    if (max_rank < 3)
        throw domain_error("fit_zipf: max_rank must be at least 3");
    std::vector<double> xs, ys;
    std::size_t k = 0;
    for (const auto& f : freqs) {
        if (k == max_rank || !(static_cast<double>(f) > 0.0))
            break;
        ++k;
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(static_cast<double>(f)));
    }
    if (xs.size() < 3)
        throw domain_error("fit_zipf: need at least 3 ranks with positive frequency");

    const auto n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    zipf_fit fit;
    fit.xi = -sxy / sxx;
    fit.ranks_used = xs.size();
    fit.negative = fit.xi < 0.0;
    return fit;
}

inline zipf_fit fit_zipf(const popularity_profile& prof, std::size_t max_rank = 1000) {
    return fit_zipf(prof.freqs, max_rank);
}

template <std::ranges::input_range R>
    requires std::is_arithmetic_v<std::ranges::range_value_t<R>>
std::vector<double> c_ratios(const R& freqs, std::size_t r) {
    std::vector<double> head;
    for (const auto& f : freqs) {
        if (head.size() == r)
            break;
        head.push_back(static_cast<double>(f));
    }
    if (r < 1 || head.size() < r)
        throw domain_error("c_ratios: r must be in [1, available ranks]");
    if (!(head.front() > 0.0))
        throw domain_error("c_ratios: top frequency must be positive");
    std::vector<double> c(r);
    c[0] = 1.0;
    for (std::size_t i = 1; i < r; ++i)
        c[i] = head[i] / head[0];
    return c;
}

inline std::vector<double> c_ratios(const popularity_profile& prof, std::size_t r) {
    return c_ratios(prof.freqs, r);
}

// c_i = i^-xi, used when ratios come from a known exponent instead of data.
inline std::vector<double> zipf_c_ratios(double xi, std::size_t r) {
    std::vector<double> c(r);
    for (std::size_t i = 0; i < r; ++i)
        c[i] = std::pow(static_cast<double>(i + 1), -xi);
    return c;
}

} // namespace topnpred
