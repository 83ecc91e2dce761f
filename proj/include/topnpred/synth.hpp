#pragma once

// Markov sequence generators with known predictability.
//
// first_order: six-slot circulant chain. Slots 0..4 are concrete states
// 0..4; slot 5 ("R") stands for the M - 5 remaining states. From slot s,
// slot (s + k) % 6 is taken with probability c_{k+1} p for k = 0..4 and
// slot (s + 5) % 6 takes the leftover mass 1 - p sum c. Entering R picks a
// member uniformly.
//
// second_order: with previous state i and current state j (1-based), the
// next state is i + j + x (wrapped into 1..M) with probability c_{x+1} p,
// otherwise uniform over all M states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topnpred/errors.hpp"
#include "topnpred/events.hpp"
#include "topnpred/popularity.hpp"
#include "topnpred/rng.hpp"

namespace topnpred {

enum class generator_method { first_order, second_order };

// How first_order realizes the R -> R transition.
enum class r_self_mode {
    uniform_member,  // redraw a member of R
    same_state,      // stay on the current concrete state
};

inline std::string_view to_string(generator_method m) {
    return m == generator_method::first_order ? "first_order" : "second_order";
}

inline generator_method parse_generator_method(std::string_view s) {
    if (s == "first_order" || s == "first")
        return generator_method::first_order;
    if (s == "second_order" || s == "second")
        return generator_method::second_order;
    throw config_error("unknown generator method '" + std::string(s) + "'");
}

inline constexpr std::size_t coupled_ranks = 5;

struct generator_spec {
    generator_method method = generator_method::second_order;
    std::size_t m = 1000;
    double p = 0.2;
    std::vector<double> c = zipf_c_ratios(0.6, coupled_ranks);
    std::size_t length = 1u << 15;
    std::uint64_t seed = 1;
    r_self_mode r_self = r_self_mode::uniform_member;

    double head_mass() const { return p * std::accumulate(c.begin(), c.end(), 0.0); }
};

inline generator_spec make_spec(generator_method method, std::size_t m, double p, double xi,
                                std::size_t length, std::uint64_t seed) {
    generator_spec s;
    s.method = method;
    s.m = m;
    s.p = p;
    s.c = zipf_c_ratios(xi, coupled_ranks);
    s.length = length;
    s.seed = seed;
    return s;
}

inline void validate(const generator_spec& s) {
    if (s.c.size() != coupled_ranks)
        throw domain_error("generator: c must have exactly 5 entries");
    for (double v : s.c)
        if (!(v > 0.0))
            throw domain_error("generator: c entries must be positive");
    if (!(s.p >= 0.0))
        throw domain_error("generator: p must be non-negative");
    if (!(s.head_mass() < 1.0))
        throw domain_error("generator: p * sum(c) must be below 1");
    if (s.m <= coupled_ranks)
        throw domain_error("generator: M must exceed 5");
    if (s.length < 1)
        throw domain_error("generator: length must be at least 1");
}

// Next-state law as a few explicit states plus one shared probability for
// every other state.
struct next_distribution {
    std::vector<std::pair<symbol_t, double>> specials;
    double background = 0.0;
    std::size_t m = 0;

    std::size_t background_count() const { return m - specials.size(); }

    double prob(symbol_t s) const {
        for (const auto& [state, q] : specials)
            if (state == s)
                return q;
        return background;
    }

    // Probabilities in descending order, truncated to k entries.
    std::vector<double> top(std::size_t k) const {
        std::vector<double> qs;
        for (const auto& sp : specials)
            qs.push_back(sp.second);
        std::sort(qs.begin(), qs.end(), std::greater<>());
        std::vector<double> out;
        std::size_t bg_left = background_count();
        std::size_t i = 0;
        while (out.size() < k && (i < qs.size() || bg_left > 0)) {
            if (i < qs.size() && (bg_left == 0 || qs[i] >= background))
                out.push_back(qs[i++]);
            else {
                out.push_back(background);
                --bg_left;
            }
        }
        return out;
    }

    // Position of `s` when states are ordered by (probability desc, code asc).
    std::size_t rank_of(symbol_t s) const {
        const double q = prob(s);
        std::size_t rank = 0;
        std::size_t specials_below_s = 0;
        for (const auto& [state, qs] : specials) {
            if (state == s)
                continue;
            if (qs > q || (qs == q && state < s))
                ++rank;
            if (state < s)
                ++specials_below_s;
        }
        if (background > q) {
            rank += background_count();  // s itself must be special here
        } else if (background == q) {
            // Background states with a smaller code.
            rank += static_cast<std::size_t>(s) - specials_below_s;
        }
        return rank;
    }

    double entropy_bits() const {
        double h = 0.0;
        for (const auto& sp : specials)
            if (sp.second > 0.0)
                h -= sp.second * std::log2(sp.second);
        if (background > 0.0)
            h -= static_cast<double>(background_count()) * background * std::log2(background);
        return h;
    }
};

namespace detail {

constexpr std::size_t slot_count = 6;
constexpr std::size_t r_slot = 5;

inline std::size_t slot_of(symbol_t state) {
    return state < r_slot ? static_cast<std::size_t>(state) : r_slot;
}

// Probability of moving from slot s to slot (s + k) % 6.
inline double slot_step_prob(const generator_spec& s, std::size_t k) {
    return k < coupled_ranks ? s.c[k] * s.p : 1.0 - s.head_mass();
}

inline next_distribution first_order_next(const generator_spec& s, symbol_t current) {
    next_distribution d;
    d.m = s.m;
    const auto from = slot_of(current);
    const double r_members = static_cast<double>(s.m - r_slot);
    double r_mass = 0.0;
    for (std::size_t k = 0; k < slot_count; ++k) {
        const auto to = (from + k) % slot_count;
        const double q = slot_step_prob(s, k);
        if (to == r_slot) {
            if (from == r_slot && s.r_self == r_self_mode::same_state)
                d.specials.emplace_back(current, q);
            else
                r_mass = q;
        } else {
            d.specials.emplace_back(static_cast<symbol_t>(to), q);
        }
    }
    if (from == r_slot && s.r_self == r_self_mode::same_state)
        d.background = 0.0;
    else
        d.background = r_mass / r_members;
    return d;
}

inline symbol_t second_order_target(const generator_spec& s, symbol_t prev, symbol_t cur,
                                    std::size_t x) {
    // 1-based k = i + j + x wrapped as ((k - 1) mod M) + 1, in 0-based codes.
    return static_cast<symbol_t>((static_cast<std::uint64_t>(prev) + cur + 1 + x) % s.m);
}

inline next_distribution second_order_next(const generator_spec& s, symbol_t prev,
                                           symbol_t cur) {
    next_distribution d;
    d.m = s.m;
    const double spread = (1.0 - s.head_mass()) / static_cast<double>(s.m);
    for (std::size_t x = 0; x < coupled_ranks; ++x)
        d.specials.emplace_back(second_order_target(s, prev, cur, x), s.c[x] * s.p + spread);
    d.background = spread;
    return d;
}

// Index of the branch selected by u among cumulative c_i p; coupled_ranks
// means "outside every head".
inline std::size_t pick_branch(const generator_spec& s, double u) {
    double acc = 0.0;
    for (std::size_t x = 0; x < coupled_ranks; ++x) {
        acc += s.c[x] * s.p;
        if (u <= acc)
            return x;
    }
    return coupled_ranks;
}

} // namespace detail

inline symbol_sequence generate_first_order(const generator_spec& s) {
    validate(s);
    if (s.method != generator_method::first_order)
        throw domain_error("generate_first_order: spec method is not first_order");
    rng64 rng(s.seed);
    std::vector<symbol_t> out;
    out.reserve(s.length);
    auto state = static_cast<symbol_t>(rng.below(s.m));
    out.push_back(state);
    const auto r_members = s.m - detail::r_slot;
    while (out.size() < s.length) {
        const auto from = detail::slot_of(state);
        const auto k = detail::pick_branch(s, rng.uniform01());  // 5 = leftover branch
        const auto to = (from + k) % detail::slot_count;
        if (to != detail::r_slot)
            state = static_cast<symbol_t>(to);
        else if (!(from == detail::r_slot && s.r_self == r_self_mode::same_state))
            state = static_cast<symbol_t>(detail::r_slot + rng.below(r_members));
        out.push_back(state);
    }
    return make_sequence(std::move(out));
}

inline symbol_sequence generate_second_order(const generator_spec& s) {
    validate(s);
    if (s.method != generator_method::second_order)
        throw domain_error("generate_second_order: spec method is not second_order");
    rng64 rng(s.seed);
    std::vector<symbol_t> out;
    out.reserve(s.length);
    out.push_back(static_cast<symbol_t>(rng.below(s.m)));
    if (s.length > 1)
        out.push_back(static_cast<symbol_t>(rng.below(s.m)));
    while (out.size() < s.length) {
        const auto prev = out[out.size() - 2];
        const auto cur = out.back();
        const auto x = detail::pick_branch(s, rng.uniform01());
        if (x < coupled_ranks)
            out.push_back(detail::second_order_target(s, prev, cur, x));
        else
            out.push_back(static_cast<symbol_t>(rng.below(s.m)));
    }
    return make_sequence(std::move(out));
}

inline symbol_sequence generate(const generator_spec& s) {
    return s.method == generator_method::first_order ? generate_first_order(s)
                                                     : generate_second_order(s);
}

enum class truth_source { analytic, stationary_oracle };

inline std::string_view to_string(truth_source t) {
    return t == truth_source::analytic ? "analytic" : "stationary-oracle";
}

struct ground_truth {
    std::vector<double> top_pi;      // k-th most likely next state, averaged
    std::vector<double> cumulative;  // Top-1..Top-k
    truth_source source = truth_source::analytic;
    double entropy_rate = 0.0;       // bits per symbol
};

// Stationary distribution of the 6x6 slot chain by power iteration.
inline std::vector<double> slot_stationary(const generator_spec& s) {
    std::vector<double> pi(detail::slot_count, 1.0 / detail::slot_count), next(pi.size());
    for (int it = 0; it < 100000; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t from = 0; from < detail::slot_count; ++from)
            for (std::size_t k = 0; k < detail::slot_count; ++k)
                next[(from + k) % detail::slot_count] += pi[from] * detail::slot_step_prob(s, k);
        double diff = 0.0;
        for (std::size_t i = 0; i < pi.size(); ++i)
            diff = std::max(diff, std::abs(next[i] - pi[i]));
        pi.swap(next);
        if (diff < 1e-16)
            break;
    }
    return pi;
}

inline ground_truth true_predictability(const generator_spec& s, std::size_t ranks = 10) {
    validate(s);
    ground_truth gt;
    gt.top_pi.assign(std::min(ranks, s.m), 0.0);
    if (s.method == generator_method::second_order) {
        gt.source = truth_source::analytic;
        const auto d = detail::second_order_next(s, 0, 0);
        gt.top_pi = d.top(gt.top_pi.size());
        gt.entropy_rate = d.entropy_bits();
    } else {
        gt.source = truth_source::stationary_oracle;
        const auto pi = slot_stationary(s);
        for (std::size_t slot = 0; slot < detail::slot_count; ++slot) {
            // Any member of R has the same law up to relabeling.
            const auto d = detail::first_order_next(s, static_cast<symbol_t>(slot));
            const auto top = d.top(gt.top_pi.size());
            for (std::size_t k = 0; k < top.size(); ++k)
                gt.top_pi[k] += pi[slot] * top[k];
            gt.entropy_rate += pi[slot] * d.entropy_bits();
        }
    }
    gt.cumulative.resize(gt.top_pi.size());
    std::partial_sum(gt.top_pi.begin(), gt.top_pi.end(), gt.cumulative.begin());
    for (auto& v : gt.cumulative)
        v = std::min(v, 1.0);
    return gt;
}

struct oracle_result {
    double accuracy = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
};

// Runs the generator and scores a predictor that knows the generator parameters and the full
// current state and names its N most probable next states.
inline oracle_result oracle_accuracy(generator_spec s, std::size_t n, std::size_t steps) {
    validate(s);
    if (n < 1 || n > s.m)
        throw domain_error("oracle_accuracy: N must be in [1, M]");
    if (steps < 1000)
        throw domain_error("oracle_accuracy: need at least 1000 steps");
    const std::size_t warmup = 2;
    s.length = steps + warmup;
    const auto seq = generate(s);
    std::size_t hits = 0;
    for (std::size_t t = warmup; t < seq.size(); ++t) {
        const auto d = s.method == generator_method::first_order
                           ? detail::first_order_next(s, seq.symbols[t - 1])
                           : detail::second_order_next(s, seq.symbols[t - 2], seq.symbols[t - 1]);
        if (d.rank_of(seq.symbols[t]) < n)
            ++hits;
    }
    oracle_result res;
    res.trials = steps;
    res.accuracy = static_cast<double>(hits) / static_cast<double>(steps);
    res.std_error = std::sqrt(res.accuracy * (1.0 - res.accuracy) / static_cast<double>(steps));
    return res;
}

} // namespace topnpred
