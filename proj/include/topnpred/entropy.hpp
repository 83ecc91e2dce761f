#pragma once

// Lempel-Ziv entropy-rate estimation for symbol sequences.
//
// For each position i the estimator needs Lambda_i, the length of the
// shortest substring starting at i that does not occur inside the prefix
// s[0, i). When the whole remaining suffix already occurs in the prefix,
// Lambda_i is one more than the suffix length.
//
// Lambda_i is one more than the longest prefix of s[i..] that occurs in
// s[0, i). That longest match shrinks by at most one symbol per step, so it
// can be tracked with a suffix automaton over the growing prefix: drop the
// first symbol through the suffix link, append s[i] to the automaton, then
// extend the match. Total work is O(n log sigma).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topnpred/errors.hpp"

namespace topnpred {

struct lambda_profile {
    std::vector<std::uint64_t> lambdas;

    std::size_t size() const { return lambdas.size(); }
    std::uint64_t sum() const {
        return std::accumulate(lambdas.begin(), lambdas.end(), std::uint64_t{0});
    }
};

// Online suffix automaton over integer symbols. Transitions are kept as sorted
// (symbol, target) vectors; root fan-out is the alphabet size, all other
// states are sparse.
template <std::integral Symbol>
class suffix_automaton {
public:
    static constexpr std::int32_t none = -1;

    struct state {
        std::int64_t len = 0;
        std::int32_t link = none;
        std::vector<std::pair<Symbol, std::int32_t>> next;
    };

    // Reports the clone created by the latest extend(), if any.
    struct split {
        std::int32_t original = none;
        std::int32_t clone = none;
    };

    suffix_automaton() { states_.emplace_back(); }

    void reserve(std::size_t n) { states_.reserve(2 * n + 1); }

    std::int32_t root() const { return 0; }
    const state& at(std::int32_t s) const { return states_[static_cast<std::size_t>(s)]; }

    std::int32_t transition(std::int32_t s, Symbol c) const {
        const auto& nx = at(s).next;
        auto it = std::lower_bound(nx.begin(), nx.end(), c,
                                   [](const auto& e, Symbol v) { return e.first < v; });
        if (it == nx.end() || it->first != c)
            return none;
        return it->second;
    }

    split extend(Symbol c) {
        split result;
        const auto cur = add_state(at(last_).len + 1);
        auto p = last_;
        while (p != none && transition(p, c) == none) {
            set_transition(p, c, cur);
            p = at(p).link;
        }
        if (p == none) {
            mut(cur).link = 0;
        } else {
            const auto q = transition(p, c);
            if (at(p).len + 1 == at(q).len) {
                mut(cur).link = q;
            } else {
                const auto clone = add_state(at(p).len + 1);
                mut(clone).next = at(q).next;
                mut(clone).link = at(q).link;
                while (p != none && transition(p, c) == q) {
                    set_transition(p, c, clone);
                    p = at(p).link;
                }
                mut(q).link = clone;
                mut(cur).link = clone;
                result = {q, clone};
            }
        }
        last_ = cur;
        return result;
    }

private:
    std::int32_t add_state(std::int64_t len) {
        states_.emplace_back();
        states_.back().len = len;
        return static_cast<std::int32_t>(states_.size() - 1);
    }

    state& mut(std::int32_t s) { return states_[static_cast<std::size_t>(s)]; }

    void set_transition(std::int32_t s, Symbol c, std::int32_t target) {
        auto& nx = mut(s).next;
        auto it = std::lower_bound(nx.begin(), nx.end(), c,
                                   [](const auto& e, Symbol v) { return e.first < v; });
        if (it != nx.end() && it->first == c)
            it->second = target;
        else
            nx.insert(it, {c, target});
    }

    std::vector<state> states_;
    std::int32_t last_ = 0;
};

template <std::integral Symbol>
lambda_profile lz_lambdas(std::span<const Symbol> seq) {
    if (seq.empty())
        throw domain_error("lz_lambdas: empty sequence");

    const auto n = seq.size();
    lambda_profile out;
    out.lambdas.resize(n);

    suffix_automaton<Symbol> sam;
    sam.reserve(n);
    auto match_state = sam.root();
    std::size_t match_len = 0;  // longest prefix of seq[i..] found in seq[0, i)

    for (std::size_t i = 0; i < n; ++i) {
        while (i + match_len < n) {
            auto nxt = sam.transition(match_state, seq[i + match_len]);
            if (nxt == sam.none)
                break;
            match_state = nxt;
            ++match_len;
        }
        out.lambdas[i] = match_len + 1;

        // Slide to i+1: drop seq[i] from the front of the match...
        if (match_len > 0) {
            --match_len;
            const auto link = sam.at(match_state).link;
            if (link != sam.none && static_cast<std::int64_t>(match_len) <= sam.at(link).len)
                match_state = link;
            if (match_len == 0)
                match_state = sam.root();
        }
        // ...and add it to the end of the prefix. A clone steals the short
        // strings of the state it splits.
        auto sp = sam.extend(seq[i]);
        if (sp.original == match_state &&
            static_cast<std::int64_t>(match_len) <= sam.at(sp.clone).len)
            match_state = sp.clone;
    }
    return out;
}

template <std::integral Symbol>
lambda_profile lz_lambdas(const std::vector<Symbol>& seq) {
    return lz_lambdas(std::span<const Symbol>(seq));
}

// Entropy-rate estimate in bits per symbol: (n / sum Lambda_i) * log2 n.
inline double lz_entropy_from_lambdas(const lambda_profile& prof) {
    const auto n = static_cast<double>(prof.size());
    return n / static_cast<double>(prof.sum()) * std::log2(n);
}

template <std::integral Symbol>
double lz_entropy_rate(std::span<const Symbol> seq) {
    if (seq.size() < 2)
        throw domain_error("lz_entropy_rate: sequence needs at least 2 symbols");
    return lz_entropy_from_lambdas(lz_lambdas(seq));
}

template <std::integral Symbol>
double lz_entropy_rate(const std::vector<Symbol>& seq) {
    return lz_entropy_rate(std::span<const Symbol>(seq));
}

// Logarithm base applied to log n in the estimator. The Fano solver always
// works in bits; nats reproduces the natural-log form used by some of the
// predictability literature and is kept for comparison.
enum class entropy_unit { bits, nats };

inline std::string_view to_string(entropy_unit u) {
    return u == entropy_unit::bits ? "bits" : "nats";
}

inline entropy_unit parse_entropy_unit(std::string_view s) {
    if (s == "bits")
        return entropy_unit::bits;
    if (s == "nats")
        return entropy_unit::nats;
    throw config_error("unknown entropy unit '" + std::string(s) + "'");
}

template <std::integral Symbol>
double lz_entropy_rate(std::span<const Symbol> seq, entropy_unit unit) {
    const double bits = lz_entropy_rate(seq);
    return unit == entropy_unit::bits ? bits : bits * std::log(2.0);
}

} // namespace topnpred
