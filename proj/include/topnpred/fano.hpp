#pragma once

// Generalized Fano bound for Top-N predictability.
//
// The scaled entropy keeps the r most likely next items at c_i * x and
// flattens the remaining M - r candidates to a uniform tail:
//
//   S_Fr(x) = -sum_i c_i x log2(c_i x) - t log2 t + t log2(M - r),
//   t = 1 - x sum_i c_i.
//
// On the feasible interval [x_lo, x_hi], where every head is at least the
// tail cell and t >= 0, S_Fr strictly decreases and is concave, so
// S_Fr(x) = S has at most one root there. That root bounds the Top-1
// predictability from above; Top-k bounds follow as x * sum_{i<=k} c_i.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "topnpred/errors.hpp"

namespace topnpred {

struct fano_problem {
    double entropy = 0.0;   // bits per symbol
    std::size_t m = 2;      // candidate-set size
    std::vector<double> c;  // c_1 = 1 >= c_2 >= ... > 0; r = c.size()

    std::size_t r() const { return c.size(); }
};

struct bound_result {
    double pi1 = 0.0;
    std::vector<double> topn;  // cumulative Top-1..Top-r, capped at 1
    bool clamped = false;      // root fell outside the feasible interval
    double residual = 0.0;     // |S_Fr(pi1) - S|
};

struct feasible_interval {
    double lo = 0.0;
    double hi = 1.0;
};

enum class fano_constraint {
    head_mass,   // x * sum c_i exceeds 1
    tail_order,  // c_r * x fell below the uniform tail cell
};

class infeasible_point : public domain_error {
public:
    infeasible_point(fano_constraint which, const std::string& what)
        : domain_error(what), constraint(which) {}
    fano_constraint constraint;
};

inline void validate(const fano_problem& p) {
    if (p.m < 2)
        throw domain_error("fano: M must be at least 2");
    if (p.c.empty() || p.r() > p.m - 1)
        throw domain_error("fano: r must be in [1, M-1]");
    if (!std::isfinite(p.entropy) || p.entropy < 0.0)
        throw domain_error("fano: entropy must be finite and non-negative");
    if (p.c.front() != 1.0)
        throw domain_error("fano: c_1 must equal 1");
    for (std::size_t i = 0; i < p.c.size(); ++i) {
        if (!(p.c[i] > 0.0) || p.c[i] > 1.0)
            throw domain_error("fano: c_i must lie in (0, 1]");
        if (i > 0 && p.c[i] > p.c[i - 1])
            throw domain_error("fano: c must be non-increasing");
    }
}

namespace detail {

inline double c_sum(const std::vector<double>& c) {
    double s = 0.0;
    for (double v : c)
        s += v;
    return s;
}

inline double xlog2x(double v) { return v > 0.0 ? v * std::log2(v) : 0.0; }

constexpr double boundary_slack = 1e-12;

} // namespace detail

inline feasible_interval feasible_domain(const fano_problem& p) {
    const double cs = detail::c_sum(p.c);
    const double tail_cells = static_cast<double>(p.m - p.r());
    return {1.0 / (p.c.back() * tail_cells + cs), 1.0 / cs};
}

// S_Fr(x) in bits. Throws infeasible_point outside [x_lo, x_hi].
inline double sf_eval(const fano_problem& p, double x) {
    const double cs = detail::c_sum(p.c);
    const double head = cs * x;
    if (!(x > 0.0) || head > 1.0 + detail::boundary_slack)
        throw infeasible_point(fano_constraint::head_mass,
                               "sf_eval: x * sum(c) must lie in (0, 1]");
    const double rest = std::max(0.0, 1.0 - head);
    const double tail_cells = static_cast<double>(p.m - p.r());
    if (p.c.back() * x < rest / tail_cells * (1.0 - detail::boundary_slack))
        throw infeasible_point(fano_constraint::tail_order,
                               "sf_eval: c_r * x must not fall below the tail probability");
    double h = 0.0;
    for (double ci : p.c)
        h -= detail::xlog2x(ci * x);
    h -= detail::xlog2x(rest);
    h += rest * std::log2(tail_cells);
    return h;
}

// dS_Fr/dx = -sum_i c_i log2(c_i x / tail_cell).
inline double sf_derivative(const fano_problem& p, double x) {
    const double rest = 1.0 - detail::c_sum(p.c) * x;
    const double tail_cell = rest / static_cast<double>(p.m - p.r());
    double d = 0.0;
    for (double ci : p.c)
        d -= ci * std::log2(ci * x / tail_cell);
    return d;
}

inline std::vector<double> cumulative_topn(double pi1, const std::vector<double>& c) {
    std::vector<double> out(c.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        acc += c[k];
        out[k] = std::min(1.0, pi1 * acc);
    }
    return out;
}

struct solver_options {
    double x_tolerance = 1e-10;
    int max_iterations = 200;
};

inline bound_result sf_solve(const fano_problem& p, const solver_options& opt = {}) {
    validate(p);
    const auto dom = feasible_domain(p);
    const double f_lo = sf_eval(p, dom.lo);
    const double f_hi = sf_eval(p, dom.hi);

    bound_result res;
    if (p.entropy >= f_lo) {
        res.pi1 = dom.lo;
        res.clamped = true;
    } else if (p.entropy <= f_hi) {
        res.pi1 = dom.hi;
        res.clamped = true;
    } else {
        double lo = dom.lo, hi = dom.hi;
        for (int it = 0; it < opt.max_iterations && hi - lo > opt.x_tolerance; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (sf_eval(p, mid) > p.entropy)
                lo = mid;
            else
                hi = mid;
        }
        res.pi1 = 0.5 * (lo + hi);
    }
    res.residual = std::abs(sf_eval(p, res.pi1) - p.entropy);
    res.topn = cumulative_topn(res.pi1, p.c);
    return res;
}

// Single-head bound with a log2(M - 1) tail.
inline bound_result solve_classic(double entropy, std::size_t m) {
    return sf_solve({entropy, m, {1.0}});
}

// Treats the top N items as one block by shrinking the candidate set to
// M - N and reusing the single-head bound. Kept only to show that the
// result barely moves with N.
inline bound_result solve_naive_topn(double entropy, std::size_t m, std::size_t n) {
    if (n >= m)
        throw domain_error("solve_naive_topn: need M - N >= 1");
    if (m - n == 1) {
        if (!std::isfinite(entropy) || entropy < 0.0)
            throw domain_error("fano: entropy must be finite and non-negative");
        // One remaining candidate is always right.
        return {1.0, {1.0}, true, entropy};
    }
    return solve_classic(entropy, m - n);
}

// Top-1 bound for every prefix r = 1..c.size() of the same c vector.
inline std::vector<bound_result> solve_rank_ladder(double entropy, std::size_t m,
                                                   const std::vector<double>& c) {
    std::vector<bound_result> out;
    out.reserve(c.size());
    for (std::size_t r = 1; r <= c.size(); ++r)
        out.push_back(sf_solve({entropy, m, std::vector<double>(c.begin(), c.begin() + r)}));
    return out;
}

} // namespace topnpred
