#pragma once

// Bias calibration of the Top-N bound.
//
// Sequences with known predictability are generated over a (p, xi) grid and
// pushed through the same estimate pipeline used on real data: LZ entropy,
// c_i = i^-xi, sf_solve at each rank r. The relative deviation
// (median bound - truth) / truth per (p, xi, r) is stored in a table that is
// later queried to shrink a real-data bound toward the truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "topnpred/entropy.hpp"
#include "topnpred/errors.hpp"
#include "topnpred/fano.hpp"
#include "topnpred/parallel.hpp"
#include "topnpred/popularity.hpp"
#include "topnpred/rng.hpp"
#include "topnpred/synth.hpp"

namespace topnpred {

inline constexpr int calibration_format_version = 1;

struct calibration_grid {
    std::vector<double> p;
    std::vector<double> xi;
    std::size_t max_rank = 10;

    // p in {0.01, ..., 0.62}, xi in {0.53, ..., 0.67}, r in {1, ..., 10}.
    static calibration_grid standard() {
        calibration_grid g;
        for (int k = 1; k <= 62; ++k)
            g.p.push_back(k / 100.0);
        for (int k = 53; k <= 67; ++k)
            g.xi.push_back(k / 100.0);
        return g;
    }
};

// Evenly spaced values first, first + step, ..., up to last (inclusive),
// computed from an integer count so the endpoints do not drift.
inline std::vector<double> grid_range(double first, double last, double step) {
    if (!(step > 0.0) || last < first)
        throw config_error("grid range: need step > 0 and last >= first");
    const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k)
        out[k] = std::round((first + static_cast<double>(k) * step) * 1e12) / 1e12;
    return out;
}

struct calibration_cell {
    double p = 0.0;
    double xi = 0.0;
    std::size_t r = 1;
    double deviation = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_seeds = 0;  // 0 marks an infeasible cell
    std::size_t seq_length = 0;

    bool feasible() const { return n_seeds > 0; }
};

struct calibration_metadata {
    int format_version = calibration_format_version;
    generator_method method = generator_method::second_order;
    std::size_t m = 1000;
    std::size_t length = std::size_t{1} << 15;
    std::size_t seeds = 20;
    std::uint64_t seed_base = 1;
    std::string rng{rng64::algorithm};
    entropy_unit unit = entropy_unit::bits;
};

struct build_options {
    generator_method method = generator_method::second_order;
    std::size_t m = 1000;
    std::size_t length = std::size_t{1} << 15;
    std::size_t seeds = 20;
    std::uint64_t seed_base = 1;
    entropy_unit unit = entropy_unit::bits;
    std::size_t threads = default_threads();
};

class calibration_table {
public:
    calibration_metadata meta;
    std::vector<calibration_cell> cells;  // sorted by (p, xi, r)

    std::vector<double> p_values() const { return distinct(&calibration_cell::p); }
    std::vector<double> xi_values() const { return distinct(&calibration_cell::xi); }

    std::size_t max_rank() const {
        std::size_t r = 0;
        for (const auto& c : cells)
            r = std::max(r, c.r);
        return r;
    }

    const calibration_cell* find(double p, double xi, std::size_t r) const {
        for (const auto& c : cells)
            if (c.p == p && c.xi == xi && c.r == r)
                return &c;
        return nullptr;
    }

    // Top-1 ground truth of this table's generator at (p, xi).
    double truth(double p, double xi) const {
        return true_predictability(make_spec(meta.method, meta.m, p, xi, 16, 1), 1).top_pi[0];
    }

    void sort_cells() {
        std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
            return std::tie(a.p, a.xi, a.r) < std::tie(b.p, b.xi, b.r);
        });
    }

private:
    std::vector<double> distinct(double calibration_cell::*field) const {
        std::vector<double> v;
        for (const auto& c : cells)
            v.push_back(c.*field);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string exact(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// Median Top-1 bound at ranks 1..max_rank over sequences generated from
// `base` with seeds seed_base, seed_base + 1, .... The solver uses
// c_i = i^-xi. Entry k is NaN when no sequence had more than k + 1 distinct
// states; `used[k]` counts the sequences that contributed to rank k + 1.
struct rank_medians {
    std::vector<double> pi1;
    std::vector<std::size_t> used;
};

inline rank_medians median_bounds(generator_spec base, double xi, std::size_t max_rank,
                                  std::size_t seeds, std::uint64_t seed_base,
                                  entropy_unit unit) {
    const auto c = zipf_c_ratios(xi, max_rank);
    std::vector<std::vector<double>> per_rank(max_rank);
    for (std::size_t k = 0; k < seeds; ++k) {
        base.seed = seed_base + k;
        const auto seq = generate(base);
        const double s = lz_entropy_rate(seq.view(), unit);
        if (seq.vocab_size < 2)
            continue;
        const auto ranks = std::min(max_rank, seq.vocab_size - 1);
        const auto ladder =
            solve_rank_ladder(s, seq.vocab_size, std::vector<double>(c.begin(), c.begin() + ranks));
        for (std::size_t r = 0; r < ranks; ++r)
            per_rank[r].push_back(ladder[r].pi1);
    }
    rank_medians out;
    for (auto& v : per_rank) {
        out.used.push_back(v.size());
        out.pi1.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : detail::median_of(std::move(v)));
    }
    return out;
}

inline calibration_table build_table(const calibration_grid& grid, const build_options& opt = {}) {
    if (grid.p.empty() || grid.xi.empty() || grid.max_rank < 1)
        throw config_error("build_table: empty grid");
    if (opt.seeds < 1)
        throw config_error("build_table: need at least one seed");
    if (opt.length < 2)
        throw config_error("build_table: sequence length must be at least 2");
    if (opt.m <= coupled_ranks)
        throw config_error("build_table: M must exceed 5");

    calibration_table table;
    table.meta.method = opt.method;
    table.meta.m = opt.m;
    table.meta.length = opt.length;
    table.meta.seeds = opt.seeds;
    table.meta.seed_base = opt.seed_base;
    table.meta.unit = opt.unit;

    const auto n_xi = grid.xi.size();
    std::vector<std::vector<calibration_cell>> blocks(grid.p.size() * n_xi);
    parallel_for(
        blocks.size(),
        [&](std::size_t idx) {
            const double p = grid.p[idx / n_xi];
            const double xi = grid.xi[idx % n_xi];
            auto spec = make_spec(opt.method, opt.m, p, xi, opt.length, opt.seed_base);
            auto& out = blocks[idx];
            for (std::size_t r = 1; r <= grid.max_rank; ++r)
                out.push_back({p, xi, r, std::numeric_limits<double>::quiet_NaN(), 0, opt.length});
            if (!(spec.head_mass() < 1.0))
                return;  // infeasible generator setting
            const double truth = true_predictability(spec, 1).top_pi[0];
            const auto med = median_bounds(spec, xi, grid.max_rank, opt.seeds, opt.seed_base,
                                           opt.unit);
            for (std::size_t r = 0; r < grid.max_rank; ++r) {
                if (med.used[r] == 0)
                    continue;
                out[r].deviation = (med.pi1[r] - truth) / truth;
                out[r].n_seeds = med.used[r];
            }
        },
        opt.threads);
    for (auto& b : blocks)
        table.cells.insert(table.cells.end(), b.begin(), b.end());
    table.sort_cells();
    return table;
}

// Cells breaking the expected table shape: deviation increasing with r, or
// falling materially below zero.
struct table_check {
    std::vector<calibration_cell> not_monotone;  // the larger-r cell of each pair
    std::vector<calibration_cell> too_negative;

    bool ok() const { return not_monotone.empty() && too_negative.empty(); }
};

inline table_check check_table(const calibration_table& t, double floor = -0.05,
                               double tolerance = 1e-12) {
    table_check out;
    const calibration_cell* prev = nullptr;
    for (const auto& c : t.cells) {
        if (!c.feasible()) {
            prev = nullptr;
            continue;
        }
        if (c.deviation < floor)
            out.too_negative.push_back(c);
        if (prev && prev->p == c.p && prev->xi == c.xi && c.r == prev->r + 1 &&
            c.deviation > prev->deviation + tolerance)
            out.not_monotone.push_back(c);
        prev = &c;
    }
    return out;
}

inline void write_table(std::ostream& os, const calibration_table& t) {
    os << "# topnpred calibration table\n"
       << "# format_version\t" << t.meta.format_version << '\n'
       << "# method\t" << to_string(t.meta.method) << '\n'
       << "# m\t" << t.meta.m << '\n'
       << "# length\t" << t.meta.length << '\n'
       << "# seeds\t" << t.meta.seeds << '\n'
       << "# seed_base\t" << t.meta.seed_base << '\n'
       << "# rng\t" << t.meta.rng << '\n'
       << "# unit\t" << to_string(t.meta.unit) << '\n'
       << "# columns\tp\txi\tr\tdeviation\tn_seeds\n";
    for (const auto& c : t.cells)
        os << detail::exact(c.p) << '\t' << detail::exact(c.xi) << '\t' << c.r << '\t'
           << detail::exact(c.deviation) << '\t' << c.n_seeds << '\n';
}

inline std::string table_text(const calibration_table& t) {
    std::ostringstream os;
    write_table(os, t);
    return os.str();
}

// Content hash of the serialized table.
inline std::string table_id(const calibration_table& t) {
    return detail::hex64(detail::fnv1a(table_text(t)));
}

namespace detail {

inline double parse_real(const std::string& s, std::size_t line) {
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty())
        throw format_error("calibration table line " + std::to_string(line) + ": bad number '" +
                           s + "'");
    return v;
}

inline std::uint64_t parse_count(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw format_error("calibration table line " + std::to_string(line) + ": bad integer '" +
                           s + "'");
    return v;
}

} // namespace detail

inline calibration_table read_table(std::istream& in) {
    calibration_table t;
    std::map<std::string, std::string> meta;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        fields.clear();
        std::string_view rest = line;
        const bool header = rest.front() == '#';
        if (header)
            rest.remove_prefix(rest.size() > 1 && rest[1] == ' ' ? 2 : 1);
        std::size_t pos;
        while ((pos = rest.find('\t')) != std::string_view::npos) {
            fields.emplace_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        fields.emplace_back(rest);
        if (header) {
            if (fields.size() >= 2)
                meta[fields[0]] = fields[1];
            continue;
        }
        if (fields.size() != 5)
            throw format_error("calibration table line " + std::to_string(lineno) +
                               ": expected 5 fields");
        calibration_cell c;
        c.p = detail::parse_real(fields[0], lineno);
        c.xi = detail::parse_real(fields[1], lineno);
        c.r = detail::parse_count(fields[2], lineno);
        c.deviation = detail::parse_real(fields[3], lineno);
        c.n_seeds = detail::parse_count(fields[4], lineno);
        if (c.r < 1 || (c.feasible() && !(c.deviation > -1.0)))
            throw format_error("calibration table line " + std::to_string(lineno) +
                               ": cell out of range");
        t.cells.push_back(c);
    }
    if (in.bad())
        throw io_error("calibration table: read failed");
    if (t.cells.empty())
        throw format_error("calibration table: no cells");

    auto require = [&](const char* key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end())
            throw format_error(std::string("calibration table: missing header '") + key + "'");
        return it->second;
    };
    try {
        t.meta.format_version = static_cast<int>(detail::parse_count(require("format_version"), 0));
        if (t.meta.format_version != calibration_format_version)
            throw format_error("calibration table: unsupported format version");
        t.meta.method = parse_generator_method(require("method"));
        t.meta.m = detail::parse_count(require("m"), 0);
        t.meta.length = detail::parse_count(require("length"), 0);
        t.meta.seeds = detail::parse_count(require("seeds"), 0);
        if (meta.count("seed_base"))
            t.meta.seed_base = detail::parse_count(meta["seed_base"], 0);
        if (meta.count("rng"))
            t.meta.rng = meta["rng"];
        if (meta.count("unit"))
            t.meta.unit = parse_entropy_unit(meta["unit"]);
    } catch (const config_error& e) {
        throw format_error(std::string("calibration table: ") + e.what());
    }
    if (t.meta.m <= coupled_ranks)
        throw format_error("calibration table: M must exceed 5");
    for (auto& c : t.cells)
        c.seq_length = t.meta.length;
    t.sort_cells();
    return t;
}

inline void save_table(const std::string& path, const calibration_table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    write_table(out, t);
    if (!out)
        throw io_error("write to '" + path + "' failed");
}

inline calibration_table load_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open calibration table '" + path + "'");
    return read_table(in);
}

struct lookup_result {
    double deviation = 0.0;
    double p = 0.0;   // cell used
    double xi = 0.0;  // cell used
    std::size_t r = 0;
    bool xi_clamped = false;  // requested xi outside the table
    bool p_clamped = false;   // estimate beyond every cell's expected bound
};

// Finds the cell whose generator would most plausibly have produced
// `estimate`: among feasible p at the nearest xi and the given r, the one
// whose expected bound truth(p) * (1 + deviation) lies closest to it.
inline lookup_result lookup(const calibration_table& t, double estimate, double xi,
                            std::size_t r) {
    if (t.cells.empty())
        throw format_error("lookup: empty calibration table");
    if (!std::isfinite(estimate) || !std::isfinite(xi))
        throw domain_error("lookup: estimate and xi must be finite");
    const auto xis = t.xi_values();
    lookup_result res;
    res.r = r;
    res.xi = *std::min_element(xis.begin(), xis.end(), [&](double a, double b) {
        return std::abs(a - xi) < std::abs(b - xi);
    });
    res.xi_clamped = xi < xis.front() - 1e-9 || xi > xis.back() + 1e-9;

    double best = INFINITY, lo = INFINITY, hi = -INFINITY;
    bool any = false;
    for (const auto& c : t.cells) {
        if (c.xi != res.xi || c.r != r || !c.feasible())
            continue;
        any = true;
        const double expected = t.truth(c.p, c.xi) * (1.0 + c.deviation);
        lo = std::min(lo, expected);
        hi = std::max(hi, expected);
        const double gap = std::abs(expected - estimate);
        if (gap < best) {
            best = gap;
            res.p = c.p;
            res.deviation = c.deviation;
        }
    }
    if (!any)
        throw domain_error("lookup: no feasible cell for r = " + std::to_string(r));
    res.p_clamped = estimate < lo || estimate > hi;
    return res;
}

struct corrected_bound {
    bound_result original;
    bound_result corrected;
    lookup_result lookup;
};

// Divides pi1 by (1 + deviation) and rebuilds Top-1..Top-r from c.
inline bound_result apply_deviation(const bound_result& b, const std::vector<double>& c,
                                    double deviation) {
    if (!(deviation > -1.0))
        throw domain_error("apply_deviation: deviation must exceed -1");
    bound_result out = b;
    out.pi1 = std::min(1.0, b.pi1 / (1.0 + deviation));
    out.topn = cumulative_topn(out.pi1, c);
    return out;
}

inline corrected_bound correct(const bound_result& b, const std::vector<double>& c,
                               const calibration_table& t, double xi) {
    if (c.empty())
        throw domain_error("correct: empty c vector");
    corrected_bound out;
    out.original = b;
    out.lookup = lookup(t, b.pi1, xi, c.size());
    out.corrected = apply_deviation(b, c, out.lookup.deviation);
    return out;
}

} // namespace topnpred
