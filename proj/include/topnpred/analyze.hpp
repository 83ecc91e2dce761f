#pragma once

// End-to-end predictability analysis of an interaction log.
//
// log -> per-user sequences -> per-user LZ entropy and candidate-set size
// -> population c-ratios and Zipf exponent -> per-user Top-1 bound at rank r
// -> mean over users -> optional calibration correction.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "topnpred/calibration.hpp"
#include "topnpred/entropy.hpp"
#include "topnpred/errors.hpp"
#include "topnpred/events.hpp"
#include "topnpred/fano.hpp"
#include "topnpred/parallel.hpp"
#include "topnpred/popularity.hpp"

namespace topnpred {

struct analyze_config {
    format_config format;
    std::size_t min_length = 50;
    std::size_t rank = 10;
    std::size_t max_fit_rank = 1000;
    std::optional<double> xi_override;  // also replaces c with i^-xi
    bool global_m = false;              // M = distinct items in the whole log
    bool event_weighted = false;        // weight users by sequence length
    entropy_unit unit = entropy_unit::bits;
    std::size_t threads = default_threads();
};

struct user_row {
    std::string user;
    std::size_t n = 0;
    std::size_t m = 0;
    double entropy = 0.0;
    double pi1 = 0.0;
    bool clamped = false;
};

struct predictability_report {
    std::vector<user_row> users;  // sorted by user id
    std::size_t skipped = 0;      // users whose solve failed
    std::size_t excluded_short = 0;
    std::size_t malformed = 0;
    std::size_t records = 0;

    std::size_t rank = 0;
    double xi = std::numeric_limits<double>::quiet_NaN();      // lookup key
    double xi_fit = std::numeric_limits<double>::quiet_NaN();  // fitted on the log
    std::vector<double> c;
    entropy_unit unit = entropy_unit::bits;

    std::vector<double> bound;  // mean Top-1..Top-r
    std::optional<std::vector<double>> corrected;
    std::optional<lookup_result> lookup;

    std::string config_hash;
    std::string table_id;
    std::vector<std::string> warnings;
};

inline std::string config_hash(const analyze_config& cfg) {
    auto col = [](const column_ref& c) {
        return std::holds_alternative<std::size_t>(c) ? "#" + std::to_string(std::get<0>(c))
                                                       : "@" + std::get<1>(c);
    };
    std::ostringstream os;
    os << "delimiter=" << static_cast<int>(cfg.format.delimiter)
       << ";header=" << cfg.format.header << ";user=" << col(cfg.format.user)
       << ";item=" << col(cfg.format.item)
       << ";time=" << (cfg.format.time ? col(*cfg.format.time) : std::string("-"))
       << ";min_length=" << cfg.min_length << ";rank=" << cfg.rank
       << ";max_fit_rank=" << cfg.max_fit_rank << ";xi_override="
       << (cfg.xi_override ? detail::exact(*cfg.xi_override) : std::string("-"))
       << ";global_m=" << cfg.global_m << ";event_weighted=" << cfg.event_weighted
       << ";unit=" << to_string(cfg.unit);
    return detail::hex64(detail::fnv1a(os.str()));
}

namespace detail {

// Top-1 bound of one sequence. Users with a single distinct item are fully
// predictable; users with few items are solved at the largest rank they allow.
inline bound_result solve_user(double entropy, std::size_t m, const std::vector<double>& c) {
    if (m <= 1)
        return {1.0, cumulative_topn(1.0, c), true, 0.0};
    const auto r = std::min(c.size(), m - 1);
    auto res = sf_solve({entropy, m, std::vector<double>(c.begin(), c.begin() + r)});
    res.topn = cumulative_topn(res.pi1, c);
    return res;
}

} // namespace detail

inline predictability_report analyze(const event_log& log, const analyze_config& cfg,
                                     const calibration_table* table = nullptr) {
    if (cfg.rank < 1)
        throw config_error("rank must be at least 1");
    if (table && table->meta.unit != cfg.unit)
        throw config_error("calibration table was built with entropy in " +
                           std::string(to_string(table->meta.unit)) + ", analysis uses " +
                           std::string(to_string(cfg.unit)));

    predictability_report rep;
    rep.rank = cfg.rank;
    rep.unit = cfg.unit;
    rep.config_hash = config_hash(cfg);
    rep.malformed = log.malformed;
    rep.records = log.records.size();

    const auto profile = rank_frequencies(log);
    try {
        const auto fit = fit_zipf(profile, cfg.max_fit_rank);
        rep.xi_fit = fit.xi;
        if (fit.negative)
            rep.warnings.push_back("fitted Zipf exponent is negative");
    } catch (const domain_error& e) {
        rep.warnings.push_back(std::string("Zipf fit skipped: ") + e.what());
    }
    if (cfg.xi_override) {
        rep.xi = *cfg.xi_override;
        rep.c = zipf_c_ratios(rep.xi, cfg.rank);
    } else {
        rep.xi = rep.xi_fit;
        const auto ranks = std::min(cfg.rank, profile.freqs.size());
        if (ranks < cfg.rank)
            rep.warnings.push_back("only " + std::to_string(ranks) +
                                   " distinct items; rank reduced");
        rep.c = c_ratios(profile, ranks);
    }
    rep.rank = rep.c.size();

    const auto seqs = build_sequences(log, cfg.min_length);
    rep.excluded_short = seqs.excluded_users;
    std::vector<const std::pair<const std::string, symbol_sequence>*> items;
    for (const auto& kv : seqs.by_user)
        items.push_back(&kv);

    struct slot {
        std::optional<user_row> row;
        std::vector<double> topn;
    };
    std::vector<slot> slots(items.size());
    parallel_for(
        items.size(),
        [&](std::size_t i) {
            const auto& [user, seq] = *items[i];
            try {
                user_row row;
                row.user = user;
                row.n = seq.size();
                row.m = cfg.global_m ? log.item_count() : seq.vocab_size;
                row.entropy = lz_entropy_rate(seq.view(), cfg.unit);
                const auto b = detail::solve_user(row.entropy, row.m, rep.c);
                row.pi1 = b.pi1;
                row.clamped = b.clamped;
                slots[i].row = std::move(row);
                slots[i].topn = b.topn;
            } catch (const error&) {
                // Isolated per user; counted below.
            }
        },
        cfg.threads);

    std::vector<double> sum(rep.rank, 0.0);
    double weight = 0.0;
    for (auto& s : slots) {
        if (!s.row) {
            ++rep.skipped;
            continue;
        }
        const double w = cfg.event_weighted ? static_cast<double>(s.row->n) : 1.0;
        for (std::size_t k = 0; k < rep.rank; ++k)
            sum[k] += w * s.topn[k];
        weight += w;
        rep.users.push_back(std::move(*s.row));
    }
    if (rep.users.empty())
        throw data_error("no user could be analyzed (" + std::to_string(rep.excluded_short) +
                         " shorter than min_length, " + std::to_string(rep.skipped) + " failed)");
    for (auto& v : sum)
        rep.bound.push_back(v / weight);

    if (table) {
        if (!std::isfinite(rep.xi))
            throw config_error("calibration needs a Zipf exponent; pass xi_override");
        rep.table_id = table_id(*table);
        bound_result agg{rep.bound.front(), cumulative_topn(rep.bound.front(), rep.c), false, 0.0};
        const auto fixed = correct(agg, rep.c, *table, rep.xi);
        rep.corrected = fixed.corrected.topn;
        rep.lookup = fixed.lookup;
        if (fixed.lookup.xi_clamped)
            rep.warnings.push_back("xi outside the calibration table; nearest row used");
        if (fixed.lookup.p_clamped)
            rep.warnings.push_back("bound outside the calibration table; boundary cell used");
    }
    return rep;
}

inline predictability_report analyze_file(const std::string& path, const analyze_config& cfg,
                                          const calibration_table* table = nullptr) {
    return analyze(parse_events_file(path, cfg.format), cfg, table);
}

namespace detail {

inline std::string sig6(double v) {
    if (std::isnan(v))
        return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

// Tab-separated report: '#' metadata, a per-user block, then the aggregate.
inline void write_report_tsv(std::ostream& os, const predictability_report& rep) {
    using detail::sig6;
    os << "# topnpred predictability report\n"
       << "# config_hash\t" << rep.config_hash << '\n'
       << "# table_id\t" << (rep.table_id.empty() ? "-" : rep.table_id) << '\n'
       << "# unit\t" << to_string(rep.unit) << '\n'
       << "# xi\t" << sig6(rep.xi) << '\n'
       << "# xi_fit\t" << sig6(rep.xi_fit) << '\n'
       << "# r\t" << rep.rank << '\n'
       << "# records\t" << rep.records << '\n'
       << "# malformed\t" << rep.malformed << '\n'
       << "# users\t" << rep.users.size() << '\n'
       << "# skipped\t" << rep.skipped << '\n'
       << "# excluded_short\t" << rep.excluded_short << '\n';
    if (rep.lookup)
        os << "# deviation\t" << sig6(rep.lookup->deviation) << '\n'
           << "# lookup_cell\t" << sig6(rep.lookup->p) << '\t' << sig6(rep.lookup->xi) << '\t'
           << rep.lookup->r << '\n';
    for (const auto& w : rep.warnings)
        os << "# warning\t" << w << '\n';
    os << "user\tn\tM\tS\tpi1\tclamped\n";
    for (const auto& u : rep.users)
        os << u.user << '\t' << u.n << '\t' << u.m << '\t' << sig6(u.entropy) << '\t'
           << sig6(u.pi1) << '\t' << (u.clamped ? 1 : 0) << '\n';
    os << "\nrank\tbound\tcorrected\n";
    for (std::size_t k = 0; k < rep.bound.size(); ++k)
        os << "Top-" << k + 1 << '\t' << sig6(rep.bound[k]) << '\t'
           << (rep.corrected ? sig6((*rep.corrected)[k]) : std::string("-")) << '\n';
}

} // namespace topnpred
