#pragma once

// Event-log ingestion and per-user behaviour sequences.
//
// Records are interned while parsing: user and item ids map to dense integer
// codes in order of first appearance. The item dictionary is global, so the
// same item carries the same code in every user's sequence and population
// statistics can be compared across users.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "topnpred/errors.hpp"

namespace topnpred {

using symbol_t = std::uint32_t;

// Column selector: zero-based index or header name.
using column_ref = std::variant<std::size_t, std::string>;

struct format_config {
    char delimiter = ',';
    bool header = false;
    column_ref user = std::size_t{0};
    column_ref item = std::size_t{1};
    // Absent: records are ordered by their position in the input.
    std::optional<column_ref> time = column_ref{std::size_t{2}};
};

struct event_record {
    std::uint32_t user = 0;
    symbol_t item = 0;
    std::int64_t timestamp = 0;
};

struct event_log {
    std::vector<event_record> records;
    std::vector<std::string> user_names;  // indexed by event_record::user
    std::vector<std::string> item_names;  // indexed by item code
    std::size_t malformed = 0;
    std::size_t data_lines = 0;  // lines read, header excluded

    std::size_t user_count() const { return user_names.size(); }
    std::size_t item_count() const { return item_names.size(); }
};

struct symbol_sequence {
    std::vector<symbol_t> symbols;
    std::size_t vocab_size = 0;  // distinct symbols in this sequence

    std::size_t size() const { return symbols.size(); }
    std::span<const symbol_t> view() const { return symbols; }
};

struct sequence_set {
    std::map<std::string, symbol_sequence> by_user;  // ordered by user id
    std::size_t excluded_users = 0;
    std::size_t excluded_events = 0;
    std::size_t global_vocab_size = 0;
};

namespace detail {

inline std::string_view trim_field(std::string_view f) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t' || f.front() == '\r'))
        f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
        f.remove_suffix(1);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') {
        f.remove_prefix(1);
        f.remove_suffix(1);
    }
    return f;
}

inline void split_line(std::string_view line, char delim, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim_field(line.substr(start)));
            return;
        }
        out.push_back(trim_field(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline std::size_t resolve_column(const column_ref& ref,
                                  const std::vector<std::string>& header_names,
                                  bool has_header) {
    if (auto idx = std::get_if<std::size_t>(&ref)) {
        if (has_header && *idx >= header_names.size())
            throw config_error("column index " + std::to_string(*idx) +
                               " out of range for header with " +
                               std::to_string(header_names.size()) + " columns");
        return *idx;
    }
    const auto& name = std::get<std::string>(ref);
    if (!has_header)
        throw config_error("column '" + name + "' referenced by name but input has no header");
    auto it = std::find(header_names.begin(), header_names.end(), name);
    if (it == header_names.end())
        throw config_error("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header_names.begin());
}

inline std::optional<std::int64_t> parse_int64(std::string_view s) {
    std::int64_t v = 0;
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        return std::nullopt;
    return v;
}

class interner {
public:
    std::uint32_t intern(std::string_view key, std::vector<std::string>& names) {
        auto it = index_.find(std::string(key));
        if (it != index_.end())
            return it->second;
        auto code = static_cast<std::uint32_t>(names.size());
        names.emplace_back(key);
        index_.emplace(names.back(), code);
        return code;
    }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
};

} // namespace detail

// Parses a delimited interaction log. Lines that lack a mapped column, carry
// an empty user/item, or have a non-integer timestamp are counted as
// malformed and skipped.
inline event_log parse_events(std::istream& in, const format_config& cfg) {
    if (!in)
        throw io_error("input stream is not readable");

    event_log log;
    std::string line;
    std::vector<std::string_view> fields;
    std::vector<std::string> header_names;

    if (cfg.header) {
        if (!std::getline(in, line)) {
            if (in.bad())
                throw io_error("read failure on input stream");
            throw data_error("input is empty (no header line)");
        }
        detail::split_line(line, cfg.delimiter, fields);
        header_names.assign(fields.begin(), fields.end());
    }

    const auto user_col = detail::resolve_column(cfg.user, header_names, cfg.header);
    const auto item_col = detail::resolve_column(cfg.item, header_names, cfg.header);
    std::optional<std::size_t> time_col;
    if (cfg.time)
        time_col = detail::resolve_column(*cfg.time, header_names, cfg.header);
    std::size_t needed = std::max(user_col, item_col);
    if (time_col)
        needed = std::max(needed, *time_col);

    detail::interner users, items;
    while (std::getline(in, line)) {
        const auto position = static_cast<std::int64_t>(log.data_lines++);
        detail::split_line(line, cfg.delimiter, fields);
        if (fields.size() <= needed) {
            ++log.malformed;
            continue;
        }
        auto user = fields[user_col];
        auto item = fields[item_col];
        if (user.empty() || item.empty()) {
            ++log.malformed;
            continue;
        }
        std::int64_t ts = position;
        if (time_col) {
            auto parsed = detail::parse_int64(fields[*time_col]);
            if (!parsed) {
                ++log.malformed;
                continue;
            }
            ts = *parsed;
        }
        event_record rec;
        rec.user = users.intern(user, log.user_names);
        rec.item = items.intern(item, log.item_names);
        rec.timestamp = ts;
        log.records.push_back(rec);
    }
    if (in.bad())
        throw io_error("read failure on input stream");
    if (log.records.empty())
        throw data_error("no valid records in input (" + std::to_string(log.malformed) +
                         " malformed lines)");
    return log;
}

inline event_log parse_events_file(const std::string& path, const format_config& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open '" + path + "'");
    return parse_events(in, cfg);
}

// Groups records by user, orders each group by timestamp (stable w.r.t.
// input order) and drops users with fewer than `min_length` events.
inline sequence_set build_sequences(const event_log& log, std::size_t min_length = 50) {
    if (min_length < 1)
        throw domain_error("min_length must be at least 1");

    sequence_set out;
    out.global_vocab_size = log.item_count();
    if (log.records.empty())
        return out;

    // Bucket record indices per user, preserving input order.
    const auto n_users = log.user_count();
    std::vector<std::size_t> offsets(n_users + 1, 0);
    for (const auto& r : log.records)
        ++offsets[r.user + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<std::size_t> order(log.records.size());
    {
        auto cursor = offsets;
        for (std::size_t i = 0; i < log.records.size(); ++i)
            order[cursor[log.records[i].user]++] = i;
    }

    std::vector<char> seen(log.item_count(), 0);
    for (std::size_t u = 0; u < n_users; ++u) {
        auto first = order.begin() + static_cast<std::ptrdiff_t>(offsets[u]);
        auto last = order.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]);
        const auto count = static_cast<std::size_t>(last - first);
        if (count < min_length) {
            ++out.excluded_users;
            out.excluded_events += count;
            continue;
        }
        std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
            return log.records[a].timestamp < log.records[b].timestamp;
        });
        symbol_sequence seq;
        seq.symbols.reserve(count);
        for (auto it = first; it != last; ++it) {
            auto code = log.records[*it].item;
            seq.symbols.push_back(code);
            if (!seen[code]) {
                seen[code] = 1;
                ++seq.vocab_size;
            }
        }
        for (auto code : seq.symbols)
            seen[code] = 0;
        out.by_user.emplace(log.user_names[u], std::move(seq));
    }
    return out;
}

// Maps codes back to item ids through the log's dictionary.
inline std::vector<std::string> decode(const symbol_sequence& seq, const event_log& log) {
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (auto code : seq.symbols)
        out.push_back(log.item_names.at(code));
    return out;
}

// Number of distinct symbols in an arbitrary code sequence.
inline std::size_t distinct_count(std::span<const symbol_t> symbols) {
    std::vector<symbol_t> sorted(symbols.begin(), symbols.end());
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

inline symbol_sequence make_sequence(std::vector<symbol_t> symbols) {
    symbol_sequence seq;
    seq.vocab_size = distinct_count(symbols);
    seq.symbols = std::move(symbols);
    return seq;
}

} // namespace topnpred
