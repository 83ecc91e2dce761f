#pragma once

// JSON rendering of a predictability report. Numbers are rounded to six
// significant digits like the tab-separated form.

#include <cmath>
#include <string>

#include "json.hpp"
#include "topnpred/analyze.hpp"

namespace topnpred {

namespace detail {

inline nlohmann::json num6(double v) {
    if (!std::isfinite(v))
        return nullptr;
    return std::stod(sig6(v));
}

} // namespace detail

inline nlohmann::json report_json(const predictability_report& rep) {
    using detail::num6;
    nlohmann::json j;
    auto& meta = j["metadata"];
    meta["config_hash"] = rep.config_hash;
    meta["table_id"] = rep.table_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(rep.table_id);
    meta["unit"] = std::string(to_string(rep.unit));
    meta["xi"] = num6(rep.xi);
    meta["xi_fit"] = num6(rep.xi_fit);
    meta["r"] = rep.rank;
    meta["records"] = rep.records;
    meta["malformed"] = rep.malformed;
    meta["users"] = rep.users.size();
    meta["skipped"] = rep.skipped;
    meta["excluded_short"] = rep.excluded_short;
    meta["warnings"] = rep.warnings;
    if (rep.lookup)
        meta["lookup"] = {{"deviation", num6(rep.lookup->deviation)},
                          {"p", num6(rep.lookup->p)},
                          {"xi", num6(rep.lookup->xi)},
                          {"r", rep.lookup->r},
                          {"xi_clamped", rep.lookup->xi_clamped},
                          {"p_clamped", rep.lookup->p_clamped}};

    auto& users = j["users"] = nlohmann::json::array();
    for (const auto& u : rep.users)
        users.push_back({{"user", u.user},
                         {"n", u.n},
                         {"M", u.m},
                         {"S", num6(u.entropy)},
                         {"pi1", num6(u.pi1)},
                         {"clamped", u.clamped}});

    auto& agg = j["aggregate"] = nlohmann::json::array();
    for (std::size_t k = 0; k < rep.bound.size(); ++k)
        agg.push_back({{"rank", k + 1},
                       {"bound", num6(rep.bound[k])},
                       {"corrected", rep.corrected ? num6((*rep.corrected)[k])
                                                   : nlohmann::json(nullptr)}});
    return j;
}

} // namespace topnpred
