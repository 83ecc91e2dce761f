// topnpred command-line front end.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "topnpred/analyze.hpp"
#include "topnpred/calibration.hpp"
#include "topnpred/entropy.hpp"
#include "topnpred/events.hpp"
#include "topnpred/fano.hpp"
#include "topnpred/popularity.hpp"
#include "topnpred/report_json.hpp"
#include "topnpred/synth.hpp"

using namespace topnpred;

namespace {

enum exit_code { ok = 0, config_failure = 1, data_failure = 2, internal_failure = 3 };

struct input_options {
    std::string path;
    std::string format = "csv";
    std::string delimiter;
    std::string columns = "0,1,2";
    bool header = false;
    std::size_t min_length = 50;
};

void add_input_options(CLI::App* cmd, input_options& in, bool with_min_length) {
    cmd->add_option("--input,-i", in.path, "Interaction log (delimited text)")->required();
    cmd->add_option("--format", in.format, "csv or tsv")->capture_default_str();
    cmd->add_option("--delimiter", in.delimiter, "Single-character field separator");
    cmd->add_option("--columns", in.columns,
                    "user,item[,time] as zero-based indices or header names; "
                    "omit time to use file order")
        ->capture_default_str();
    cmd->add_flag("--header", in.header, "First line holds column names");
    if (with_min_length)
        cmd->add_option("--min-length", in.min_length, "Minimum events per user")
            ->capture_default_str();
}

column_ref to_column(const std::string& tok) {
    if (!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoull(tok));
    return tok;
}

format_config to_format(const input_options& in) {
    format_config f;
    if (in.format == "csv")
        f.delimiter = ',';
    else if (in.format == "tsv")
        f.delimiter = '\t';
    else
        throw config_error("unknown --format '" + in.format + "' (expected csv or tsv)");
    if (!in.delimiter.empty()) {
        if (in.delimiter == "\\t")
            f.delimiter = '\t';
        else if (in.delimiter.size() == 1)
            f.delimiter = in.delimiter[0];
        else
            throw config_error("--delimiter must be a single character");
    }
    f.header = in.header;
    std::vector<std::string> toks;
    std::stringstream ss(in.columns);
    for (std::string tok; std::getline(ss, tok, ',');)
        toks.push_back(tok);
    if (toks.size() < 2 || toks.size() > 3)
        throw config_error("--columns needs user,item or user,item,time");
    f.user = to_column(toks[0]);
    f.item = to_column(toks[1]);
    if (toks.size() == 3)
        f.time = to_column(toks[2]);
    else
        f.time.reset();
    return f;
}

// Writes to --out when given, stdout otherwise.
class output {
public:
    explicit output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_)
                throw io_error("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void finish() {
        stream().flush();
        if (!stream())
            throw io_error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string sig6(double v) { return detail::sig6(v); }

void print_bound(std::ostream& os, const bound_result& b) {
    os << "pi1\t" << sig6(b.pi1) << "\nclamped\t" << (b.clamped ? 1 : 0) << "\nresidual\t"
       << sig6(b.residual) << '\n';
    for (std::size_t k = 0; k < b.topn.size(); ++k)
        os << "Top-" << k + 1 << '\t' << sig6(b.topn[k]) << '\n';
}

std::vector<double> c_vector(const std::vector<double>& explicit_c, std::optional<double> xi,
                             std::size_t r) {
    if (!explicit_c.empty()) {
        if (explicit_c.size() != r)
            throw config_error("--c must list exactly r values");
        return explicit_c;
    }
    return zipf_c_ratios(xi.value_or(0.6), r);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Top-N predictability bounds from behavior sequences"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Key-value config file (TOML/INI)");
    std::string out_path;
    app.add_option("--out,-o", out_path, "Output file (default stdout)");

    // entropy
    input_options ent_in;
    std::string ent_unit = "bits";
    auto* ent = app.add_subcommand("entropy", "Per-user LZ entropy rate");
    add_input_options(ent, ent_in, true);
    ent->add_option("--unit", ent_unit, "bits or nats")->capture_default_str();

    // popularity
    input_options pop_in;
    std::size_t pop_fit_rank = 1000;
    auto* pop = app.add_subcommand("popularity", "Rank-frequency table, Zipf exponent, c-ratios");
    add_input_options(pop, pop_in, false);
    pop->add_option("--max-rank", pop_fit_rank, "Ranks used by the Zipf fit")
        ->capture_default_str();

    // solve
    double sol_s = 0.0;
    std::size_t sol_m = 0, sol_r = 10;
    std::vector<double> sol_c;
    std::optional<double> sol_xi;
    std::optional<std::size_t> sol_naive;
    auto* sol = app.add_subcommand("solve", "Top-1..Top-r bound for one (S, M, c)");
    sol->add_option("--entropy,-S", sol_s, "Entropy rate in bits")->required();
    sol->add_option("--m,-M", sol_m, "Candidate-set size")->required();
    sol->add_option("--rank,-r", sol_r, "Number of coupled ranks")->capture_default_str();
    sol->add_option("--c", sol_c, "Explicit c_1..c_r")->delimiter(',');
    sol->add_option("--xi", sol_xi, "Zipf exponent for c_i = i^-xi (default 0.6)");
    sol->add_option("--naive", sol_naive, "Solve the M -> M-N single-head variant instead");

    // generate
    std::string gen_method = "second_order", gen_rself = "uniform_member";
    std::size_t gen_m = 1000, gen_len = std::size_t{1} << 15, gen_users = 1;
    double gen_p = 0.2, gen_xi = 0.6;
    std::uint64_t gen_seed = 1;
    auto* gen = app.add_subcommand("generate", "Synthetic sequence with known predictability");
    gen->add_option("--method", gen_method, "first_order or second_order")->capture_default_str();
    gen->add_option("--m,-M", gen_m, "State count")->capture_default_str();
    gen->add_option("--p", gen_p, "Base transition probability")->capture_default_str();
    gen->add_option("--xi", gen_xi, "c_i = i^-xi for the five coupled ranks")
        ->capture_default_str();
    gen->add_option("--length,-L", gen_len, "Symbols per sequence")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed of the first sequence")->capture_default_str();
    gen->add_option("--users", gen_users, "Sequences; above 1 an events CSV is written")
        ->capture_default_str();
    gen->add_option("--r-self", gen_rself, "first_order R->R move: uniform_member or same_state")
        ->capture_default_str();

    // calibrate
    build_options cal_opt;
    std::string cal_method = "second_order", cal_unit = "bits";
    double p_min = 0.01, p_max = 0.62, p_step = 0.01;
    double xi_min = 0.53, xi_max = 0.67, xi_step = 0.01;
    std::size_t cal_rank = 10;
    bool cal_strict = false;
    auto* cal = app.add_subcommand("calibrate", "Build a bias calibration table");
    cal->add_option("--method", cal_method, "Ground-truth generator")->capture_default_str();
    cal->add_option("--m,-M", cal_opt.m, "Generator state count")->capture_default_str();
    cal->add_option("--length,-L", cal_opt.length, "Sequence length")->capture_default_str();
    cal->add_option("--seeds", cal_opt.seeds, "Sequences per cell")->capture_default_str();
    cal->add_option("--seed", cal_opt.seed_base, "First seed")->capture_default_str();
    cal->add_option("--p-min", p_min)->capture_default_str();
    cal->add_option("--p-max", p_max)->capture_default_str();
    cal->add_option("--p-step", p_step)->capture_default_str();
    cal->add_option("--xi-min", xi_min)->capture_default_str();
    cal->add_option("--xi-max", xi_max)->capture_default_str();
    cal->add_option("--xi-step", xi_step)->capture_default_str();
    cal->add_option("--rank,-r", cal_rank, "Largest rank")->capture_default_str();
    cal->add_option("--unit", cal_unit, "Entropy unit fed to the solver")->capture_default_str();
    cal->add_option("--threads", cal_opt.threads, "Worker threads");
    cal->add_flag("--strict", cal_strict, "Fail when the table breaks monotonicity or the -0.05 floor");

    // correct
    std::string cor_table;
    double cor_pi1 = 0.0, cor_xi = 0.6;
    std::size_t cor_r = 10;
    std::vector<double> cor_c;
    auto* cor = app.add_subcommand("correct", "Correct a bound with a calibration table");
    cor->add_option("--table", cor_table, "Calibration table")->required();
    cor->add_option("--pi1", cor_pi1, "Top-1 bound to correct")->required();
    cor->add_option("--xi", cor_xi, "Zipf exponent (lookup key and c_i = i^-xi)")
        ->capture_default_str();
    cor->add_option("--rank,-r", cor_r, "Rank the bound was solved at")->capture_default_str();
    cor->add_option("--c", cor_c, "Explicit c_1..c_r")->delimiter(',');

    // analyze
    input_options an_in;
    analyze_config an_cfg;
    std::string an_table, an_unit = "bits";
    std::optional<double> an_xi;
    bool an_json = false;
    auto* an = app.add_subcommand("analyze", "Predictability report for an interaction log");
    add_input_options(an, an_in, true);
    an->add_option("--rank,-r", an_cfg.rank, "Coupled ranks")->capture_default_str();
    an->add_option("--xi-override", an_xi, "Use c_i = i^-xi and this xi for the table lookup");
    an->add_option("--table", an_table, "Calibration table for bias correction");
    an->add_option("--unit", an_unit, "Entropy unit fed to the solver")->capture_default_str();
    an->add_option("--max-rank", an_cfg.max_fit_rank, "Ranks used by the Zipf fit")
        ->capture_default_str();
    an->add_flag("--global-m", an_cfg.global_m, "Use the whole-log vocabulary as M");
    an->add_flag("--event-weighted", an_cfg.event_weighted, "Weight users by their event count");
    an->add_option("--threads", an_cfg.threads, "Worker threads");
    an->add_flag("--json", an_json, "JSON instead of tab-separated output");
    std::uint64_t an_seed = 0;
    an->add_option("--seed", an_seed, "Accepted for symmetry; analysis is deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_failure;
    }

    try {
        output out(out_path);
        auto& os = out.stream();

        if (*ent) {
            const auto unit = parse_entropy_unit(ent_unit);
            const auto log = parse_events_file(ent_in.path, to_format(ent_in));
            const auto seqs = build_sequences(log, ent_in.min_length);
            os << "user\tn\tM\tS\n";
            for (const auto& [user, seq] : seqs.by_user) {
                os << user << '\t' << seq.size() << '\t' << seq.vocab_size << '\t';
                if (seq.size() >= 2)
                    os << sig6(lz_entropy_rate(seq.view(), unit)) << '\n';
                else
                    os << "nan\n";
            }
        } else if (*pop) {
            const auto log = parse_events_file(pop_in.path, to_format(pop_in));
            const auto prof = rank_frequencies(log);
            try {
                const auto fit = fit_zipf(prof, pop_fit_rank);
                os << "# xi\t" << sig6(fit.xi) << "\n# ranks_used\t" << fit.ranks_used << '\n';
                if (fit.negative)
                    std::cerr << "warning: fitted Zipf exponent is negative\n";
            } catch (const domain_error& e) {
                os << "# xi\tnan\n";
                std::cerr << "warning: " << e.what() << '\n';
            }
            os << "rank\titem\tfreq\tc\n";
            for (std::size_t k = 0; k < prof.freqs.size(); ++k)
                os << k + 1 << '\t' << log.item_names[prof.items[k]] << '\t' << prof.freqs[k]
                   << '\t'
                   << sig6(static_cast<double>(prof.freqs[k]) /
                           static_cast<double>(prof.freqs[0]))
                   << '\n';
        } else if (*sol) {
            if (sol_naive) {
                print_bound(os, solve_naive_topn(sol_s, sol_m, *sol_naive));
            } else {
                const auto c = c_vector(sol_c, sol_xi, sol_r);
                print_bound(os, sf_solve({sol_s, sol_m, c}));
            }
        } else if (*gen) {
            auto spec = make_spec(parse_generator_method(gen_method), gen_m, gen_p, gen_xi,
                                  gen_len, gen_seed);
            if (gen_rself == "same_state")
                spec.r_self = r_self_mode::same_state;
            else if (gen_rself != "uniform_member")
                throw config_error("unknown --r-self '" + gen_rself + "'");
            if (gen_users < 1)
                throw config_error("--users must be at least 1");
            if (gen_users > 1 && out_path.empty())
                throw config_error("--users above 1 needs --out");
            const auto truth = true_predictability(spec);
            for (std::size_t u = 0; u < gen_users; ++u) {
                auto s = spec;
                s.seed = gen_seed + u;
                const auto seq = generate(s);
                if (gen_users == 1) {
                    for (auto v : seq.symbols)
                        os << v << '\n';
                } else {
                    char name[32];
                    std::snprintf(name, sizeof name, "user%05zu", u);
                    for (std::size_t t = 0; t < seq.size(); ++t)
                        os << name << ",s" << seq.symbols[t] << ',' << t << '\n';
                }
            }
            if (!out_path.empty()) {
                nlohmann::json meta;
                meta["method"] = std::string(to_string(spec.method));
                meta["m"] = spec.m;
                meta["p"] = spec.p;
                meta["xi"] = gen_xi;
                meta["c"] = spec.c;
                meta["length"] = spec.length;
                meta["seed"] = gen_seed;
                meta["users"] = gen_users;
                meta["r_self"] = gen_rself;
                meta["rng"] = std::string(rng64::algorithm);
                meta["format"] = gen_users == 1 ? "int-per-line" : "csv user,item,time";
                meta["ground_truth"] = {{"source", std::string(to_string(truth.source))},
                                        {"top_pi", truth.top_pi},
                                        {"cumulative", truth.cumulative},
                                        {"entropy_rate_bits", truth.entropy_rate}};
                std::ofstream side(out_path + ".json");
                side << meta.dump(2) << '\n';
                if (!side)
                    throw io_error("cannot write '" + out_path + ".json'");
            }
        } else if (*cal) {
            cal_opt.method = parse_generator_method(cal_method);
            cal_opt.unit = parse_entropy_unit(cal_unit);
            calibration_grid grid;
            grid.p = grid_range(p_min, p_max, p_step);
            grid.xi = grid_range(xi_min, xi_max, xi_step);
            grid.max_rank = cal_rank;
            const auto table = build_table(grid, cal_opt);
            write_table(os, table);
            const auto chk = check_table(table);
            for (const auto& c : chk.not_monotone)
                std::cerr << "warning: deviation rises at p=" << c.p << " xi=" << c.xi
                          << " r=" << c.r << '\n';
            if (!chk.too_negative.empty())
                std::cerr << "warning: " << chk.too_negative.size()
                          << " cells below -0.05 deviation\n";
            out.finish();
            if (cal_strict && !chk.ok()) {
                std::cerr << "error: calibration table failed its shape checks\n";
                return data_failure;
            }
        } else if (*cor) {
            const auto table = load_table(cor_table);
            const auto c = cor_c.empty() ? zipf_c_ratios(cor_xi, cor_r)
                                         : c_vector(cor_c, cor_xi, cor_r);
            const bound_result b{cor_pi1, cumulative_topn(cor_pi1, c), false, 0.0};
            const auto fixed = correct(b, c, table, cor_xi);
            if (fixed.lookup.xi_clamped)
                std::cerr << "warning: xi outside the calibration table\n";
            if (fixed.lookup.p_clamped)
                std::cerr << "warning: bound outside the calibration table\n";
            os << "# deviation\t" << sig6(fixed.lookup.deviation) << "\n# cell\t"
               << sig6(fixed.lookup.p) << '\t' << sig6(fixed.lookup.xi) << '\t' << fixed.lookup.r
               << "\nrank\tbound\tcorrected\n";
            for (std::size_t k = 0; k < c.size(); ++k)
                os << "Top-" << k + 1 << '\t' << sig6(b.topn[k]) << '\t'
                   << sig6(fixed.corrected.topn[k]) << '\n';
        } else if (*an) {
            an_cfg.format = to_format(an_in);
            an_cfg.min_length = an_in.min_length;
            an_cfg.xi_override = an_xi;
            an_cfg.unit = parse_entropy_unit(an_unit);
            std::optional<calibration_table> table;
            if (!an_table.empty())
                table = load_table(an_table);
            const auto rep = analyze_file(an_in.path, an_cfg, table ? &*table : nullptr);
            for (const auto& w : rep.warnings)
                std::cerr << "warning: " << w << '\n';
            if (an_json)
                os << report_json(rep).dump(2) << '\n';
            else
                write_report_tsv(os, rep);
        }
        out.finish();
        return ok;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data_failure;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return internal_failure;
    }
}
