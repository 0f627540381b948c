#pragma once

// Command-line front door. Subcommands: bounds, solve, construct, verify,
// export, play. All human-readable output is also available as JSON via
// --format json with the same semantic content.
//
// Exit codes: 0 success/complete, 1 run-time failure (incomplete strategy,
// inconsistent interactive answers, I/O), 2 proven infeasible at the given
// budget, 3 indeterminate (a cap fired), 4 validation/usage errors.

#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coins/bounds.hpp"
#include "coins/construct.hpp"
#include "coins/model.hpp"
#include "coins/oracle.hpp"
#include "coins/search.hpp"
#include "coins/strategy_io.hpp"
#include "coins/verify.hpp"

namespace coins::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInfeasible = 2;
inline constexpr int kIndeterminate = 3;
inline constexpr int kUsage = 4;

inline constexpr const char* kCacheEnvVar = "COINSEARCH_CACHE";

namespace detail {

inline std::vector<std::uint32_t> parse_size_list(const std::string& text) {
    std::vector<std::uint32_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            long v = std::stol(item, &pos);
            if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
            sizes.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw ValidationError("bad size '" + item + "' in '" + text + "'");
        }
    }
    if (sizes.empty()) throw ValidationError("empty size list '" + text + "'");
    return sizes;
}

inline std::vector<std::uint32_t> parse_index_list(const std::string& text) {
    std::vector<std::uint32_t> indices;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            long v = std::stol(item, &pos);
            if (pos != item.size() || v < 0) throw std::invalid_argument(item);
            indices.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw ValidationError("bad index '" + item + "' in '" + text + "'");
        }
    }
    return indices;
}

inline Instance instance_from(const std::string& sets, const std::string& uniform) {
    if (!sets.empty() && !uniform.empty())
        throw ValidationError("give either --sets or --uniform, not both");
    if (!sets.empty()) {
        Instance inst(parse_size_list(sets));
        inst.validate();
        return inst;
    }
    if (!uniform.empty()) {
        auto nm = parse_size_list(uniform);
        if (nm.size() != 2)
            throw ValidationError("--uniform expects n,m (set size and set count)");
        Instance inst(std::vector<std::uint32_t>(nm[1], nm[0]));
        inst.validate();
        return inst;
    }
    throw ValidationError("an instance is required: --sets n1,n2,... or --uniform n,m");
}

inline std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
    auto dots = text.find("..");
    if (dots == std::string::npos)
        throw ValidationError("range must look like A..B, got '" + text + "'");
    try {
        std::uint64_t a = std::stoull(text.substr(0, dots));
        std::uint64_t b = std::stoull(text.substr(dots + 2));
        if (a == 0 || b < a) throw std::invalid_argument(text);
        return {a, b};
    } catch (const std::exception&) {
        throw ValidationError("bad range '" + text + "'");
    }
}

inline nlohmann::json stats_json(const SearchStats& st) {
    return {{"nodes_expanded", st.nodes_expanded},
            {"table_hits", st.table_hits},
            {"weighings_enumerated", st.weighings_enumerated},
            {"weighings_pruned_symmetry", st.weighings_pruned_symmetry},
            {"weighings_pruned_bound", st.weighings_pruned_bound},
            {"elapsed_seconds", st.elapsed.count()}};
}

inline void print_stats(std::ostream& out, const SearchStats& st) {
    out << "nodes expanded:    " << st.nodes_expanded << "\n"
        << "table hits:        " << st.table_hits << "\n"
        << "weighings tried:   " << st.weighings_enumerated << "\n"
        << "pruned (symmetry): " << st.weighings_pruned_symmetry << "\n"
        << "pruned (bound):    " << st.weighings_pruned_bound << "\n"
        << "elapsed:           " << std::fixed << std::setprecision(3) << st.elapsed.count()
        << "s\n";
}

inline nlohmann::json bound_row_json(const BoundReport& r) {
    nlohmann::json row{{"instance", r.instance.sizes},
                       {"configs", r.configs},
                       {"info_lower", r.info_lower},
                       {"independent_upper", r.independent_upper}};
    row["reduction_upper"] = r.reduction_upper ? nlohmann::json(*r.reduction_upper)
                                               : nlohmann::json(nullptr);
    row["reduction_upper_raw"] = r.reduction_upper_raw ? nlohmann::json(*r.reduction_upper_raw)
                                                       : nlohmann::json(nullptr);
    row["closed_form"] = r.closed_form ? nlohmann::json(*r.closed_form) : nlohmann::json(nullptr);
    row["closed_form_ambiguous"] = r.closed_form_ambiguous;
    row["known_exact"] = r.known_exact ? nlohmann::json(*r.known_exact) : nlohmann::json(nullptr);
    return row;
}

inline std::string opt_str(const std::optional<int>& v) {
    return v ? std::to_string(*v) : std::string("-");
}

struct BoundsOptions {
    std::vector<std::string> sets;
    std::string uniform;
    std::string format = "text";
    bool compare_primed = false;
    std::string n_range;
    unsigned compare_m = 0; // 0 = all of 2..5
};

inline int cmd_bounds(const BoundsOptions& opt, std::ostream& out) {
    if (opt.compare_primed) {
        if (opt.n_range.empty())
            throw ValidationError("--compare-primed needs --n-range A..B");
        auto [lo, hi] = parse_range(opt.n_range);
        std::vector<unsigned> ms;
        if (opt.compare_m) {
            if (opt.compare_m < 2 || opt.compare_m > 5)
                throw ValidationError("--m must be within 2..5");
            ms.push_back(opt.compare_m);
        } else {
            ms = {2, 3, 4, 5};
        }
        std::size_t total_rows = 0, disagreements = 0, near_ties = 0;
        nlohmann::json rows = nlohmann::json::array();
        if (opt.format == "text")
            out << "m    n      sum-form  raw  closed  note\n";
        for (unsigned m : ms) {
            for (const auto& row : compare_closed_forms(m, lo, hi)) {
                ++total_rows;
                if (!row.agree) ++disagreements;
                if (row.ambiguous) ++near_ties;
                if (opt.format == "json") {
                    rows.push_back({{"m", row.m},
                                    {"n", row.n},
                                    {"sum_form", row.reduction_clamped},
                                    {"sum_form_raw", row.reduction_raw},
                                    {"closed_form", row.closed_form},
                                    {"ambiguous", row.ambiguous},
                                    {"agree", row.agree}});
                } else {
                    out << std::left << std::setw(5) << row.m << std::setw(7) << row.n
                        << std::setw(10) << row.reduction_clamped << std::setw(5)
                        << row.reduction_raw << std::setw(8) << row.closed_form
                        << (row.agree ? "" : "DISAGREES")
                        << (row.ambiguous ? " NEAR-TIE" : "") << "\n";
                }
            }
        }
        if (opt.format == "json") {
            out << nlohmann::json{{"rows", rows},
                                  {"disagreements", disagreements},
                                  {"near_ties", near_ties}}
                       .dump(1)
                << "\n";
        } else {
            out << "rows: " << total_rows << "\n";
            out << "disagreements: " << disagreements << "\n";
            out << "near-ties: " << near_ties << "\n";
        }
        return kOk;
    }

    std::vector<Instance> instances;
    if (!opt.uniform.empty()) instances.push_back(instance_from("", opt.uniform));
    for (const auto& s : opt.sets) instances.push_back(instance_from(s, ""));
    if (instances.empty())
        throw ValidationError("an instance is required: --sets n1,n2,... or --uniform n,m");

    if (opt.format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& inst : instances) rows.push_back(bound_row_json(compute_bounds(inst)));
        out << nlohmann::json{{"rows", rows}}.dump(1) << "\n";
        return kOk;
    }
    out << std::left << std::setw(18) << "instance" << std::setw(10) << "configs" << std::setw(7)
        << "lower" << std::setw(7) << "indep" << std::setw(11) << "reduction" << std::setw(8)
        << "closed" << "exact\n";
    for (const auto& inst : instances) {
        BoundReport r = compute_bounds(inst);
        std::string reduction = opt_str(r.reduction_upper);
        if (r.reduction_upper_raw && r.reduction_upper &&
            *r.reduction_upper_raw != *r.reduction_upper)
            reduction += " (raw " + std::to_string(*r.reduction_upper_raw) + ")";
        std::string closed = opt_str(r.closed_form);
        if (r.closed_form_ambiguous) closed += "?";
        out << std::left << std::setw(18) << inst.to_string() << std::setw(10) << r.configs
            << std::setw(7) << r.info_lower << std::setw(7) << r.independent_upper
            << std::setw(11) << reduction << std::setw(8) << closed
            << opt_str(r.known_exact) << "\n";
    }
    return kOk;
}

struct SolveOptions {
    std::string sets;
    std::string uniform;
    int budget = -1;
    double time_cap = 0.0;
    std::uint64_t node_cap = 0;
    unsigned workers = 1;
    std::string out_file;
    std::string format = "text";
};

inline SearchLimits limits_from(double time_cap, std::uint64_t node_cap, unsigned workers) {
    SearchLimits limits;
    if (time_cap < 0) throw ValidationError("--time-cap must be >= 0");
    limits.time_cap =
        std::chrono::milliseconds(static_cast<std::int64_t>(time_cap * 1000.0));
    limits.node_cap = node_cap;
    limits.workers = workers;
    return limits;
}

inline int cmd_solve(const SolveOptions& opt, std::ostream& out) {
    Instance inst = instance_from(opt.sets, opt.uniform);
    SearchLimits limits = limits_from(opt.time_cap, opt.node_cap, opt.workers);

    std::string status;
    int exit_code = kOk;
    std::optional<Strategy> strategy;
    SearchStats stats;
    int found_depth = -1;
    int lower = info_lower(inst);
    int upper = independent_upper(inst);

    if (opt.budget >= 0) {
        SearchResult r = exists_strategy(full_posterior(inst), opt.budget, limits);
        stats = r.stats;
        switch (r.status) {
            case SearchStatus::Found:
                status = "solved";
                strategy = std::move(r.strategy);
                found_depth = depth(*strategy);
                break;
            case SearchStatus::ProvenNone:
                status = "infeasible-at-budget";
                exit_code = kInfeasible;
                break;
            case SearchStatus::Indeterminate:
                status = "indeterminate";
                exit_code = kIndeterminate;
                break;
        }
    } else {
        SolveResult r = solve_exact(inst, limits);
        stats = r.stats;
        lower = r.proven_lower;
        upper = r.upper_hint;
        if (r.status == SearchStatus::Found) {
            status = "solved";
            strategy = std::move(r.strategy);
            found_depth = r.depth;
        } else {
            status = "indeterminate";
            exit_code = kIndeterminate;
        }
    }

    if (strategy && !opt.out_file.empty()) save_file(*strategy, opt.out_file);

    if (opt.format == "json") {
        nlohmann::json j{{"instance", inst.sizes},
                         {"status", status},
                         {"stats", stats_json(stats)},
                         {"lower_bound", lower},
                         {"upper_bound_hint", upper}};
        j["weighings"] = found_depth >= 0 ? nlohmann::json(found_depth) : nlohmann::json(nullptr);
        if (opt.budget >= 0) j["budget"] = opt.budget;
        if (!opt.out_file.empty() && strategy) j["strategy_file"] = opt.out_file;
        out << j.dump(1) << "\n";
    } else {
        out << "instance: " << inst.to_string() << "\n";
        if (opt.budget >= 0) out << "budget: " << opt.budget << "\n";
        out << "status: " << status << "\n";
        if (found_depth >= 0) out << "weighings: " << found_depth << "\n";
        if (exit_code == kIndeterminate)
            out << "bracket: [" << lower << ", " << upper << "]\n";
        print_stats(out, stats);
        if (strategy && !opt.out_file.empty())
            out << "strategy written to " << opt.out_file << "\n";
    }
    return exit_code;
}

struct ConstructOptions {
    std::string sets;
    std::string uniform;
    std::string method = "reduction";
    std::string cache_dir;
    std::string out_file;
    double time_cap = 0.0;
    unsigned workers = 1;
    std::string format = "text";
};

inline int cmd_construct(const ConstructOptions& opt, std::ostream& out) {
    Instance inst = instance_from(opt.sets, opt.uniform);

    std::string method = opt.method;
    if (method == "prop1") method = "reduction";
    if (method == "corollary") method = "grouping";
    if (method != "reduction" && method != "grouping")
        throw ValidationError("--method must be reduction or grouping, got '" + opt.method +
                              "'");

    std::string cache_dir = opt.cache_dir;
    if (cache_dir.empty())
        if (const char* env = std::getenv(kCacheEnvVar)) cache_dir = env;

    std::optional<StrategyCache> cache;
    if (!cache_dir.empty()) cache.emplace(cache_dir);
    StrategyLibrary library(cache ? &*cache : nullptr);
    library.enable_search(limits_from(opt.time_cap, 0, opt.workers));

    Strategy strategy = [&]() {
        if (method == "grouping") return build_grouping(inst, library);
        if (!is_uniform(inst) || inst.set_count() < 2 || inst.set_count() > 5)
            throw ValidationError(
                "the reduction construction needs a uniform instance with 2..5 sets");
        return build_reduction(inst.sizes[0], static_cast<unsigned>(inst.set_count()), library);
    }();

    auto report = exhaustive_verify(strategy);
    if (!opt.out_file.empty()) save_file(strategy, opt.out_file);
    // Constructed strategies are legitimate bases for later runs (e.g. the
    // grouped [20,20,20,20] feeds the m=4 reduction), so persist them too.
    if (cache && report.complete) cache->put(strategy);

    if (opt.format == "json") {
        nlohmann::json j{{"instance", inst.sizes},
                         {"method", method},
                         {"depth", report.depth},
                         {"configs", report.configs_checked},
                         {"complete", report.complete}};
        if (!opt.out_file.empty()) j["strategy_file"] = opt.out_file;
        out << j.dump(1) << "\n";
    } else {
        out << "instance: " << inst.to_string() << "\n"
            << "method: " << method << "\n"
            << "depth: " << report.depth << "\n"
            << "configurations: " << report.configs_checked << "\n"
            << "complete: " << (report.complete ? "yes" : "no") << "\n";
        if (!opt.out_file.empty()) out << "strategy written to " << opt.out_file << "\n";
    }
    return report.complete ? kOk : kFailure;
}

struct VerifyOptions {
    std::string file;
    std::string format = "text";
};

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out) {
    Strategy s = load_file(opt.file);
    VerificationReport report = exhaustive_verify(s);

    if (opt.format == "json") {
        nlohmann::json ambiguous = nlohmann::json::array();
        for (const auto& [word, size] : report.ambiguous_leaves)
            ambiguous.push_back({{"word", word.to_string()}, {"objective_set_size", size}});
        nlohmann::json wrong = nlohmann::json::array();
        for (const auto& w : report.wrong_decisions)
            wrong.push_back({{"actual", w.actual.fakes},
                             {"decided", w.decided ? nlohmann::json(w.decided->fakes)
                                                   : nlohmann::json(nullptr)}});
        out << nlohmann::json{{"instance", s.instance.sizes},
                              {"depth", report.depth},
                              {"configs", report.configs_checked},
                              {"complete", report.complete},
                              {"ambiguous_leaves", ambiguous},
                              {"wrong_decisions", wrong},
                              {"unreachable_contradictions", report.unreachable_contradictions}}
                   .dump(1)
            << "\n";
    } else {
        out << "instance: " << s.instance.to_string() << "\n"
            << "depth: " << report.depth << "\n"
            << "configurations: " << report.configs_checked << "\n"
            << "complete: " << (report.complete ? "yes" : "no") << "\n"
            << "unreachable contradictions: " << report.unreachable_contradictions << "\n";
        std::size_t shown = 0;
        for (const auto& [word, size] : report.ambiguous_leaves) {
            if (++shown > 10) {
                out << "... (" << report.ambiguous_leaves.size() - 10 << " more)\n";
                break;
            }
            out << "ambiguous leaf at " << word.to_string() << ": " << size
                << " configurations left\n";
        }
        shown = 0;
        for (const auto& w : report.wrong_decisions) {
            if (++shown > 10) {
                out << "... (" << report.wrong_decisions.size() - 10 << " more)\n";
                break;
            }
            out << "configuration " << w.actual.to_string() << " ends at "
                << (w.decided ? "decision " + w.decided->to_string() : "a contradiction leaf")
                << "\n";
        }
    }
    return report.complete ? kOk : kFailure;
}

struct ExportOptions {
    std::string file;
    std::string out_file;
};

inline int cmd_export(const ExportOptions& opt, std::ostream& out) {
    Strategy s = load_file(opt.file);
    if (opt.out_file.empty()) {
        export_graph(s, out);
    } else {
        export_graph_file(s, opt.out_file);
        out << "graph written to " << opt.out_file << "\n";
    }
    return kOk;
}

struct PlayOptions {
    std::string file;
    std::string hidden;
    bool interactive = false;
    std::string format = "text";
};

inline int cmd_play(const PlayOptions& opt, std::istream& in, std::ostream& out) {
    Strategy s = load_file(opt.file);
    auto report = exhaustive_verify(s);
    if (!report.complete)
        throw ValidationError("strategy in " + opt.file + " is not complete; refusing to play");

    if (opt.interactive == !opt.hidden.empty()) {
        // Exactly one mode must be chosen.
        throw ValidationError("choose one of --hidden c1,c2,... or --interactive");
    }

    if (!opt.hidden.empty()) {
        // Fake positions are given 0-based, one per set.
        Configuration hidden(parse_index_list(opt.hidden));
        validate_config(s.instance, hidden);

        nlohmann::json steps = nlohmann::json::array();
        const StrategyNode* node = s.root.get();
        int step = 0;
        while (node->kind == StrategyNode::Kind::Weigh) {
            Outcome o = weigh_outcome(s.instance, hidden, node->weighing);
            ++step;
            if (opt.format == "json") {
                steps.push_back({{"weighing", node->weighing.to_string()},
                                 {"outcome", std::string(1, outcome_char(o))}});
            } else {
                out << "weighing " << step << ": " << node->weighing.to_string() << " -> "
                    << outcome_char(o) << "\n";
            }
            node = &node->next(o);
        }
        if (node->kind != StrategyNode::Kind::Decide)
            throw std::logic_error("complete strategy reached a contradiction");
        if (opt.format == "json") {
            out << nlohmann::json{{"instance", s.instance.sizes},
                                  {"hidden", hidden.fakes},
                                  {"steps", steps},
                                  {"decision", node->decided.fakes}}
                       .dump(1)
                << "\n";
        } else {
            out << "decision: " << node->decided.to_string() << "\n";
        }
        return kOk;
    }

    // Interactive: the user answers each weighing with >, =, or <.
    const StrategyNode* node = s.root.get();
    int step = 0;
    while (node->kind == StrategyNode::Kind::Weigh) {
        ++step;
        out << "weighing " << step << ": " << node->weighing.to_string() << "\n";
        Outcome o;
        for (;;) {
            out << "outcome (>, =, <): " << std::flush;
            std::string line;
            if (!std::getline(in, line)) {
                out << "\n";
                throw IoError("input ended before the strategy finished");
            }
            auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos) continue;
            char c = line[first];
            if (c == '>') {
                o = Outcome::Plus;
            } else if (c == '=') {
                o = Outcome::Zero;
            } else if (c == '<') {
                o = Outcome::Minus;
            } else {
                out << "please answer with >, =, or < (left pan listed first)\n";
                continue;
            }
            break;
        }
        node = &node->next(o);
    }
    if (node->kind == StrategyNode::Kind::Contradiction) {
        out << "the answers are inconsistent: no placement of fakes produces this outcome "
               "sequence\n";
        return kFailure;
    }
    out << "decision: " << node->decided.to_string() << "\n";
    return kOk;
}

} // namespace detail

/// Entry point used by the binary and by the tests (streams injectable).
/// `args` excludes the program name.
inline int run(std::vector<std::string> args, std::istream& in, std::ostream& out,
               std::ostream& err) {
    CLI::App app{"Solver, verifier, and bound calculator for the multi-set counterfeit coin "
                 "problem: every set hides one heavier fake, and a two-pan balance must find "
                 "them all."};
    app.name("coinsearch");
    app.require_subcommand(0, 1);

    detail::BoundsOptions bounds_opt;
    auto* bounds_cmd = app.add_subcommand("bounds", "Bound table and closed-form comparison");
    bounds_cmd->add_option("--sets", bounds_opt.sets, "Instance sizes, e.g. 5,5 (repeatable)");
    bounds_cmd->add_option("--uniform", bounds_opt.uniform, "Uniform instance n,m");
    bounds_cmd->add_option("--format", bounds_opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    bounds_cmd->add_flag("--compare-primed", bounds_opt.compare_primed,
                         "Compare the ceiling-sum bounds with their closed forms");
    bounds_cmd->add_option("--n-range", bounds_opt.n_range, "Range A..B for --compare-primed");
    bounds_cmd->add_option("--m", bounds_opt.compare_m,
                           "Restrict --compare-primed to one m (2..5)");

    detail::SolveOptions solve_opt;
    auto* solve_cmd = app.add_subcommand("solve", "Exact minimum weighing count by search");
    solve_cmd->add_option("--sets", solve_opt.sets, "Instance sizes, e.g. 4,20");
    solve_cmd->add_option("--uniform", solve_opt.uniform, "Uniform instance n,m");
    solve_cmd->add_option("--budget", solve_opt.budget,
                          "Decide feasibility at this exact depth instead of optimizing");
    solve_cmd->add_option("--time-cap", solve_opt.time_cap, "Time cap in seconds (0 = none)");
    solve_cmd->add_option("--node-cap", solve_opt.node_cap, "Node cap (0 = none)");
    solve_cmd->add_option("--workers", solve_opt.workers, "Parallel workers (default 1)")
        ->check(CLI::Range(1u, 256u));
    solve_cmd->add_option("--out", solve_opt.out_file, "Write the strategy to this file");
    solve_cmd->add_option("--format", solve_opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    detail::ConstructOptions construct_opt;
    auto* construct_cmd =
        app.add_subcommand("construct", "Build strategies from reductions and compositions");
    construct_cmd->add_option("--sets", construct_opt.sets, "Instance sizes");
    construct_cmd->add_option("--uniform", construct_opt.uniform, "Uniform instance n,m");
    construct_cmd->add_option("--method", construct_opt.method, "reduction or grouping");
    construct_cmd->add_option("--cache", construct_opt.cache_dir,
                              std::string("Base-strategy cache directory (default $") +
                                  kCacheEnvVar + ")");
    construct_cmd->add_option("--out", construct_opt.out_file, "Write the strategy here");
    construct_cmd->add_option("--time-cap", construct_opt.time_cap,
                              "Time cap in seconds for base searches (0 = none)");
    construct_cmd->add_option("--workers", construct_opt.workers, "Workers for base searches")
        ->check(CLI::Range(1u, 256u));
    construct_cmd->add_option("--format", construct_opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    detail::VerifyOptions verify_opt;
    auto* verify_cmd = app.add_subcommand("verify", "Exhaustively verify a strategy file");
    verify_cmd->add_option("file", verify_opt.file, "Strategy file")->required();
    verify_cmd->add_option("--format", verify_opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    detail::ExportOptions export_opt;
    auto* export_cmd = app.add_subcommand("export", "Export a strategy as a Graphviz digraph");
    export_cmd->add_option("file", export_opt.file, "Strategy file")->required();
    export_cmd->add_option("--out", export_opt.out_file, "Output file (default stdout)");

    detail::PlayOptions play_opt;
    auto* play_cmd = app.add_subcommand("play", "Run a strategy against a hidden configuration");
    play_cmd->add_option("file", play_opt.file, "Strategy file")->required();
    play_cmd->add_option("--hidden", play_opt.hidden,
                         "Hidden fake indices, one per set, e.g. 2,4");
    play_cmd->add_flag("--interactive", play_opt.interactive,
                       "Read outcomes (>, =, <) from standard input");
    play_cmd->add_option("--format", play_opt.format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (app.got_subcommand(bounds_cmd)) return detail::cmd_bounds(bounds_opt, out);
        if (app.got_subcommand(solve_cmd)) return detail::cmd_solve(solve_opt, out);
        if (app.got_subcommand(construct_cmd)) return detail::cmd_construct(construct_opt, out);
        if (app.got_subcommand(verify_cmd)) return detail::cmd_verify(verify_opt, out);
        if (app.got_subcommand(export_cmd)) return detail::cmd_export(export_opt, out);
        if (app.got_subcommand(play_cmd)) return detail::cmd_play(play_opt, in, out);
        out << app.help();
        return kOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const CapacityError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DependencyError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

} // namespace coins::cli
