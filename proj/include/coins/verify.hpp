#pragma once

// Exhaustive strategy verification: is every configuration identified, and
// after how many weighings in the worst case?
//
// Verification runs two independent routes and cross-checks them:
//   top-down: split the posterior through the tree with per-set pan masks,
//   bottom-up: trace every configuration from the root by simulating pans.
// A mismatch between the routes is a defect in this artifact, not in the
// strategy, and is reported as a logic error.

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coins/model.hpp"
#include "coins/oracle.hpp"

namespace coins {

/// Longest root-to-leaf path, counted in weighings.
inline int depth(const StrategyNode& node) {
    if (node.is_leaf()) return 0;
    int d = 0;
    for (int i = 0; i < 3; ++i) d = std::max(d, depth(*node.child[i]));
    return 1 + d;
}

inline int depth(const Strategy& s) {
    if (!s.root) throw ValidationError("strategy has no root node");
    return depth(*s.root);
}

struct WrongDecision {
    Configuration actual;
    // Empty when the configuration ran into a contradiction leaf.
    std::optional<Configuration> decided;
};

struct VerificationReport {
    Instance instance;
    int depth = 0;
    bool complete = false;
    // Leaves whose objective set still holds two or more configurations.
    std::vector<std::pair<OutcomeWord, std::size_t>> ambiguous_leaves;
    std::vector<WrongDecision> wrong_decisions;
    // Contradiction leaves no configuration can reach; harmless, but counted.
    std::size_t unreachable_contradictions = 0;
    std::uint64_t configs_checked = 0;
};

namespace detail {

struct VerifyContext {
    const Instance& inst;
    std::size_t m;
    std::vector<std::uint32_t> digits; // member-major digit matrix of the root posterior
    std::vector<Code> codes;           // root posterior member codes
    std::vector<const StrategyNode*> leaf_of; // per member, filled by the top-down pass
    std::vector<std::vector<std::int8_t>> mask; // per set, reused pan marks
    VerificationReport report;

    VerifyContext(const Posterior& p, const Strategy& s) : inst(s.instance), m(inst.set_count()) {
        codes = p.members;
        digits.resize(codes.size() * std::max<std::size_t>(m, 1));
        for (std::size_t r = 0; r < codes.size(); ++r) {
            Code c = codes[r];
            for (std::size_t i = 0; i < m; ++i) {
                digits[r * m + i] = static_cast<std::uint32_t>(c % inst.sizes[i]);
                c /= inst.sizes[i];
            }
        }
        leaf_of.assign(codes.size(), nullptr);
        mask.resize(m);
        for (std::size_t i = 0; i < m; ++i) mask[i].assign(inst.sizes[i], 0);
    }

    void top_down(const StrategyNode& node, std::vector<std::uint32_t>& rows, OutcomeWord& word) {
        if (node.kind == StrategyNode::Kind::Contradiction) {
            if (rows.empty()) {
                ++report.unreachable_contradictions;
            } else {
                for (auto r : rows)
                    report.wrong_decisions.push_back(
                        {decode_config(inst, codes[r]), std::nullopt});
                for (auto r : rows) leaf_of[r] = &node;
            }
            return;
        }
        if (node.kind == StrategyNode::Kind::Decide) {
            for (auto r : rows) leaf_of[r] = &node;
            if (rows.size() > 1) {
                report.ambiguous_leaves.emplace_back(word, rows.size());
            } else if (rows.size() == 1) {
                Configuration actual = decode_config(inst, codes[rows[0]]);
                if (!(actual == node.decided))
                    report.wrong_decisions.push_back({std::move(actual), node.decided});
            }
            return;
        }
        // Internal node: mark pans, split rows by outcome.
        const Weighing& w = node.weighing;
        std::vector<std::uint32_t> touched;
        auto mark = [&](const std::vector<CoinId>& pan, std::int8_t v) {
            for (const auto& coin : pan) {
                touched.push_back(coin.set);
                mask[coin.set][coin.index] = v;
            }
        };
        mark(w.left, +1);
        mark(w.right, -1);
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

        std::array<std::vector<std::uint32_t>, 3> split;
        for (auto r : rows) {
            int bal = 0;
            for (auto setIdx : touched) bal += mask[setIdx][digits[r * m + setIdx]];
            split[static_cast<int>(detail::sign_outcome(bal))].push_back(r);
        }
        // Unmark before recursing; the mask vectors are shared across levels.
        for (const auto& coin : w.left) mask[coin.set][coin.index] = 0;
        for (const auto& coin : w.right) mask[coin.set][coin.index] = 0;

        rows.clear();
        rows.shrink_to_fit();
        for (Outcome o : kOutcomes) {
            word.push(o);
            top_down(node.next(o), split[static_cast<int>(o)], word);
            word.outcomes.pop_back();
        }
    }

    // Independent route: simulate each configuration through the tree using
    // the decoded fake vector directly.
    const StrategyNode* trace_unchecked(const StrategyNode* node, std::uint32_t row) const {
        while (node->kind == StrategyNode::Kind::Weigh) {
            int bal = 0;
            for (const auto& coin : node->weighing.left)
                if (digits[row * m + coin.set] == coin.index) ++bal;
            for (const auto& coin : node->weighing.right)
                if (digits[row * m + coin.set] == coin.index) --bal;
            node = &node->next(detail::sign_outcome(bal));
        }
        return node;
    }
};

} // namespace detail

/// Verifies `s` against an explicit posterior: every member must reach a leaf
/// deciding exactly that member. Collects all defects instead of stopping at
/// the first; debugging a composed strategy needs the full list.
inline VerificationReport verify_posterior(const Posterior& p, const Strategy& s) {
    validate_strategy(s);
    if (!(p.instance == s.instance))
        throw ValidationError("posterior and strategy instances differ");
    detail::VerifyContext ctx(p, s);
    ctx.report.instance = s.instance;
    ctx.report.depth = depth(s);
    ctx.report.configs_checked = p.members.size();

    std::vector<std::uint32_t> rows(p.members.size());
    for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
    OutcomeWord word;
    ctx.top_down(*s.root, rows, word);

    for (std::uint32_t r = 0; r < ctx.codes.size(); ++r) {
        const StrategyNode* leaf = ctx.trace_unchecked(s.root.get(), r);
        if (leaf != ctx.leaf_of[r])
            throw std::logic_error("verify: top-down and trace routes disagree on member " +
                                   std::to_string(ctx.codes[r]));
    }

    ctx.report.complete =
        ctx.report.ambiguous_leaves.empty() && ctx.report.wrong_decisions.empty();
    if (ctx.report.complete) {
        // Completeness forces |P| <= 3^depth: members map injectively to leaves.
        unsigned __int128 cap = 1;
        for (int i = 0; i < ctx.report.depth && cap < p.members.size(); ++i) cap *= 3;
        if (static_cast<unsigned __int128>(p.members.size()) > cap)
            throw std::logic_error("verify: complete strategy with |P| > 3^depth");
    }
    return ctx.report;
}

/// Verifies `s` over every configuration of its instance (Definition of a
/// k-completed strategy, with k = depth).
inline VerificationReport exhaustive_verify(const Strategy& s) {
    return verify_posterior(full_posterior(s.instance), s);
}

} // namespace coins
