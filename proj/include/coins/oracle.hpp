#pragma once

// Balance simulation: outcomes for a hidden configuration, posterior
// partitioning by outcome, and strategy tracing.

#include <array>
#include <cstdint>

#include "coins/model.hpp"

namespace coins {

namespace detail {

// Digit of `code` for set `i` under the instance's mixed radix.
inline std::uint32_t config_digit(const Instance& inst, Code code, std::size_t i) {
    for (std::size_t k = 0; k < i; ++k) code /= inst.sizes[k];
    return static_cast<std::uint32_t>(code % inst.sizes[i]);
}

// Fake count difference (left minus right) for the configuration encoded by
// `code`. Counts are exact small integers; no weights are ever involved.
inline int pan_balance(const Instance& inst, Code code, const Weighing& w) {
    int bal = 0;
    for (const auto& c : w.left)
        if (config_digit(inst, code, c.set) == c.index) ++bal;
    for (const auto& c : w.right)
        if (config_digit(inst, code, c.set) == c.index) --bal;
    return bal;
}

inline Outcome sign_outcome(int bal) {
    if (bal > 0) return Outcome::Plus;
    if (bal < 0) return Outcome::Minus;
    return Outcome::Zero;
}

} // namespace detail

/// Outcome of weighing `w` when the fakes sit at `c`: the sign of
/// (fakes on the left pan) - (fakes on the right pan).
inline Outcome weigh_outcome(const Instance& inst, const Configuration& c, const Weighing& w) {
    validate_config(inst, c);
    validate_weighing(inst, w);
    int bal = 0;
    for (const auto& coin : w.left)
        if (c.fakes[coin.set] == coin.index) ++bal;
    for (const auto& coin : w.right)
        if (c.fakes[coin.set] == coin.index) --bal;
    return detail::sign_outcome(bal);
}

/// Splits a posterior into its Plus/Zero/Minus classes under `w`. The classes
/// are disjoint, union to `p`, and preserve member order, so every class is
/// again a canonical posterior.
inline std::array<Posterior, 3> partition(const Posterior& p, const Weighing& w) {
    validate_weighing(p.instance, w);
    std::array<Posterior, 3> out;
    for (auto& q : out) q.instance = p.instance;
    for (Code code : p.members) {
        Outcome o = detail::sign_outcome(detail::pan_balance(p.instance, code, w));
        out[static_cast<int>(o)].members.push_back(code);
    }
    return out;
}

struct TraceResult {
    OutcomeWord word;
    const StrategyNode* leaf = nullptr;
};

/// Runs strategy `s` against hidden configuration `c`, collecting the outcome
/// word (start symbol plus one outcome per weighing) and the leaf reached.
inline TraceResult trace(const Configuration& c, const Strategy& s) {
    validate_config(s.instance, c);
    TraceResult r;
    const StrategyNode* node = s.root.get();
    while (node->kind == StrategyNode::Kind::Weigh) {
        Outcome o = weigh_outcome(s.instance, c, node->weighing);
        r.word.push(o);
        node = &node->next(o);
    }
    r.leaf = node;
    return r;
}

} // namespace coins
