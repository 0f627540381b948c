#pragma once

// Constructive strategy builders. Two devices:
//
//   build_reduction: the ternary induction for uniform instances. Each round
//   weighs a third of every live set against another third, shrinking every
//   set to at most ceil(n/3) candidates (padded back to exactly ceil(n/3)
//   with coins already known genuine, so every branch stays uniform). Rounds
//   repeat until the per-m base threshold, where a searched base strategy
//   finishes the job.
//
//   build_grouping: coarsening compositions. Coins are bundled into
//   super-coins (the bundle holding the fake weighs heavy at bundle level),
//   a base strategy is run at bundle granularity, and per-bundle strategies
//   resolve the remainder.
//
// Base strategies come from a library backed by the search module and the
// strategy cache; the builders never embed hard-coded trees, and a missing
// base fails loudly rather than silently substituting something weaker.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include "coins/bounds.hpp"
#include "coins/model.hpp"
#include "coins/search.hpp"
#include "coins/strategy_io.hpp"
#include "coins/verify.hpp"

namespace coins {

/// Base-strategy store: in-memory first, then the on-disk cache, then (when
/// enabled) a fresh search. Entries are keyed by normalized sizes and
/// remapped onto the requested set order.
class StrategyLibrary {
  public:
    StrategyLibrary() = default;
    explicit StrategyLibrary(StrategyCache* cache) : cache_(cache) {}

    void enable_search(const SearchLimits& limits) {
        auto_search_ = true;
        search_limits_ = limits;
        search_limits_.workers = limits.workers;
    }

    void add(Strategy s) {
        auto report = exhaustive_verify(s);
        if (!report.complete)
            throw ValidationError("library: refusing an incomplete strategy for [" +
                                  s.instance.to_string() + "]");
        Strategy normalized =
            detail::permute_strategy(s, detail::normalization_perm(s.instance));
        mem_.insert_or_assign(normalized.instance.sizes, std::move(normalized));
    }

    bool contains(const Instance& inst) {
        if (mem_.count(normalized_sizes(inst))) return true;
        if (cache_ && cache_->get(inst).has_value()) return true;
        return false;
    }

    /// Returns the base strategy for `inst`, in `inst`'s set order.
    /// Throws DependencyError naming the instance when it cannot be produced.
    Strategy require(const Instance& inst) {
        auto key = normalized_sizes(inst);
        auto it = mem_.find(key);
        if (it == mem_.end()) {
            if (cache_) {
                if (auto hit = cache_->get(Instance(key))) {
                    it = mem_.emplace(key, std::move(*hit)).first;
                }
            }
        }
        if (it == mem_.end() && auto_search_) {
            auto res = solve_exact(Instance(key), search_limits_);
            if (res.status == SearchStatus::Found) {
                if (cache_) cache_->put(*res.strategy);
                it = mem_.emplace(key, std::move(*res.strategy)).first;
            }
        }
        if (it == mem_.end())
            throw DependencyError("missing base strategy for instance [" +
                                  Instance(key).to_string() + "]");
        // Remap normalized order onto the requested order.
        auto perm = detail::normalization_perm(inst);
        std::vector<std::uint32_t> inverse(perm.size());
        for (std::uint32_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
        return detail::permute_strategy(it->second, inverse);
    }

  private:
    std::map<std::vector<std::uint32_t>, Strategy> mem_;
    StrategyCache* cache_ = nullptr;
    bool auto_search_ = false;
    SearchLimits search_limits_;
};

// ---------------------------------------------------------------------------
// Ternary reduction.
// ---------------------------------------------------------------------------

/// One round of per-set third-vs-third weighings over explicit candidate
/// lists. Sets with fewer than two candidates are skipped (already resolved).
struct TernarySplit {
    std::uint32_t set = 0;
    Weighing weighing;
    // Residual candidates by outcome: first third / untouched rest / second third.
    std::array<std::vector<std::uint32_t>, 3> parts;
};

inline std::vector<TernarySplit> ternary_round(
    const Instance& inst, const std::vector<std::vector<std::uint32_t>>& candidates) {
    if (candidates.size() != inst.set_count())
        throw ValidationError("ternary_round: candidate lists do not match the instance");
    std::vector<TernarySplit> out;
    for (std::uint32_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        if (cand.size() < 2) continue;
        std::uint32_t n = static_cast<std::uint32_t>(cand.size());
        std::uint32_t third = (n + 2) / 3;
        TernarySplit split;
        split.set = i;
        for (std::uint32_t k = 0; k < third; ++k) {
            split.weighing.left.push_back({i, cand[k]});
            split.weighing.right.push_back({i, cand[third + k]});
            split.parts[0].push_back(cand[k]);
            split.parts[2].push_back(cand[third + k]);
        }
        for (std::uint32_t k = 2 * third; k < n; ++k) split.parts[1].push_back(cand[k]);
        validate_weighing(inst, split.weighing);
        out.push_back(std::move(split));
    }
    return out;
}

/// The schedule of a full reduction for the uniform instance n|m: how many
/// rounds, the part sizes per round, and the base reached.
struct ReductionPlan {
    std::uint32_t n = 0;
    unsigned m = 0;
    int rounds = 0;
    std::vector<std::array<std::uint32_t, 3>> round_parts; // (third, rest, third)
    Instance base_instance;
};

namespace detail {

inline std::uint32_t reduction_threshold(unsigned m) {
    switch (m) {
        case 2: return 5;
        case 3: return 6;
        case 4: return 20;
        case 5: return 17;
        default:
            throw ValidationError("reduction construction is only defined for m in 2..5");
    }
}

} // namespace detail

inline ReductionPlan plan_reduction(std::uint32_t n, unsigned m) {
    if (n == 0) throw ValidationError("set size must be >= 1");
    std::uint32_t threshold = detail::reduction_threshold(m);
    ReductionPlan plan;
    plan.n = n;
    plan.m = m;
    std::uint32_t s = n;
    while (s > threshold) {
        std::uint32_t third = (s + 2) / 3;
        plan.round_parts.push_back({third, s - 2 * third, third});
        s = third;
        ++plan.rounds;
    }
    plan.base_instance = Instance(std::vector<std::uint32_t>(m, s));
    return plan;
}

namespace detail {

// Maps a base strategy into a host instance: base set k lands on host set
// target_sets[k], base coin (k, j) on host coin (target_sets[k],
// coin_maps[k][j]); decided configurations go through leaf_fn.
inline std::unique_ptr<StrategyNode> map_base_node(
    const StrategyNode& n, const std::vector<std::uint32_t>& target_sets,
    const std::vector<std::vector<std::uint32_t>>& coin_maps,
    const std::function<Configuration(const Configuration&)>& leaf_fn) {
    switch (n.kind) {
        case StrategyNode::Kind::Contradiction:
            return make_contradiction();
        case StrategyNode::Kind::Decide:
            return make_decide(leaf_fn(n.decided));
        case StrategyNode::Kind::Weigh: {
            Weighing w;
            for (const auto& c : n.weighing.left)
                w.left.push_back({target_sets[c.set], coin_maps[c.set][c.index]});
            for (const auto& c : n.weighing.right)
                w.right.push_back({target_sets[c.set], coin_maps[c.set][c.index]});
            std::array<std::unique_ptr<StrategyNode>, 3> kids;
            for (int i = 0; i < 3; ++i)
                kids[i] = map_base_node(*n.child[i], target_sets, coin_maps, leaf_fn);
            return make_weigh(std::move(w), std::move(kids[0]), std::move(kids[1]),
                              std::move(kids[2]));
        }
    }
    throw std::logic_error("unreachable");
}

struct ReductionBuilder {
    const Instance& inst;
    unsigned m;
    std::uint32_t threshold;
    StrategyLibrary& bases;

    std::unique_ptr<StrategyNode> build(const std::vector<std::vector<std::uint32_t>>& cand) {
        std::uint32_t s = static_cast<std::uint32_t>(cand[0].size());
        if (s <= threshold) return graft_base(cand);

        auto splits = ternary_round(inst, cand);
        return chain(0, splits, cand, (s + 2) / 3);
    }

    // Chains the per-set weighings of one round; outcome combinations with an
    // empty residual are contradictions.
    std::unique_ptr<StrategyNode> chain(std::size_t idx, const std::vector<TernarySplit>& splits,
                                        std::vector<std::vector<std::uint32_t>> state,
                                        std::uint32_t third) {
        if (idx == splits.size()) return build(pad_round(std::move(state), third));
        const TernarySplit& sp = splits[idx];
        std::array<std::unique_ptr<StrategyNode>, 3> kids;
        for (int o = 0; o < 3; ++o) {
            if (sp.parts[o].empty()) {
                kids[o] = make_contradiction();
                continue;
            }
            auto next = state;
            next[sp.set] = sp.parts[o];
            kids[o] = chain(idx + 1, splits, std::move(next), third);
        }
        return make_weigh(sp.weighing, std::move(kids[0]), std::move(kids[1]),
                          std::move(kids[2]));
    }

    // Restores uniform candidate counts after a round: every set is padded
    // back to ceil(s/3) with its lowest-index eliminated (hence genuine)
    // coins, realizing the equal-residual assumption of the induction.
    std::vector<std::vector<std::uint32_t>> pad_round(
        std::vector<std::vector<std::uint32_t>> state, std::uint32_t target) {
        for (std::uint32_t i = 0; i < state.size(); ++i) {
            auto& cand = state[i];
            if (cand.size() >= target) continue;
            std::vector<char> in(inst.sizes[i], 0);
            for (auto c : cand) in[c] = 1;
            for (std::uint32_t j = 0; cand.size() < target && j < inst.sizes[i]; ++j)
                if (!in[j]) cand.push_back(j);
        }
        return state;
    }

    std::unique_ptr<StrategyNode> graft_base(const std::vector<std::vector<std::uint32_t>>& cand) {
        std::uint32_t s = static_cast<std::uint32_t>(cand[0].size());
        Strategy base = bases.require(Instance(std::vector<std::uint32_t>(m, s)));
        std::vector<std::uint32_t> identity(m);
        for (std::uint32_t i = 0; i < m; ++i) identity[i] = i;
        auto leaf_fn = [&cand](const Configuration& c) {
            Configuration out;
            out.fakes.resize(c.fakes.size());
            for (std::size_t i = 0; i < c.fakes.size(); ++i) out.fakes[i] = cand[i][c.fakes[i]];
            return out;
        };
        return map_base_node(*base.root, identity, cand, leaf_fn);
    }
};

} // namespace detail

/// Builds a verified strategy for the uniform instance n|m via ternary
/// reduction, with depth at most reduction_upper(n, m). A depth overshoot or
/// verification failure throws instead of returning silently.
inline Strategy build_reduction(std::uint32_t n, unsigned m, StrategyLibrary& bases) {
    (void)detail::reduction_threshold(m); // validates m
    if (n == 0) throw ValidationError("set size must be >= 1");
    Instance inst(std::vector<std::uint32_t>(m, n));
    inst.validate();

    std::vector<std::vector<std::uint32_t>> cand(m);
    for (auto& c : cand) {
        c.resize(n);
        for (std::uint32_t j = 0; j < n; ++j) c[j] = j;
    }
    detail::ReductionBuilder builder{inst, m, detail::reduction_threshold(m), bases};
    Strategy s(inst, builder.build(cand));

    auto report = exhaustive_verify(s);
    if (!report.complete)
        throw std::logic_error("reduction construction failed verification for [" +
                               inst.to_string() + "]");
    if (report.depth > reduction_upper(n, m))
        throw std::logic_error("reduction construction for [" + inst.to_string() +
                               "] has depth " + std::to_string(report.depth) +
                               ", above the bound " + std::to_string(reduction_upper(n, m)));
    return s;
}

// ---------------------------------------------------------------------------
// Coarsening compositions.
// ---------------------------------------------------------------------------

/// Partition of one set into groups acting as super-coins: exactly one group
/// holds the fake, so a complete strategy at group level finds that group.
struct GroupingMap {
    std::uint32_t set = 0;
    std::uint32_t group_size = 0;
    std::vector<std::vector<std::uint32_t>> groups;

    std::uint32_t group_count() const { return static_cast<std::uint32_t>(groups.size()); }

    std::uint32_t group_of(std::uint32_t coin) const {
        for (std::uint32_t g = 0; g < groups.size(); ++g)
            for (auto c : groups[g])
                if (c == coin) return g;
        throw ValidationError("coin " + std::to_string(coin) + " is in no group");
    }
};

/// Splits set `set` of `inst` into consecutive groups of `group_size`.
/// Unless `allow_ragged`, the group size must divide the set size (a ragged
/// final group must be declared deliberately).
inline GroupingMap coarsen(const Instance& inst, std::uint32_t set, std::uint32_t group_size,
                           bool allow_ragged = false) {
    if (set >= inst.set_count()) throw ValidationError("coarsen: set index out of range");
    std::uint32_t n = inst.sizes[set];
    if (group_size == 0 || group_size > n)
        throw ValidationError("coarsen: group size must be within 1..set size");
    if (n % group_size != 0 && !allow_ragged)
        throw ValidationError("coarsen: group size " + std::to_string(group_size) +
                              " does not divide set size " + std::to_string(n));
    GroupingMap map;
    map.set = set;
    map.group_size = group_size;
    for (std::uint32_t start = 0; start < n; start += group_size) {
        std::vector<std::uint32_t> group;
        for (std::uint32_t j = start; j < std::min(start + group_size, n); ++j)
            group.push_back(j);
        map.groups.push_back(std::move(group));
    }
    return map;
}

/// Grafts a continuation onto every deciding leaf of `first`. The callback
/// receives the leaf's decided configuration and returns the follow-up
/// strategy (same instance) or nothing to keep the leaf as is.
inline Strategy compose_sequential(
    const Strategy& first,
    const std::function<std::optional<Strategy>(const Configuration&)>& continuation) {
    validate_strategy(first);
    auto graft = [&](auto&& self, const StrategyNode& n) -> std::unique_ptr<StrategyNode> {
        switch (n.kind) {
            case StrategyNode::Kind::Contradiction:
                return make_contradiction();
            case StrategyNode::Kind::Decide: {
                auto follow = continuation(n.decided);
                if (!follow) return make_decide(n.decided);
                if (!(follow->instance == first.instance))
                    throw ValidationError(
                        "compose_sequential: continuation instance [" +
                        follow->instance.to_string() + "] does not match [" +
                        first.instance.to_string() + "]");
                return follow->root->clone();
            }
            case StrategyNode::Kind::Weigh: {
                std::array<std::unique_ptr<StrategyNode>, 3> kids;
                for (int i = 0; i < 3; ++i) kids[i] = self(self, *n.child[i]);
                return make_weigh(n.weighing, std::move(kids[0]), std::move(kids[1]),
                                  std::move(kids[2]));
            }
        }
        throw std::logic_error("unreachable");
    };
    return Strategy(first.instance, graft(graft, *first.root));
}

/// Expands a group-level strategy onto the target instance: group-level set k
/// becomes target set maps[k].set, each super-coin becoming its member coins.
/// Leaves decide placeholder configurations marking the winning group by its
/// first coin (sets outside the maps default to coin 0); callers graft
/// continuations that settle the rest.
inline Strategy expand_groups(const Strategy& group_level, const std::vector<GroupingMap>& maps,
                              const Instance& target) {
    validate_strategy(group_level);
    target.validate();
    if (maps.size() != group_level.instance.set_count())
        throw ValidationError("expand_groups: one grouping map per group-level set required");
    for (std::size_t k = 0; k < maps.size(); ++k)
        if (group_level.instance.sizes[k] != maps[k].group_count())
            throw ValidationError("expand_groups: group counts do not match the base instance");

    auto expand = [&](auto&& self, const StrategyNode& n) -> std::unique_ptr<StrategyNode> {
        switch (n.kind) {
            case StrategyNode::Kind::Contradiction:
                return make_contradiction();
            case StrategyNode::Kind::Decide: {
                Configuration placeholder;
                placeholder.fakes.assign(target.set_count(), 0);
                for (std::size_t k = 0; k < maps.size(); ++k)
                    placeholder.fakes[maps[k].set] = maps[k].groups[n.decided.fakes[k]][0];
                return make_decide(std::move(placeholder));
            }
            case StrategyNode::Kind::Weigh: {
                Weighing w;
                auto expand_pan = [&](const std::vector<CoinId>& pan, std::vector<CoinId>& out) {
                    for (const auto& super : pan)
                        for (auto member : maps[super.set].groups[super.index])
                            out.push_back({maps[super.set].set, member});
                };
                expand_pan(n.weighing.left, w.left);
                expand_pan(n.weighing.right, w.right);
                if (w.left.size() != w.right.size())
                    throw ValidationError(
                        "expand_groups: grouped weighing expands to unequal pans");
                std::array<std::unique_ptr<StrategyNode>, 3> kids;
                for (int i = 0; i < 3; ++i) kids[i] = self(self, *n.child[i]);
                return make_weigh(std::move(w), std::move(kids[0]), std::move(kids[1]),
                                  std::move(kids[2]));
            }
        }
        throw std::logic_error("unreachable");
    };
    return Strategy(target, expand(expand, *group_level.root));
}

namespace detail {

inline Strategy grouping_base(StrategyLibrary& bases, const Instance& inst, int exact_depth) {
    Strategy s = bases.require(inst);
    int d = depth(s);
    if (d != exact_depth)
        throw DependencyError("base strategy for instance [" + inst.to_string() +
                              "] has depth " + std::to_string(d) + ", need exactly " +
                              std::to_string(exact_depth));
    return s;
}

} // namespace detail

/// The coarsening compositions with their exact target depths:
///   [4,4,4]  -> pair-level triple-2 base, then within-pair base; depth 4.
///   [20,20,20,20] -> quarter-level [5,5] base over the first two sets, then
///   a [4,20] base on (winning quarter of A, C), then another on (winning
///   quarter of B, D); depth 3+4+4 = 11.
/// Requesting a target that already is a base returns the base unchanged.
inline Strategy build_grouping(const Instance& target, StrategyLibrary& bases) {
    target.validate();
    auto key = normalized_sizes(target);

    if (key == std::vector<std::uint32_t>{2, 2, 2}) return bases.require(target);

    if (key == std::vector<std::uint32_t>{4, 4, 4}) {
        std::vector<GroupingMap> maps;
        for (std::uint32_t i = 0; i < 3; ++i) maps.push_back(coarsen(target, i, 2));
        Strategy pair_level =
            detail::grouping_base(bases, Instance({2, 2, 2}), 2);
        Strategy first = expand_groups(pair_level, maps, target);

        Strategy within = detail::grouping_base(bases, Instance({2, 2, 2}), 2);
        Strategy composed = compose_sequential(first, [&](const Configuration& c) {
            std::vector<std::uint32_t> sets{0, 1, 2};
            std::vector<std::vector<std::uint32_t>> coin_maps;
            for (std::uint32_t i = 0; i < 3; ++i)
                coin_maps.push_back(maps[i].groups[maps[i].group_of(c.fakes[i])]);
            auto leaf_fn = [coin_maps](const Configuration& inner) {
                Configuration out;
                out.fakes.resize(3);
                for (std::size_t i = 0; i < 3; ++i)
                    out.fakes[i] = coin_maps[i][inner.fakes[i]];
                return out;
            };
            return Strategy(target,
                            detail::map_base_node(*within.root, sets, coin_maps, leaf_fn));
        });

        auto report = exhaustive_verify(composed);
        if (!report.complete || report.depth != 4)
            throw std::logic_error("grouping construction for [4,4,4] is broken");
        return composed;
    }

    if (key == std::vector<std::uint32_t>{20, 20, 20, 20}) {
        GroupingMap mapA = coarsen(target, 0, 4);
        GroupingMap mapB = coarsen(target, 1, 4);
        Strategy quarter_level = detail::grouping_base(bases, Instance({5, 5}), 3);
        Strategy first = expand_groups(quarter_level, {mapA, mapB}, target);

        Strategy mixed = detail::grouping_base(bases, Instance({4, 20}), 4);

        // Middle stage: resolve (a, c) inside A's winning quarter; keep B's
        // winning quarter encoded by its first coin for the final stage.
        Strategy stage2 = compose_sequential(first, [&](const Configuration& c1) {
            std::uint32_t ga = mapA.group_of(c1.fakes[0]);
            std::uint32_t gb_mark = c1.fakes[1];
            std::vector<std::uint32_t> sets{0, 2};
            std::vector<std::vector<std::uint32_t>> coin_maps{mapA.groups[ga], {}};
            coin_maps[1].resize(20);
            for (std::uint32_t j = 0; j < 20; ++j) coin_maps[1][j] = j;
            auto leaf_fn = [coin_maps, gb_mark](const Configuration& inner) {
                Configuration out;
                out.fakes.assign(4, 0);
                out.fakes[0] = coin_maps[0][inner.fakes[0]];
                out.fakes[2] = coin_maps[1][inner.fakes[1]];
                out.fakes[1] = gb_mark;
                return out;
            };
            return Strategy(target,
                            detail::map_base_node(*mixed.root, sets, coin_maps, leaf_fn));
        });

        Strategy composed = compose_sequential(stage2, [&](const Configuration& c2) {
            std::uint32_t gb = mapB.group_of(c2.fakes[1]);
            std::vector<std::uint32_t> sets{1, 3};
            std::vector<std::vector<std::uint32_t>> coin_maps{mapB.groups[gb], {}};
            coin_maps[1].resize(20);
            for (std::uint32_t j = 0; j < 20; ++j) coin_maps[1][j] = j;
            Configuration fixed = c2;
            auto leaf_fn = [coin_maps, fixed](const Configuration& inner) {
                Configuration out = fixed;
                out.fakes[1] = coin_maps[0][inner.fakes[0]];
                out.fakes[3] = coin_maps[1][inner.fakes[1]];
                return out;
            };
            return Strategy(target,
                            detail::map_base_node(*mixed.root, sets, coin_maps, leaf_fn));
        });

        auto report = exhaustive_verify(composed);
        if (!report.complete || report.depth != 11)
            throw std::logic_error("grouping construction for [20,20,20,20] is broken");
        return composed;
    }

    throw ValidationError("grouping construction supports [4,4,4] and [20,20,20,20] (and the "
                          "degenerate [2,2,2]); got [" +
                          target.to_string() + "]");
}

} // namespace coins
