#pragma once

// Domain types for the multi-set counterfeit coin problem: m disjoint coin
// sets, each hiding exactly one heavier fake, probed with a two-pan balance.

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coins/errors.hpp"

namespace coins {

using Code = std::uint64_t;

/// A problem instance: the sizes (n_1,...,n_m) of the coin sets.
/// Every set contains exactly one fake; all fakes weigh the same and are
/// heavier than a genuine coin. Sets are disjoint by construction (a coin
/// carries its set index).
struct Instance {
    std::vector<std::uint32_t> sizes;

    // Instances whose configuration space exceeds this are rejected up front.
    static constexpr Code kDefaultConfigCap = Code{1} << 32;

    Instance() = default;
    explicit Instance(std::vector<std::uint32_t> s) : sizes(std::move(s)) {}

    std::size_t set_count() const { return sizes.size(); }
    std::uint32_t total_coins() const {
        std::uint32_t t = 0;
        for (auto n : sizes) t += n;
        return t;
    }

    /// Number of possible fake placements, i.e. the product of all sizes.
    /// The empty instance has one (vacuous) configuration.
    Code config_count(Code cap = kDefaultConfigCap) const {
        unsigned __int128 prod = 1;
        for (auto n : sizes) {
            if (n == 0) throw ValidationError("instance: set size must be >= 1");
            prod *= n;
            if (prod > cap)
                throw CapacityError("instance: configuration count exceeds cap of " +
                                    std::to_string(cap));
        }
        return static_cast<Code>(prod);
    }

    void validate(Code cap = kDefaultConfigCap) const { (void)config_count(cap); }

    std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(sizes[i]);
        }
        return s;
    }

    bool operator==(const Instance&) const = default;
};

/// A coin, addressed by its set and its index within the set (both 0-based).
struct CoinId {
    std::uint32_t set = 0;
    std::uint32_t index = 0;

    auto operator<=>(const CoinId&) const = default;

    std::string to_string() const {
        return "(" + std::to_string(set) + "," + std::to_string(index) + ")";
    }
};

inline void validate_coin(const Instance& inst, const CoinId& c) {
    if (c.set >= inst.set_count() || c.index >= inst.sizes[c.set])
        throw ValidationError("coin " + c.to_string() + " out of range for instance [" +
                              inst.to_string() + "]");
}

/// One concrete placement of the fakes: entry i is the fake's index in set i.
struct Configuration {
    std::vector<std::uint32_t> fakes;

    Configuration() = default;
    explicit Configuration(std::vector<std::uint32_t> f) : fakes(std::move(f)) {}

    bool operator==(const Configuration&) const = default;

    std::string to_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < fakes.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(fakes[i]);
        }
        return s + "]";
    }
};

inline void validate_config(const Instance& inst, const Configuration& c) {
    if (c.fakes.size() != inst.set_count())
        throw ValidationError("configuration " + c.to_string() +
                              " has wrong arity for instance [" + inst.to_string() + "]");
    for (std::size_t i = 0; i < c.fakes.size(); ++i)
        if (c.fakes[i] >= inst.sizes[i])
            throw ValidationError("configuration " + c.to_string() +
                                  " out of range in set " + std::to_string(i));
}

/// Mixed-radix encoding of a configuration with radices (n_1,...,n_m),
/// set 0 least significant. Fixed radix order keeps serialized strategies
/// portable across implementations.
inline Code encode_config(const Instance& inst, const Configuration& c) {
    validate_config(inst, c);
    Code code = 0;
    Code radix = 1;
    for (std::size_t i = 0; i < inst.set_count(); ++i) {
        code += radix * c.fakes[i];
        radix *= inst.sizes[i];
    }
    return code;
}

inline Configuration decode_config(const Instance& inst, Code code) {
    if (code >= inst.config_count())
        throw ValidationError("code " + std::to_string(code) + " out of range for instance [" +
                              inst.to_string() + "]");
    Configuration c;
    c.fakes.resize(inst.set_count());
    for (std::size_t i = 0; i < inst.set_count(); ++i) {
        c.fakes[i] = static_cast<std::uint32_t>(code % inst.sizes[i]);
        code /= inst.sizes[i];
    }
    return c;
}

/// Result of dropping forced sets (size 1) from an instance.
struct Normalization {
    Instance reduced;
    // original set index -> reduced index, or nullopt when the set was dropped
    std::vector<std::optional<std::uint32_t>> original_to_reduced;
    std::vector<std::uint32_t> reduced_to_original;
};

/// Removes sets of size 1: their fake is forced, so solving the reduced
/// instance solves the original.
inline Normalization normalize_instance(const Instance& inst) {
    inst.validate();
    Normalization out;
    out.original_to_reduced.resize(inst.set_count());
    for (std::size_t i = 0; i < inst.set_count(); ++i) {
        if (inst.sizes[i] == 1) continue;
        out.original_to_reduced[i] = static_cast<std::uint32_t>(out.reduced.sizes.size());
        out.reduced_to_original.push_back(static_cast<std::uint32_t>(i));
        out.reduced.sizes.push_back(inst.sizes[i]);
    }
    return out;
}

/// The set of configurations still consistent with all outcomes seen so far.
/// Members are kept as sorted, duplicate-free codes; posteriors are split and
/// compared constantly, so the dense sorted form doubles as a canonical key.
struct Posterior {
    Instance instance;
    std::vector<Code> members;

    std::size_t size() const { return members.size(); }
    bool contains(Code c) const {
        return std::binary_search(members.begin(), members.end(), c);
    }
};

/// Sizes sorted descending: the canonical key for caches and lookup tables.
inline std::vector<std::uint32_t> normalized_sizes(const Instance& inst) {
    auto s = inst.sizes;
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

inline Posterior full_posterior(const Instance& inst, Code cap = Instance::kDefaultConfigCap) {
    Code total = inst.config_count(cap);
    Posterior p;
    p.instance = inst;
    p.members.resize(total);
    for (Code i = 0; i < total; ++i) p.members[i] = i;
    return p;
}

/// A weighing: two disjoint, equally sized, nonempty pans of coins.
struct Weighing {
    std::vector<CoinId> left;
    std::vector<CoinId> right;

    bool operator==(const Weighing&) const = default;

    std::string to_string() const {
        auto side = [](const std::vector<CoinId>& v) {
            std::string s = "{";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) s += ',';
                s += v[i].to_string();
            }
            return s + "}";
        };
        return side(left) + ":" + side(right);
    }
};

inline void validate_weighing(const Instance& inst, const Weighing& w) {
    if (w.left.empty() || w.left.size() != w.right.size())
        throw ValidationError("weighing " + w.to_string() + ": pans must be nonempty and equal");
    for (const auto& c : w.left) validate_coin(inst, c);
    for (const auto& c : w.right) validate_coin(inst, c);
    std::vector<CoinId> all(w.left);
    all.insert(all.end(), w.right.begin(), w.right.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw ValidationError("weighing " + w.to_string() + ": pans overlap or repeat a coin");
}

/// Balance outcome, from the left pan's point of view.
enum class Outcome : int {
    Plus = 0,  // left heavier
    Zero = 1,  // balanced
    Minus = 2, // right heavier
};

constexpr std::array<Outcome, 3> kOutcomes{Outcome::Plus, Outcome::Zero, Outcome::Minus};

inline char outcome_char(Outcome o) {
    switch (o) {
        case Outcome::Plus: return '+';
        case Outcome::Zero: return '0';
        case Outcome::Minus: return '-';
    }
    return '?';
}

inline Outcome mirror(Outcome o) {
    switch (o) {
        case Outcome::Plus: return Outcome::Minus;
        case Outcome::Minus: return Outcome::Plus;
        default: return Outcome::Zero;
    }
}

/// A word of outcomes along one root-to-node path. Every word begins with the
/// distinguished start symbol (rendered "0"), followed by one outcome per
/// weighing performed.
struct OutcomeWord {
    std::vector<Outcome> outcomes;

    std::size_t weighing_count() const { return outcomes.size(); }

    void push(Outcome o) { outcomes.push_back(o); }

    /// Strict prefix order: a word precedes every proper extension of itself.
    bool strictly_precedes(const OutcomeWord& other) const {
        if (outcomes.size() >= other.outcomes.size()) return false;
        return std::equal(outcomes.begin(), outcomes.end(), other.outcomes.begin());
    }

    std::string to_string() const {
        std::string s = "0";
        for (auto o : outcomes) s += outcome_char(o);
        return s;
    }

    bool operator==(const OutcomeWord&) const = default;
};

/// One node of a strategy tree. Internal nodes hold a weighing and exactly
/// three children (one per outcome). Leaves either decide a configuration or
/// mark a contradiction: an outcome word no configuration can produce.
/// Contradiction leaves are explicit so that serialization and verification
/// never deal with missing children.
struct StrategyNode {
    enum class Kind { Weigh, Decide, Contradiction };

    Kind kind = Kind::Contradiction;
    Weighing weighing;                                  // Kind::Weigh
    std::array<std::unique_ptr<StrategyNode>, 3> child; // Kind::Weigh, indexed by Outcome
    Configuration decided;                              // Kind::Decide

    const StrategyNode& next(Outcome o) const { return *child[static_cast<int>(o)]; }

    bool is_leaf() const { return kind != Kind::Weigh; }

    std::unique_ptr<StrategyNode> clone() const {
        auto n = std::make_unique<StrategyNode>();
        n->kind = kind;
        n->weighing = weighing;
        n->decided = decided;
        if (kind == Kind::Weigh)
            for (int i = 0; i < 3; ++i) n->child[i] = child[i]->clone();
        return n;
    }
};

inline std::unique_ptr<StrategyNode> make_decide(Configuration c) {
    auto n = std::make_unique<StrategyNode>();
    n->kind = StrategyNode::Kind::Decide;
    n->decided = std::move(c);
    return n;
}

inline std::unique_ptr<StrategyNode> make_contradiction() {
    auto n = std::make_unique<StrategyNode>();
    n->kind = StrategyNode::Kind::Contradiction;
    return n;
}

inline std::unique_ptr<StrategyNode> make_weigh(Weighing w,
                                                std::unique_ptr<StrategyNode> plus,
                                                std::unique_ptr<StrategyNode> zero,
                                                std::unique_ptr<StrategyNode> minus) {
    auto n = std::make_unique<StrategyNode>();
    n->kind = StrategyNode::Kind::Weigh;
    n->weighing = std::move(w);
    n->child[0] = std::move(plus);
    n->child[1] = std::move(zero);
    n->child[2] = std::move(minus);
    return n;
}

/// An adaptive weighing strategy: a ternary decision tree over outcome words.
struct Strategy {
    Instance instance;
    std::unique_ptr<StrategyNode> root;

    Strategy() = default;
    Strategy(Instance inst, std::unique_ptr<StrategyNode> r)
        : instance(std::move(inst)), root(std::move(r)) {}

    Strategy(const Strategy& other)
        : instance(other.instance), root(other.root ? other.root->clone() : nullptr) {}
    Strategy& operator=(const Strategy& other) {
        if (this != &other) {
            instance = other.instance;
            root = other.root ? other.root->clone() : nullptr;
        }
        return *this;
    }
    Strategy(Strategy&&) = default;
    Strategy& operator=(Strategy&&) = default;
};

/// Structural validation: coins in range, pans legal, decided configurations
/// well formed, all internal nodes carrying three children.
inline void validate_strategy(const Strategy& s) {
    s.instance.validate();
    if (!s.root) throw ValidationError("strategy has no root node");
    struct Walk {
        const Instance& inst;
        void visit(const StrategyNode& n) {
            switch (n.kind) {
                case StrategyNode::Kind::Weigh:
                    validate_weighing(inst, n.weighing);
                    for (int i = 0; i < 3; ++i) {
                        if (!n.child[i])
                            throw ValidationError("internal node is missing a child");
                        visit(*n.child[i]);
                    }
                    break;
                case StrategyNode::Kind::Decide:
                    validate_config(inst, n.decided);
                    break;
                case StrategyNode::Kind::Contradiction:
                    break;
            }
        }
    };
    Walk{s.instance}.visit(*s.root);
}

} // namespace coins
