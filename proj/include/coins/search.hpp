#pragma once

// Exact optimal-strategy search: depth-budgeted existence search with
// information-theoretic pruning, symmetry-reduced weighing enumeration, and
// a transposition table over canonicalized posteriors, wrapped in iterative
// deepening from the information lower bound.
//
// The companion brute_reference() is an intentionally plain exhaustive search
// used by the tests as independent ground truth; it shares nothing with the
// pruned engine beyond the balance arithmetic.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include "coins/bounds.hpp"
#include "coins/model.hpp"
#include "coins/oracle.hpp"
#include "coins/verify.hpp"

namespace coins {

struct SearchLimits {
    // Zero means unlimited for time_cap and node_cap.
    std::chrono::milliseconds time_cap{0};
    std::uint64_t node_cap = 0;
    std::size_t table_capacity = std::size_t{1} << 22;
    int max_depth = 64;
    unsigned workers = 1;
    // Re-verify every returned strategy before handing it out.
    bool self_check = true;

    void validate() const {
        if (time_cap.count() < 0 || max_depth <= 0 || workers == 0 || table_capacity == 0)
            throw ValidationError("search limits must be positive");
    }
};

struct SearchStats {
    std::uint64_t nodes_expanded = 0;
    std::uint64_t table_hits = 0;
    std::uint64_t weighings_enumerated = 0;
    // Raw weighings represented by a canonical one (equivalence class size - 1).
    std::uint64_t weighings_pruned_symmetry = 0;
    // Canonical weighings discarded because an outcome class exceeds 3^(d-1).
    std::uint64_t weighings_pruned_bound = 0;
    std::chrono::duration<double> elapsed{0};

    void merge(const SearchStats& o) {
        nodes_expanded += o.nodes_expanded;
        table_hits += o.table_hits;
        weighings_enumerated += o.weighings_enumerated;
        weighings_pruned_symmetry += o.weighings_pruned_symmetry;
        weighings_pruned_bound += o.weighings_pruned_bound;
    }
};

enum class SearchStatus {
    Found,         // strategy of the requested depth exists (and is returned)
    ProvenNone,    // search exhausted: no strategy within the budget
    Indeterminate, // a cap fired before the question was settled
};

struct SearchResult {
    SearchStatus status = SearchStatus::Indeterminate;
    std::optional<Strategy> strategy;
    SearchStats stats;
};

struct SolveResult {
    SearchStatus status = SearchStatus::Indeterminate; // Found or Indeterminate
    int depth = -1;                                    // valid when Found
    std::optional<Strategy> strategy;
    SearchStats stats;
    // Bracket on the true optimum: proven_lower always holds; upper_hint is
    // the independent per-set bound (met constructively, not by this search).
    int proven_lower = 0;
    int upper_hint = 0;
};

namespace detail {

inline std::uint64_t pow3_saturated(int e) {
    std::uint64_t v = 1;
    for (int i = 0; i < e; ++i) {
        if (v > std::numeric_limits<std::uint64_t>::max() / 3)
            return std::numeric_limits<std::uint64_t>::max();
        v *= 3;
    }
    return v;
}

// Mixed-radix digit access with precomputed divisors.
struct RadixView {
    const Instance* inst;
    std::vector<Code> divs;

    explicit RadixView(const Instance& i) : inst(&i) {
        divs.resize(i.set_count());
        Code d = 1;
        for (std::size_t k = 0; k < i.set_count(); ++k) {
            divs[k] = d;
            d *= i.sizes[k];
        }
    }
    std::uint32_t digit(Code code, std::size_t set) const {
        return static_cast<std::uint32_t>((code / divs[set]) % inst->sizes[set]);
    }
    std::size_t sets() const { return inst->set_count(); }
};

// ---------------------------------------------------------------------------
// Coin interchangeability classes.
//
// Within one set, coins j and j' are interchangeable for a posterior p iff
// swapping them maps p onto itself, which holds exactly when they have equal
// residual signatures: the sets of members (with the own digit blanked out)
// in which each coin is the fake. Grouping by signature therefore yields the
// orbit classes of the per-set transposition automorphisms. Coins with an
// empty signature are fake in no member; they form the filler pool, padding
// either pan without affecting any outcome.
// ---------------------------------------------------------------------------

struct CoinClass {
    std::uint32_t set = 0;
    std::vector<std::uint32_t> coins; // ascending member indices within the set
};

struct ClassAnalysis {
    std::vector<CoinClass> classes; // ordered by (set, first coin)
    std::vector<CoinId> fillers;    // ascending (set, index)
    std::uint32_t candidate_count = 0;
    // True when the posterior is the full product of its per-set candidate
    // sets; then every set is one class and outcome counts have a closed form.
    bool product_form = false;

    std::uint32_t filler_count() const { return static_cast<std::uint32_t>(fillers.size()); }
};

struct VecHash {
    std::size_t operator()(const std::vector<Code>& v) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (Code c : v) {
            h ^= c;
            h *= 1099511628211ull;
            h ^= h >> 32;
        }
        return static_cast<std::size_t>(h);
    }
};

inline ClassAnalysis analyze_classes(const RadixView& rv, const std::vector<Code>& members) {
    ClassAnalysis out;
    const std::size_t m = rv.sets();

    // Candidate digits per set; product form means every set's candidates are
    // mutually interchangeable and no signature grouping is needed.
    std::vector<std::vector<std::uint32_t>> candidates(m);
    {
        std::vector<std::vector<char>> seen(m);
        for (std::size_t i = 0; i < m; ++i) seen[i].assign(rv.inst->sizes[i], 0);
        for (Code c : members)
            for (std::size_t i = 0; i < m; ++i) seen[i][rv.digit(c, i)] = 1;
        for (std::size_t i = 0; i < m; ++i)
            for (std::uint32_t j = 0; j < rv.inst->sizes[i]; ++j)
                if (seen[i][j]) candidates[i].push_back(j);
    }
    unsigned __int128 prod = 1;
    for (std::size_t i = 0; i < m; ++i) prod *= candidates[i].size();
    const bool product_form = (prod == members.size());
    out.product_form = product_form;

    for (std::size_t i = 0; i < m; ++i) {
        out.candidate_count += static_cast<std::uint32_t>(candidates[i].size());
        if (product_form) {
            CoinClass cc;
            cc.set = static_cast<std::uint32_t>(i);
            cc.coins = candidates[i];
            out.classes.push_back(std::move(cc));
        } else {
            // Group candidates of set i by residual signature, keeping the
            // classes in first-coin order.
            std::vector<std::vector<Code>> residuals(rv.inst->sizes[i]);
            for (Code c : members) {
                std::uint32_t j = rv.digit(c, i);
                residuals[j].push_back(c - Code{j} * rv.divs[i]);
            }
            std::unordered_map<std::vector<Code>, std::size_t, VecHash> slot_of;
            std::vector<CoinClass> local;
            for (std::uint32_t j : candidates[i]) {
                auto [it, fresh] = slot_of.try_emplace(std::move(residuals[j]), local.size());
                if (fresh) {
                    CoinClass cc;
                    cc.set = static_cast<std::uint32_t>(i);
                    local.push_back(std::move(cc));
                }
                local[it->second].coins.push_back(j);
            }
            for (auto& cc : local) out.classes.push_back(std::move(cc));
        }
        for (std::uint32_t j = 0, c = 0; j < rv.inst->sizes[i]; ++j) {
            if (c < candidates[i].size() && candidates[i][c] == j) {
                ++c;
                continue;
            }
            out.fillers.push_back({static_cast<std::uint32_t>(i), j});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical weighing enumeration.
//
// A weighing is described by per-class (left,right) candidate counts plus a
// filler block on at most one pan that equalizes the sizes; which concrete
// coins fill the counts is immaterial up to the class symmetries above. The
// enumeration yields one representative per equivalence class, ordered by
// pan size, then lexicographically by count sequence; mirrored pairs keep
// the lexicographically smaller side on the left.
// ---------------------------------------------------------------------------

struct CountWeighing {
    std::vector<std::array<std::uint32_t, 2>> counts; // per class {left,right}
    std::uint32_t filler_left = 0;
    std::uint32_t filler_right = 0;
    std::uint32_t pan_size = 0;
};

template <typename Emit>
class CountEnumerator {
  public:
    CountEnumerator(const ClassAnalysis& a, Emit& emit) : a_(a), emit_(emit) {
        suffix_.resize(a.classes.size() + 1, 0);
        for (std::size_t k = a.classes.size(); k-- > 0;)
            suffix_[k] = suffix_[k + 1] + static_cast<std::uint32_t>(a.classes[k].coins.size());
        work_.counts.resize(a.classes.size(), {0, 0});
    }

    // Emits all canonical weighings of exactly this pan size. Returns false
    // if the emit callback requested a full stop.
    bool run(std::uint32_t pan_size) {
        s_ = pan_size;
        return recurse(0, 0, 0);
    }

  private:
    bool recurse(std::size_t k, std::uint32_t sumL, std::uint32_t sumR) {
        if (sumL > s_ || sumR > s_) return true;
        std::uint32_t rem = suffix_[k];
        if (sumL + rem < s_ && sumR + rem < s_) return true; // no pan can reach s
        if (k == a_.classes.size()) {
            if (sumL != s_ && sumR != s_) return true; // fillers may pad one pan only
            std::uint32_t fl = s_ - sumL, fr = s_ - sumR;
            if (fl + fr > a_.filler_count()) return true;
            if (sumL + sumR == 0) return true;
            if (!mirror_canonical(fl, fr)) return true;
            work_.filler_left = fl;
            work_.filler_right = fr;
            work_.pan_size = s_;
            return emit_(work_);
        }
        const std::uint32_t sz = static_cast<std::uint32_t>(a_.classes[k].coins.size());
        for (std::uint32_t l = 0; l <= std::min(sz, s_ - sumL); ++l) {
            for (std::uint32_t r = 0; r + l <= sz && r <= s_ - sumR; ++r) {
                work_.counts[k] = {l, r};
                if (!recurse(k + 1, sumL + l, sumR + r)) return false;
            }
        }
        work_.counts[k] = {0, 0};
        return true;
    }

    bool mirror_canonical(std::uint32_t fl, std::uint32_t fr) const {
        for (const auto& c : work_.counts) {
            if (c[0] != c[1]) return c[0] < c[1] ? true : false;
        }
        return fl <= fr;
    }

    const ClassAnalysis& a_;
    Emit& emit_;
    std::vector<std::uint32_t> suffix_;
    CountWeighing work_;
    std::uint32_t s_ = 0;
};

inline Weighing materialize(const ClassAnalysis& a, const CountWeighing& cw) {
    Weighing w;
    for (std::size_t k = 0; k < a.classes.size(); ++k) {
        const auto& cls = a.classes[k];
        auto [l, r] = cw.counts[k];
        for (std::uint32_t i = 0; i < l; ++i) w.left.push_back({cls.set, cls.coins[i]});
        for (std::uint32_t i = 0; i < r; ++i) w.right.push_back({cls.set, cls.coins[l + i]});
    }
    for (std::uint32_t i = 0; i < cw.filler_left; ++i) w.left.push_back(a.fillers[i]);
    for (std::uint32_t i = 0; i < cw.filler_right; ++i) w.right.push_back(a.fillers[i]);
    return w;
}

// Number of raw (ordered) weighings the canonical representative stands for.
inline std::uint64_t equivalence_class_size(const ClassAnalysis& a, const CountWeighing& cw) {
    auto sat_mul = [](std::uint64_t x, std::uint64_t y) {
        if (y != 0 && x > std::numeric_limits<std::uint64_t>::max() / y)
            return std::numeric_limits<std::uint64_t>::max();
        return x * y;
    };
    auto choose = [&](std::uint64_t n, std::uint64_t k) {
        if (k > n) return std::uint64_t{0};
        k = std::min(k, n - k);
        std::uint64_t num = 1;
        for (std::uint64_t i = 0; i < k; ++i) {
            num = sat_mul(num, n - i);
            num /= (i + 1); // floor is exact for running binomials
        }
        return num;
    };
    std::uint64_t total = 1;
    bool self_mirror = true;
    for (std::size_t k = 0; k < a.classes.size(); ++k) {
        auto [l, r] = cw.counts[k];
        std::uint64_t sz = a.classes[k].coins.size();
        total = sat_mul(total, choose(sz, l));
        total = sat_mul(total, choose(sz - l, r));
        if (l != r) self_mirror = false;
    }
    std::uint64_t f = a.filler_count();
    total = sat_mul(total, choose(f, cw.filler_left + cw.filler_right));
    if (cw.filler_left != cw.filler_right) self_mirror = false;
    if (!self_mirror) total = sat_mul(total, 2);
    return total;
}

// ---------------------------------------------------------------------------
// Posterior canonicalization for the transposition table.
//
// Coins are renumbered per set by first occurrence in the sorted member list
// (candidates first, untouched coins after, in ascending order); the member
// codes are then re-encoded and sorted. Posteriors that differ only by a
// per-set relabeling of coins collapse to one key, and the recorded
// permutation translates a stored subtree back into concrete coins.
// ---------------------------------------------------------------------------

struct Canonical {
    std::vector<Code> members;
    std::vector<std::vector<std::uint32_t>> to_canon;   // per set: original -> canonical
    std::vector<std::vector<std::uint32_t>> from_canon; // inverse
};

inline Canonical canonicalize(const RadixView& rv, const std::vector<Code>& members) {
    const std::size_t m = rv.sets();
    Canonical out;
    out.to_canon.resize(m);
    std::vector<std::uint32_t> next(m, 0);
    constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t i = 0; i < m; ++i) out.to_canon[i].assign(rv.inst->sizes[i], kUnset);
    for (Code c : members)
        for (std::size_t i = 0; i < m; ++i) {
            std::uint32_t j = rv.digit(c, i);
            if (out.to_canon[i][j] == kUnset) out.to_canon[i][j] = next[i]++;
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < rv.inst->sizes[i]; ++j)
            if (out.to_canon[i][j] == kUnset) out.to_canon[i][j] = next[i]++;

    out.from_canon.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.from_canon[i].resize(rv.inst->sizes[i]);
        for (std::uint32_t j = 0; j < rv.inst->sizes[i]; ++j)
            out.from_canon[i][out.to_canon[i][j]] = j;
    }

    out.members.reserve(members.size());
    for (Code c : members) {
        Code canon = 0;
        for (std::size_t i = 0; i < m; ++i)
            canon += Code{out.to_canon[i][rv.digit(c, i)]} * rv.divs[i];
        out.members.push_back(canon);
    }
    std::sort(out.members.begin(), out.members.end());
    return out;
}

inline std::unique_ptr<StrategyNode> relabel_tree(const StrategyNode& n,
                                                  const std::vector<std::vector<std::uint32_t>>& map) {
    auto out = std::make_unique<StrategyNode>();
    out->kind = n.kind;
    switch (n.kind) {
        case StrategyNode::Kind::Decide: {
            out->decided = n.decided;
            for (std::size_t i = 0; i < out->decided.fakes.size(); ++i)
                out->decided.fakes[i] = map[i][out->decided.fakes[i]];
            break;
        }
        case StrategyNode::Kind::Contradiction:
            break;
        case StrategyNode::Kind::Weigh: {
            out->weighing = n.weighing;
            for (auto& c : out->weighing.left) c.index = map[c.set][c.index];
            for (auto& c : out->weighing.right) c.index = map[c.set][c.index];
            for (int i = 0; i < 3; ++i) out->child[i] = relabel_tree(*n.child[i], map);
            break;
        }
    }
    return out;
}

class TranspositionTable {
  public:
    explicit TranspositionTable(std::size_t capacity) : capacity_(capacity) {}

    struct Probe {
        enum class Kind { Miss, Found, None } kind = Kind::Miss;
        std::shared_ptr<const StrategyNode> tree; // canonical coin space
    };

    Probe probe(const std::vector<Code>& key, int budget) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(key);
        if (it == map_.end()) return {};
        const Entry& e = it->second;
        if (budget <= e.max_none_budget) return {Probe::Kind::None, nullptr};
        if (budget >= e.min_found_budget) return {Probe::Kind::Found, e.tree};
        return {};
    }

    void record_none(const std::vector<Code>& key, int budget) {
        std::lock_guard<std::mutex> lock(mu_);
        Entry* e = fetch(key);
        if (e) e->max_none_budget = std::max(e->max_none_budget, budget);
    }

    void record_found(const std::vector<Code>& key, int budget,
                      std::shared_ptr<const StrategyNode> tree) {
        std::lock_guard<std::mutex> lock(mu_);
        Entry* e = fetch(key);
        if (e && budget < e->min_found_budget) {
            e->min_found_budget = budget;
            e->tree = std::move(tree);
        }
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }

  private:
    struct Entry {
        int max_none_budget = -1;
        int min_found_budget = std::numeric_limits<int>::max();
        std::shared_ptr<const StrategyNode> tree;
    };

    Entry* fetch(const std::vector<Code>& key) {
        auto it = map_.find(key);
        if (it != map_.end()) return &it->second;
        if (map_.size() >= capacity_) return nullptr; // full: skip new entries
        return &map_[key];
    }

    mutable std::mutex mu_;
    std::unordered_map<std::vector<Code>, Entry, VecHash> map_;
    std::size_t capacity_;
};

// ---------------------------------------------------------------------------
// The budgeted existence search.
// ---------------------------------------------------------------------------

enum class NodeStatus { Found, None, Unknown };

struct NodeResult {
    NodeStatus status = NodeStatus::Unknown;
    std::unique_ptr<StrategyNode> tree;
};

struct SearchContext {
    const Instance& inst;
    RadixView radix;
    SearchLimits limits;
    TranspositionTable table;
    std::chrono::steady_clock::time_point start;
    std::chrono::steady_clock::time_point deadline{};
    bool has_deadline = false;
    std::atomic<std::uint64_t> nodes{0};
    std::atomic<bool> stop{false};   // a worker found a full solution
    std::atomic<bool> capped{false}; // a node/time cap fired

    explicit SearchContext(const Instance& i, const SearchLimits& lim)
        : inst(i), radix(i), limits(lim), table(lim.table_capacity),
          start(std::chrono::steady_clock::now()) {
        if (limits.time_cap.count() > 0) {
            deadline = start + limits.time_cap;
            has_deadline = true;
        }
    }

    bool over_caps() {
        if (limits.node_cap && nodes.load(std::memory_order_relaxed) >= limits.node_cap) {
            capped.store(true);
            return true;
        }
        if (has_deadline && std::chrono::steady_clock::now() >= deadline) {
            capped.store(true);
            return true;
        }
        return false;
    }
};

struct WorkerState {
    SearchStats stats;
    std::vector<std::vector<std::int8_t>> mask; // per-set pan marks, reused

    explicit WorkerState(const Instance& inst) {
        mask.resize(inst.set_count());
        for (std::size_t i = 0; i < inst.set_count(); ++i) mask[i].assign(inst.sizes[i], 0);
    }
};

inline NodeResult search_node(SearchContext& ctx, WorkerState& ws,
                              const std::vector<Code>& members, int budget);

// Pan marks for a count-weighing. Fillers are fake in no member, so only
// candidate marks matter for the outcome; `touched` collects the sets whose
// masks are live. Classes arrive grouped by set, so the last-entry dedup is
// enough.
inline void mark_weighing(WorkerState& ws, const ClassAnalysis& a, const CountWeighing& cw,
                          std::vector<std::uint32_t>& touched) {
    touched.clear();
    for (std::size_t k = 0; k < a.classes.size(); ++k) {
        auto [l, r] = cw.counts[k];
        if (l + r == 0) continue;
        const auto& cls = a.classes[k];
        for (std::uint32_t i = 0; i < l; ++i) ws.mask[cls.set][cls.coins[i]] = +1;
        for (std::uint32_t i = 0; i < r; ++i) ws.mask[cls.set][cls.coins[l + i]] = -1;
        if (touched.empty() || touched.back() != cls.set) touched.push_back(cls.set);
    }
}

inline void unmark_weighing(WorkerState& ws, const ClassAnalysis& a, const CountWeighing& cw) {
    for (std::size_t k = 0; k < a.classes.size(); ++k) {
        auto [l, r] = cw.counts[k];
        if (l + r == 0) continue;
        const auto& cls = a.classes[k];
        for (std::uint32_t i = 0; i < l + r; ++i) ws.mask[cls.set][cls.coins[i]] = 0;
    }
}

// Counting pass: outcome class sizes only, no allocation. Most weighings die
// on the counting prune, so the split is materialized separately afterwards.
inline std::array<std::size_t, 3> count_outcomes(const RadixView& rv, const WorkerState& ws,
                                                 const std::vector<std::uint32_t>& touched,
                                                 const std::vector<Code>& members) {
    std::array<std::size_t, 3> counts{0, 0, 0};
    for (Code c : members) {
        int bal = 0;
        for (std::uint32_t s : touched) bal += ws.mask[s][rv.digit(c, s)];
        counts[static_cast<int>(sign_outcome(bal))]++;
    }
    return counts;
}

// Closed-form outcome counts for product-form posteriors: each set
// contributes +1/0/-1 independently with weights (left count, untouched,
// right count), so the balance distribution is a short convolution. Exact,
// and orders of magnitude cheaper than scanning a large posterior.
inline std::array<std::size_t, 3> count_outcomes_product(const ClassAnalysis& a,
                                                         const CountWeighing& cw) {
    const std::size_t k = a.classes.size();
    // dist[b + k] = number of configurations with balance b so far.
    std::vector<std::uint64_t> dist(2 * k + 1, 0), next(2 * k + 1, 0);
    dist[k] = 1;
    for (std::size_t i = 0; i < k; ++i) {
        auto [l, r] = cw.counts[i];
        std::uint64_t zero = a.classes[i].coins.size() - l - r;
        std::fill(next.begin(), next.end(), 0);
        for (std::size_t b = 0; b <= 2 * k; ++b) {
            if (!dist[b]) continue;
            next[b] += dist[b] * zero;
            if (b + 1 <= 2 * k) next[b + 1] += dist[b] * l;
            if (b >= 1) next[b - 1] += dist[b] * r;
        }
        dist.swap(next);
    }
    std::array<std::size_t, 3> counts{0, 0, 0};
    for (std::size_t b = 0; b <= 2 * k; ++b) {
        if (b > k)
            counts[0] += dist[b];
        else if (b == k)
            counts[1] += dist[b];
        else
            counts[2] += dist[b];
    }
    return counts;
}

inline void materialize_split(const RadixView& rv, const WorkerState& ws,
                              const std::vector<std::uint32_t>& touched,
                              const std::vector<Code>& members,
                              const std::array<std::size_t, 3>& counts,
                              std::array<std::vector<Code>, 3>& out) {
    for (int i = 0; i < 3; ++i) {
        out[i].clear();
        out[i].reserve(counts[i]);
    }
    for (Code c : members) {
        int bal = 0;
        for (std::uint32_t s : touched) bal += ws.mask[s][rv.digit(c, s)];
        out[static_cast<int>(sign_outcome(bal))].push_back(c);
    }
}

struct WeighingAttempt {
    enum class Kind { Fail, FailUnknown, Success } kind = Kind::Fail;
    std::unique_ptr<StrategyNode> tree;
};

inline WeighingAttempt try_weighing(SearchContext& ctx, WorkerState& ws, const ClassAnalysis& a,
                                    const CountWeighing& cw, const std::vector<Code>& members,
                                    int budget) {
    WeighingAttempt out;
    ws.stats.weighings_enumerated++;
    ws.stats.weighings_pruned_symmetry += equivalence_class_size(a, cw) - 1;

    const std::uint64_t child_cap = pow3_saturated(budget - 1);
    std::array<std::size_t, 3> counts;
    std::vector<std::uint32_t> touched;
    bool marked = false;
    if (a.product_form) {
        counts = count_outcomes_product(a, cw);
    } else {
        mark_weighing(ws, a, cw, touched);
        marked = true;
        counts = count_outcomes(ctx.radix, ws, touched, members);
    }

    for (std::size_t n : counts) {
        if (n == members.size()) { // no information
            if (marked) unmark_weighing(ws, a, cw);
            return out;
        }
        if (n > child_cap) {
            ws.stats.weighings_pruned_bound++;
            if (marked) unmark_weighing(ws, a, cw);
            return out;
        }
    }

    if (!marked) mark_weighing(ws, a, cw, touched);
    std::array<std::vector<Code>, 3> split;
    materialize_split(ctx.radix, ws, touched, members, counts, split);
    unmark_weighing(ws, a, cw);

    // Largest class first: it is the most likely to be infeasible.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return split[x].size() > split[y].size(); });

    std::array<std::unique_ptr<StrategyNode>, 3> kids;
    for (int idx : order) {
        auto& cls = split[idx];
        if (cls.empty()) {
            kids[idx] = make_contradiction();
            continue;
        }
        NodeResult r = search_node(ctx, ws, cls, budget - 1);
        if (r.status == NodeStatus::Found) {
            kids[idx] = std::move(r.tree);
            continue;
        }
        out.kind = r.status == NodeStatus::None ? WeighingAttempt::Kind::Fail
                                                : WeighingAttempt::Kind::FailUnknown;
        return out;
    }
    out.kind = WeighingAttempt::Kind::Success;
    out.tree = make_weigh(materialize(a, cw), std::move(kids[0]), std::move(kids[1]),
                          std::move(kids[2]));
    return out;
}

inline NodeResult search_node(SearchContext& ctx, WorkerState& ws,
                              const std::vector<Code>& members, int budget) {
    NodeResult res;
    if (ctx.stop.load(std::memory_order_relaxed)) return res; // cancelled -> Unknown
    if (members.size() <= 1) {
        if (members.empty()) throw std::logic_error("search: empty posterior node");
        res.status = NodeStatus::Found;
        res.tree = make_decide(decode_config(ctx.inst, members[0]));
        return res;
    }
    if (budget <= 0 || pow3_saturated(budget) < members.size()) {
        res.status = NodeStatus::None;
        return res;
    }

    Canonical canon = canonicalize(ctx.radix, members);
    auto hit = ctx.table.probe(canon.members, budget);
    if (hit.kind == TranspositionTable::Probe::Kind::None) {
        ws.stats.table_hits++;
        res.status = NodeStatus::None;
        return res;
    }
    if (hit.kind == TranspositionTable::Probe::Kind::Found) {
        ws.stats.table_hits++;
        res.status = NodeStatus::Found;
        res.tree = relabel_tree(*hit.tree, canon.from_canon);
        return res;
    }

    if (ctx.over_caps()) return res; // Unknown
    ctx.nodes.fetch_add(1, std::memory_order_relaxed);
    ws.stats.nodes_expanded++;

    ClassAnalysis analysis = analyze_classes(ctx.radix, members);
    bool any_unknown = false;

    // Leaf-heavy nodes can enumerate forever without expanding children, so
    // the caps are re-checked during enumeration; the larger the posterior,
    // the more a single attempt costs and the more often we look.
    const std::uint64_t check_mask =
        members.size() >= 65536 ? 0 : (members.size() >= 1024 ? 63 : 4095);
    auto emit = [&](const CountWeighing& cw) -> bool {
        if (ctx.stop.load(std::memory_order_relaxed)) {
            any_unknown = true;
            return false;
        }
        if ((ws.stats.weighings_enumerated & check_mask) == 0 && ctx.over_caps()) {
            any_unknown = true;
            return false;
        }
        WeighingAttempt att = try_weighing(ctx, ws, analysis, cw, members, budget);
        if (att.kind == WeighingAttempt::Kind::Success) {
            res.status = NodeStatus::Found;
            res.tree = std::move(att.tree);
            return false;
        }
        if (att.kind == WeighingAttempt::Kind::FailUnknown) {
            any_unknown = true;
            if (ctx.capped.load(std::memory_order_relaxed)) return false; // give up entirely
        }
        return true;
    };
    CountEnumerator<decltype(emit)> enumerator(analysis, emit);
    std::uint32_t s_hi = std::min(ctx.inst.total_coins() / 2,
                                  analysis.candidate_count + analysis.filler_count());
    for (std::uint32_t s = 1; s <= s_hi; ++s)
        if (!enumerator.run(s)) break;

    if (res.status == NodeStatus::Found) {
        ctx.table.record_found(canon.members, budget,
                               relabel_tree(*res.tree, canon.to_canon));
        return res;
    }
    if (any_unknown || ctx.stop.load(std::memory_order_relaxed)) return res; // Unknown
    res.status = NodeStatus::None;
    ctx.table.record_none(canon.members, budget);
    return res;
}

// Root search with optional parallelism: workers claim whole pan sizes. The
// single-worker path never spawns a thread and is bitwise deterministic.
inline NodeResult search_root(SearchContext& ctx, const std::vector<Code>& members, int budget,
                              SearchStats& stats_out) {
    if (ctx.limits.workers <= 1 || members.size() <= 1) {
        WorkerState ws(ctx.inst);
        NodeResult r = search_node(ctx, ws, members, budget);
        stats_out.merge(ws.stats);
        return r;
    }

    // Terminal and table checks once, then distribute pan sizes.
    {
        WorkerState probe_ws(ctx.inst);
        if (members.size() <= 1 || budget <= 0 ||
            pow3_saturated(budget) < members.size()) {
            NodeResult r = search_node(ctx, probe_ws, members, budget);
            stats_out.merge(probe_ws.stats);
            return r;
        }
    }

    ClassAnalysis analysis = analyze_classes(ctx.radix, members);
    std::uint32_t s_hi = std::min(ctx.inst.total_coins() / 2,
                                  analysis.candidate_count + analysis.filler_count());
    std::atomic<std::uint32_t> next_s{1};
    std::mutex result_mu;
    NodeResult final_res;
    bool found = false;
    bool saw_unknown = false;
    std::exception_ptr first_error;

    const std::uint64_t check_mask =
        members.size() >= 65536 ? 0 : (members.size() >= 1024 ? 63 : 4095);
    auto worker_body = [&](WorkerState& ws, bool& local_unknown) {
        for (;;) {
            std::uint32_t s = next_s.fetch_add(1);
            if (s > s_hi || ctx.stop.load(std::memory_order_relaxed)) break;
            NodeResult local;
            auto emit = [&](const CountWeighing& cw) -> bool {
                if (ctx.stop.load(std::memory_order_relaxed)) {
                    local_unknown = true;
                    return false;
                }
                if ((ws.stats.weighings_enumerated & check_mask) == 0 && ctx.over_caps()) {
                    local_unknown = true;
                    return false;
                }
                WeighingAttempt att = try_weighing(ctx, ws, analysis, cw, members, budget);
                if (att.kind == WeighingAttempt::Kind::Success) {
                    local.status = NodeStatus::Found;
                    local.tree = std::move(att.tree);
                    return false;
                }
                if (att.kind == WeighingAttempt::Kind::FailUnknown) {
                    local_unknown = true;
                    if (ctx.capped.load(std::memory_order_relaxed)) return false;
                }
                return true;
            };
            CountEnumerator<decltype(emit)> enumerator(analysis, emit);
            enumerator.run(s);
            if (local.status == NodeStatus::Found) {
                std::lock_guard<std::mutex> lock(result_mu);
                if (!found) {
                    found = true;
                    final_res.status = NodeStatus::Found;
                    final_res.tree = std::move(local.tree);
                }
                ctx.stop.store(true);
                break;
            }
            if (ctx.capped.load(std::memory_order_relaxed)) break;
        }
    };
    auto worker = [&]() {
        WorkerState ws(ctx.inst);
        bool local_unknown = false;
        try {
            worker_body(ws, local_unknown);
        } catch (...) {
            std::lock_guard<std::mutex> lock(result_mu);
            if (!first_error) first_error = std::current_exception();
            ctx.stop.store(true); // wind the others down
        }
        std::lock_guard<std::mutex> lock(result_mu);
        saw_unknown = saw_unknown || local_unknown;
        stats_out.merge(ws.stats);
    };

    std::vector<std::thread> pool;
    for (unsigned i = 0; i < ctx.limits.workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (first_error) std::rethrow_exception(first_error);
    if (found) return final_res;
    NodeResult r;
    if (saw_unknown || ctx.capped.load()) return r; // Unknown
    r.status = NodeStatus::None;
    return r;
}

} // namespace detail

/// Searches for a strategy of depth <= budget that is complete on `p`.
/// Returns Found with the strategy, ProvenNone when the exhaustive search
/// ruled one out, or Indeterminate when a cap fired first; a capped run is
/// never reported as an impossibility proof.
inline SearchResult exists_strategy(const Posterior& p, int budget,
                                    const SearchLimits& limits = {}) {
    limits.validate();
    p.instance.validate();
    if (p.members.empty()) throw ValidationError("exists_strategy: empty posterior");
    if (budget < 0) throw ValidationError("exists_strategy: negative budget");
    Code total = p.instance.config_count();
    for (std::size_t i = 0; i < p.members.size(); ++i) {
        if (p.members[i] >= total || (i > 0 && p.members[i] <= p.members[i - 1]))
            throw ValidationError("exists_strategy: posterior must be sorted, unique, in range");
    }

    detail::SearchContext ctx(p.instance, limits);
    SearchResult out;
    detail::NodeResult r = detail::search_root(ctx, p.members, budget, out.stats);
    out.stats.elapsed = std::chrono::steady_clock::now() - ctx.start;
    switch (r.status) {
        case detail::NodeStatus::Found: {
            out.status = SearchStatus::Found;
            out.strategy = Strategy(p.instance, std::move(r.tree));
            if (limits.self_check) {
                auto report = verify_posterior(p, *out.strategy);
                if (!report.complete)
                    throw std::logic_error("search returned a strategy that fails verification");
            }
            break;
        }
        case detail::NodeStatus::None:
            out.status = SearchStatus::ProvenNone;
            break;
        case detail::NodeStatus::Unknown:
            out.status = SearchStatus::Indeterminate;
            break;
    }
    return out;
}

/// Exact minimum weighing count by iterative deepening from the information
/// lower bound. Indeterminate results carry the proven bracket instead of a
/// guess.
inline SolveResult solve_exact(const Instance& inst, const SearchLimits& limits = {}) {
    limits.validate();
    inst.validate();
    SolveResult out;
    out.proven_lower = info_lower(inst);
    out.upper_hint = independent_upper(inst);

    Posterior full = full_posterior(inst);
    detail::SearchContext ctx(inst, limits);
    auto started = std::chrono::steady_clock::now();

    for (int budget = out.proven_lower; budget <= limits.max_depth; ++budget) {
        detail::NodeResult r = detail::search_root(ctx, full.members, budget, out.stats);
        if (r.status == detail::NodeStatus::Found) {
            out.status = SearchStatus::Found;
            out.depth = budget;
            out.strategy = Strategy(inst, std::move(r.tree));
            out.stats.elapsed = std::chrono::steady_clock::now() - started;
            if (limits.self_check) {
                auto report = verify_posterior(full, *out.strategy);
                if (!report.complete || report.depth > budget)
                    throw std::logic_error("search returned a strategy that fails verification");
            }
            return out;
        }
        if (r.status == detail::NodeStatus::Unknown) break;
        // ProvenNone: the optimum is strictly above this budget.
        out.proven_lower = budget + 1;
        if (budget >= out.upper_hint)
            throw std::logic_error("search disproved a budget above the per-set upper bound");
    }
    out.status = SearchStatus::Indeterminate;
    out.stats.elapsed = std::chrono::steady_clock::now() - started;
    return out;
}

/// One canonical representative per equivalence class of weighings of `p`,
/// smaller pans first. Weighings that cannot split `p` at all are dropped.
inline std::vector<Weighing> enumerate_weighings(const Posterior& p) {
    p.instance.validate();
    if (p.members.size() < 2)
        throw ValidationError("enumerate_weighings: posterior needs at least 2 members");
    detail::RadixView rv(p.instance);
    detail::ClassAnalysis analysis = detail::analyze_classes(rv, p.members);
    detail::WorkerState ws(p.instance);

    std::vector<Weighing> out;
    auto emit = [&](const detail::CountWeighing& cw) -> bool {
        std::vector<std::uint32_t> touched;
        detail::mark_weighing(ws, analysis, cw, touched);
        auto counts = detail::count_outcomes(rv, ws, touched, p.members);
        detail::unmark_weighing(ws, analysis, cw);
        for (std::size_t n : counts)
            if (n == p.members.size()) return true; // uninformative
        out.push_back(detail::materialize(analysis, cw));
        return true;
    };
    detail::CountEnumerator<decltype(emit)> enumerator(analysis, emit);
    std::uint32_t s_hi = std::min(p.instance.total_coins() / 2,
                                  analysis.candidate_count + analysis.filler_count());
    for (std::uint32_t s = 1; s <= s_hi; ++s) enumerator.run(s);
    return out;
}

/// Ground-truth reference: plain exhaustive search over every raw weighing,
/// no symmetry reduction, no information prune, no memoization. Only fit for
/// tiny instances; the tests use it as the independent oracle for the tuned
/// engine.
inline int brute_reference(const Instance& inst, int max_depth) {
    inst.validate();
    if (inst.config_count() > 100)
        throw ValidationError("brute_reference: instance too large (cap 100 configurations)");
    if (max_depth > 4 || max_depth < 0)
        throw ValidationError("brute_reference: max_depth must be within 0..4");

    std::vector<CoinId> coins;
    for (std::uint32_t s = 0; s < inst.set_count(); ++s)
        for (std::uint32_t j = 0; j < inst.sizes[s]; ++j) coins.push_back({s, j});

    // All unordered pairs of disjoint equal-size pans.
    std::vector<Weighing> all;
    const std::size_t n = coins.size();
    std::vector<std::uint32_t> lsel, rsel;
    auto pick_right = [&](auto&& self, std::size_t start, std::size_t need,
                          const std::vector<char>& used) -> void {
        if (need == 0) {
            if (rsel < lsel) return; // unordered: keep one of the two mirrors
            Weighing w;
            for (auto i : lsel) w.left.push_back(coins[i]);
            for (auto i : rsel) w.right.push_back(coins[i]);
            all.push_back(std::move(w));
            return;
        }
        for (std::size_t i = start; i + need <= n; ++i) {
            if (used[i]) continue;
            rsel.push_back(static_cast<std::uint32_t>(i));
            self(self, i + 1, need - 1, used);
            rsel.pop_back();
        }
    };
    auto pick_left = [&](auto&& self, std::size_t start, std::size_t need, std::vector<char>& used,
                         std::size_t pan) -> void {
        if (need == 0) {
            pick_right(pick_right, 0, pan, used);
            return;
        }
        for (std::size_t i = start; i + need <= n; ++i) {
            lsel.push_back(static_cast<std::uint32_t>(i));
            used[i] = 1;
            self(self, i + 1, need - 1, used, pan);
            used[i] = 0;
            lsel.pop_back();
        }
    };
    for (std::size_t pan = 1; 2 * pan <= n; ++pan) {
        std::vector<char> used(n, 0);
        pick_left(pick_left, 0, pan, used, pan);
    }

    detail::RadixView rv(inst);
    auto outcome_of = [&](Code code, const Weighing& w) {
        int bal = 0;
        for (const auto& c : w.left)
            if (rv.digit(code, c.set) == c.index) ++bal;
        for (const auto& c : w.right)
            if (rv.digit(code, c.set) == c.index) --bal;
        return static_cast<int>(detail::sign_outcome(bal));
    };

    auto feasible = [&](auto&& self, const std::vector<Code>& members, int d) -> bool {
        if (members.size() <= 1) return true;
        if (d == 0) return false;
        if (d == 1) {
            // A single weighing works iff it isolates every member.
            for (const auto& w : all) {
                std::array<int, 3> cnt{0, 0, 0};
                bool ok = true;
                for (Code c : members) {
                    if (++cnt[outcome_of(c, w)] > 1) {
                        ok = false;
                        break;
                    }
                }
                if (ok) return true;
            }
            return false;
        }
        for (const auto& w : all) {
            std::array<std::vector<Code>, 3> split;
            for (Code c : members) split[outcome_of(c, w)].push_back(c);
            bool informative = true;
            for (const auto& cls : split)
                if (cls.size() == members.size()) informative = false;
            if (!informative) continue;
            std::array<int, 3> order{0, 1, 2};
            std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
                return split[x].size() > split[y].size();
            });
            bool ok = true;
            for (int idx : order)
                if (!self(self, split[idx], d - 1)) {
                    ok = false;
                    break;
                }
            if (ok) return true;
        }
        return false;
    };

    std::vector<Code> members(full_posterior(inst).members);
    for (int d = 0; d <= max_depth; ++d)
        if (feasible(feasible, members, d)) return d;
    throw Error("brute_reference: no strategy within max_depth=" + std::to_string(max_depth));
}

} // namespace coins
