#pragma once

// Closed-form lower/upper bounds on the optimal weighing count, plus the
// table of known exact values for specific instances.
//
// All unprimed bounds are computed with exact integer arithmetic (products
// compared against powers of 3); ceil(log3) done in floating point is the
// classic off-by-one trap here.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "coins/model.hpp"

namespace coins {

namespace detail {

// Smallest integer k with 3^k >= num/den. May be negative (num < den).
inline int ceil_log3_u128(unsigned __int128 num, unsigned __int128 den) {
    if (num == 0 || den == 0) throw ValidationError("ceil_log3: arguments must be >= 1");
    if (num > den) {
        int k = 0;
        unsigned __int128 p = den;
        while (p < num) {
            p *= 3;
            ++k;
        }
        return k;
    }
    // num <= den: largest j >= 0 with num * 3^j <= den, answer is -j.
    int j = 0;
    unsigned __int128 p = num * 3;
    while (p <= den) {
        p *= 3;
        ++j;
    }
    return -j;
}

inline unsigned __int128 uniform_product(std::uint64_t n, unsigned m) {
    unsigned __int128 prod = 1;
    for (unsigned i = 0; i < m; ++i) prod *= n;
    return prod;
}

} // namespace detail

/// Ceiling of log3(num/den), exact. The result can be zero or negative when
/// num <= den; callers that need a bound clamp the total, not the term.
inline int ceil_log3(std::uint64_t num, std::uint64_t den = 1) {
    return detail::ceil_log3_u128(num, den);
}

/// Exact optimum for a single set of n coins with one heavier fake.
inline int single_set_exact(std::uint64_t n) {
    if (n == 0) throw ValidationError("set size must be >= 1");
    return ceil_log3(n);
}

/// Information-theoretic lower bound: ceil(log3 of the configuration count).
/// Each weighing has three outcomes, so k weighings separate at most 3^k
/// configurations.
inline int info_lower(const Instance& inst) {
    return ceil_log3(inst.config_count());
}

/// Same bound for the uniform instance of m sets of n coins, usable beyond
/// the in-memory configuration cap (the product only needs comparing against
/// powers of 3, not materializing).
inline int info_lower_uniform(std::uint64_t n, unsigned m) {
    if (n == 0) throw ValidationError("set size must be >= 1");
    return detail::ceil_log3_u128(detail::uniform_product(n, m), 1);
}

/// Upper bound from solving every set independently.
inline int independent_upper(const Instance& inst) {
    inst.validate();
    int total = 0;
    for (auto n : inst.sizes) total += single_set_exact(n);
    return total;
}

namespace detail {

struct ReductionFormula {
    std::vector<std::uint32_t> divisors;
    int constant;
};

// Divisors and additive constants of the per-m reduction bounds for uniform
// instances. Each term ceil(log3(n/d)) drops by one per ternary round.
inline const ReductionFormula& reduction_formula(unsigned m) {
    static const std::map<unsigned, ReductionFormula> table = {
        {2, {{5}, 1}},
        {3, {{4, 6}, 2}},
        {4, {{5, 11, 20}, 5}},
        {5, {{7, 11, 13, 17}, 7}},
    };
    auto it = table.find(m);
    if (it == table.end())
        throw ValidationError("reduction bound is only defined for m in 2..5, got m=" +
                              std::to_string(m));
    return it->second;
}

} // namespace detail

/// Raw value of the ternary-reduction upper bound for the uniform instance
/// of m sets of n coins: ceil(log3 n) + sum of ceil(log3(n/d)) + constant.
/// Terms with n < d keep their true (possibly negative) ceiling.
inline int reduction_upper_raw(std::uint64_t n, unsigned m) {
    if (n == 0) throw ValidationError("set size must be >= 1");
    const auto& f = detail::reduction_formula(m);
    int total = ceil_log3(n) + f.constant;
    for (auto d : f.divisors) total += ceil_log3(n, d);
    return total;
}

/// Reduction upper bound with the total floored at the information lower
/// bound; the formulas are only meaningful from the base sizes up, and the
/// floor keeps small-n output usable as a bound.
inline int reduction_upper(std::uint64_t n, unsigned m) {
    int raw = reduction_upper_raw(n, m);
    int lower = detail::ceil_log3_u128(detail::uniform_product(n, m), 1);
    return std::max(raw, lower);
}

struct ClosedFormBound {
    int value;
    // The additive constants carry three decimals, so values within 1e-9 of
    // an integer are genuinely ambiguous; flagged instead of silently rounded.
    bool ambiguous;
};

/// Single-ceiling form of the reduction bound: ceil(m*log3(n) + c_m),
/// evaluated in extended precision.
inline ClosedFormBound closed_form_upper(std::uint64_t n, unsigned m) {
    if (n == 0) throw ValidationError("set size must be >= 1");
    static const std::map<unsigned, long double> constants = {
        {2, 0.071L}, {3, 0.218L}, {4, 0.274L}, {5, 0.325L}};
    auto it = constants.find(m);
    if (it == constants.end())
        throw ValidationError("closed-form bound is only defined for m in 2..5, got m=" +
                              std::to_string(m));
    long double x =
        static_cast<long double>(m) * std::log(static_cast<long double>(n)) / std::log(3.0L) +
        it->second;
    bool ambiguous = std::fabs(x - std::round(x)) < 1e-9L;
    return {static_cast<int>(std::ceil(x)), ambiguous};
}

/// Known exact values. Keys are normalized size lists (sorted descending).
inline const std::map<std::vector<std::uint32_t>, int>& known_exact_table() {
    static const std::map<std::vector<std::uint32_t>, int> table = {
        {{2, 2, 2}, 2},
        {{4, 2}, 2},
        {{20, 4}, 4},
        {{5, 5}, 3},
        {{16, 5}, 4},
        {{11, 11, 11, 11}, 9},
        {{7, 7, 7, 7, 7}, 9},
        {{11, 11, 11, 11, 11}, 11},
        {{13, 13, 13, 13, 13}, 12},
        {{17, 17, 17, 17, 17}, 13},
        {{4, 4, 4}, 4},
        {{20, 20, 20, 20}, 11},
    };
    return table;
}

inline std::optional<int> known_exact(const Instance& inst) {
    const auto& table = known_exact_table();
    auto it = table.find(normalized_sizes(inst));
    if (it == table.end()) return std::nullopt;
    return it->second;
}

/// All bound values for one instance. The reduction/closed-form columns are
/// only present for uniform instances with 2 <= m <= 5.
struct BoundReport {
    Instance instance;
    Code configs = 0;
    int info_lower = 0;
    int independent_upper = 0;
    std::optional<int> reduction_upper;
    std::optional<int> reduction_upper_raw;
    std::optional<int> closed_form;
    bool closed_form_ambiguous = false;
    std::optional<int> known_exact;
};

inline bool is_uniform(const Instance& inst) {
    for (auto n : inst.sizes)
        if (n != inst.sizes[0]) return false;
    return !inst.sizes.empty();
}

inline BoundReport compute_bounds(const Instance& inst) {
    inst.validate();
    BoundReport r;
    r.instance = inst;
    r.configs = inst.config_count();
    r.info_lower = info_lower(inst);
    r.independent_upper = independent_upper(inst);
    if (is_uniform(inst) && inst.set_count() >= 2 && inst.set_count() <= 5) {
        unsigned m = static_cast<unsigned>(inst.set_count());
        r.reduction_upper = reduction_upper(inst.sizes[0], m);
        r.reduction_upper_raw = reduction_upper_raw(inst.sizes[0], m);
        auto cf = closed_form_upper(inst.sizes[0], m);
        r.closed_form = cf.value;
        r.closed_form_ambiguous = cf.ambiguous;
    }
    r.known_exact = known_exact(inst);
    return r;
}

/// One row of the agreement report between the ceiling-sum bounds and their
/// single-ceiling closed forms. The two are compared, never asserted equal:
/// whether they agree for all n is an open point, so disagreements are data.
struct ClosedFormComparisonRow {
    unsigned m;
    std::uint64_t n;
    int reduction_raw;
    int reduction_clamped;
    int closed_form;
    bool ambiguous;
    bool agree; // closed_form == reduction_raw
};

inline std::vector<ClosedFormComparisonRow> compare_closed_forms(unsigned m,
                                                                 std::uint64_t n_from,
                                                                 std::uint64_t n_to) {
    if (n_from == 0 || n_to < n_from)
        throw ValidationError("bad n range for closed-form comparison");
    std::vector<ClosedFormComparisonRow> rows;
    rows.reserve(static_cast<std::size_t>(n_to - n_from + 1));
    for (std::uint64_t n = n_from; n <= n_to; ++n) {
        ClosedFormComparisonRow row;
        row.m = m;
        row.n = n;
        row.reduction_raw = reduction_upper_raw(n, m);
        row.reduction_clamped = reduction_upper(n, m);
        auto cf = closed_form_upper(n, m);
        row.closed_form = cf.value;
        row.ambiguous = cf.ambiguous;
        row.agree = (row.closed_form == row.reduction_raw);
        rows.push_back(row);
    }
    return rows;
}

} // namespace coins
