#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "coins/search.hpp"
#include "coins/strategy_io.hpp"
#include "test_util.hpp"

using namespace coins;

namespace {

// The exhaustive comparison grid: everything with m <= 3 and sizes <= 3,
// plus the singles 4..6 and the mixed pair. All fit brute_reference's caps.
std::vector<Instance> comparison_grid() {
    std::vector<Instance> grid;
    for (std::uint32_t a = 1; a <= 3; ++a) {
        grid.push_back(Instance({a}));
        for (std::uint32_t b = a; b <= 3; ++b) {
            grid.push_back(Instance({a, b}));
            for (std::uint32_t c = b; c <= 3; ++c) grid.push_back(Instance({a, b, c}));
        }
    }
    grid.push_back(Instance({4}));
    grid.push_back(Instance({5}));
    grid.push_back(Instance({6}));
    grid.push_back(Instance({2, 4}));
    return grid;
}

} // namespace

TEST_CASE("brute_reference basics", "[search]") {
    CHECK(brute_reference(Instance({3}), 2) == 1);
    CHECK(brute_reference(Instance({2, 2}), 3) == 2);
    CHECK(brute_reference(Instance({9}), 3) == 2);
    CHECK_THROWS_AS(brute_reference(Instance({101}), 4), ValidationError);
    CHECK_THROWS_AS(brute_reference(Instance({3}), 5), ValidationError);
}

TEST_CASE("exists_strategy decision form", "[search]") {
    Instance inst({5, 5});
    Posterior full = full_posterior(inst);

    SECTION("budget 2 is refuted at the root by counting") {
        auto r = exists_strategy(full, 2);
        CHECK(r.status == SearchStatus::ProvenNone);
        CHECK(r.stats.nodes_expanded == 0);
    }
    SECTION("budget 3 yields a verified strategy") {
        auto r = exists_strategy(full, 3);
        REQUIRE(r.status == SearchStatus::Found);
        CHECK(depth(*r.strategy) <= 3);
        CHECK(exhaustive_verify(*r.strategy).complete);
    }
    SECTION("single-member posterior solves with budget 0") {
        Posterior one;
        one.instance = inst;
        one.members = {7};
        auto r = exists_strategy(one, 0);
        REQUIRE(r.status == SearchStatus::Found);
        CHECK(r.strategy->root->kind == StrategyNode::Kind::Decide);
        CHECK(r.strategy->root->decided == decode_config(inst, 7));
    }
    SECTION("a loose budget still returns a verified strategy") {
        auto r = exists_strategy(full, 6);
        REQUIRE(r.status == SearchStatus::Found);
        CHECK(depth(*r.strategy) <= 6);
        CHECK(exhaustive_verify(*r.strategy).complete);
    }
    SECTION("malformed posteriors are rejected") {
        Posterior bad;
        bad.instance = inst;
        bad.members = {3, 3};
        CHECK_THROWS_AS(exists_strategy(bad, 3), ValidationError);
        bad.members = {5, 2};
        CHECK_THROWS_AS(exists_strategy(bad, 3), ValidationError);
        bad.members = {30};
        CHECK_THROWS_AS(exists_strategy(bad, 3), ValidationError);
    }
}

TEST_CASE("solve_exact reproduces the small published values", "[search]") {
    auto check_value = [](std::vector<std::uint32_t> sizes, int expected) {
        Instance inst(std::move(sizes));
        auto res = solve_exact(inst);
        REQUIRE(res.status == SearchStatus::Found);
        CHECK(res.depth == expected);
        CHECK(exhaustive_verify(*res.strategy).complete);
        CHECK(res.depth >= info_lower(inst));
        CHECK(res.depth <= independent_upper(inst));
    };
    check_value({2, 2, 2}, 2);
    check_value({2, 4}, 2);
    check_value({5, 5}, 3);
}

TEST_CASE("solve_exact equals brute_reference on the small grid", "[search][oracle-equivalence]") {
    for (const auto& inst : comparison_grid()) {
        INFO("instance [" << inst.to_string() << "]");
        auto res = solve_exact(inst);
        REQUIRE(res.status == SearchStatus::Found);
        CHECK(res.depth == brute_reference(inst, 4));
    }
}

TEST_CASE("solve_exact is monotone in every size", "[search][property]") {
    std::map<std::vector<std::uint32_t>, int> results;
    for (const auto& inst : comparison_grid()) {
        auto res = solve_exact(inst);
        REQUIRE(res.status == SearchStatus::Found);
        results[normalized_sizes(inst)] = res.depth;
    }
    for (const auto& [sizes, value] : results) {
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            auto smaller = sizes;
            if (smaller[i] == 1) continue;
            smaller[i] -= 1;
            std::sort(smaller.begin(), smaller.end(), std::greater<>());
            auto it = results.find(smaller);
            if (it != results.end()) CHECK(it->second <= value);
        }
    }
}

TEST_CASE("search is deterministic with a single worker", "[search]") {
    SearchLimits limits;
    limits.workers = 1;
    auto a = solve_exact(Instance({5, 5}), limits);
    auto b = solve_exact(Instance({5, 5}), limits);
    REQUIRE(a.status == SearchStatus::Found);
    REQUIRE(b.status == SearchStatus::Found);
    CHECK(save_to_string(*a.strategy) == save_to_string(*b.strategy));
}

TEST_CASE("parallel workers find the same optimum", "[search]") {
    SearchLimits limits;
    limits.workers = 2;
    auto res = solve_exact(Instance({5, 5}), limits);
    REQUIRE(res.status == SearchStatus::Found);
    CHECK(res.depth == 3);
    CHECK(exhaustive_verify(*res.strategy).complete);
}

TEST_CASE("caps produce indeterminate results, not fake proofs", "[search]") {
    SearchLimits limits;
    limits.node_cap = 1; // absurdly small: fires immediately
    Instance inst({3, 3, 3});
    auto res = solve_exact(inst, limits);
    CHECK(res.status == SearchStatus::Indeterminate);
    CHECK(res.proven_lower == info_lower(inst));
    CHECK(res.upper_hint == independent_upper(inst));

    // Same through exists_strategy: the cap must not masquerade as ProvenNone.
    auto er = exists_strategy(full_posterior(inst), 3, limits);
    CHECK(er.status == SearchStatus::Indeterminate);
}

TEST_CASE("enumerate_weighings canonical classes", "[search]") {
    SECTION("full [3] has exactly one class, splitting 1/1/1") {
        Posterior p = full_posterior(Instance({3}));
        auto ws = enumerate_weighings(p);
        REQUIRE(ws.size() == 1);
        auto parts = partition(p, ws[0]);
        CHECK(parts[0].members.size() == 1);
        CHECK(parts[1].members.size() == 1);
        CHECK(parts[2].members.size() == 1);

        // Independent check: all 3 raw single-coin pairs give the same split
        // sizes up to relabeling.
        for (std::uint32_t a = 0; a < 3; ++a)
            for (std::uint32_t b = 0; b < 3; ++b) {
                if (a == b) continue;
                auto q = partition(p, Weighing{{{0, a}}, {{0, b}}});
                std::multiset<std::size_t> sizes{q[0].members.size(), q[1].members.size(),
                                                 q[2].members.size()};
                CHECK(sizes == std::multiset<std::size_t>{1, 1, 1});
            }
    }
    SECTION("full [2] yields the single weighing coin0:coin1") {
        auto ws = enumerate_weighings(full_posterior(Instance({2})));
        REQUIRE(ws.size() == 1);
        CHECK(ws[0] == Weighing{{{0, 0}}, {{0, 1}}});
    }
    SECTION("canonical count is well below the raw count for [2,2,2]") {
        Instance inst({2, 2, 2});
        auto canonical = enumerate_weighings(full_posterior(inst));

        // Raw enumeration: all ordered pairs of disjoint pans, sizes 1..3.
        std::vector<CoinId> coins;
        for (std::uint32_t s = 0; s < 3; ++s)
            for (std::uint32_t j = 0; j < 2; ++j) coins.push_back({s, j});
        std::size_t raw = 0;
        for (std::uint32_t mask_l = 1; mask_l < 64; ++mask_l)
            for (std::uint32_t mask_r = 1; mask_r < 64; ++mask_r) {
                if (mask_l & mask_r) continue;
                int sl = __builtin_popcount(mask_l), sr = __builtin_popcount(mask_r);
                if (sl != sr || sl > 3) continue;
                ++raw;
            }
        CHECK(raw >= 90);
        CHECK(canonical.size() < raw);
        CHECK(canonical.size() < 90);
    }
}

TEST_CASE("pruning keeps optimality: engine matches brute on tight cases", "[search]") {
    // The information-bound prune discards a weighing only when some class
    // exceeds 3^(d-1); if it were unsound these optima would come out too big.
    for (const auto& sizes : {std::vector<std::uint32_t>{3, 3}, {2, 2, 2}, {2, 4}, {6}}) {
        Instance inst(sizes);
        auto res = solve_exact(inst);
        REQUIRE(res.status == SearchStatus::Found);
        CHECK(res.depth == brute_reference(inst, 4));
    }
}

TEST_CASE("closed-form outcome counts match the member scan", "[search][property]") {
    // On product-form posteriors the engine derives class sizes by
    // convolution instead of scanning; both routes must agree exactly.
    auto g = testutil::rng(77);
    for (int iter = 0; iter < 60; ++iter) {
        Instance inst = testutil::random_instance(g, 3, 5, 150);
        if (inst.total_coins() < 2) continue;

        // A random per-set candidate subset, taken as a full product.
        std::vector<std::vector<std::uint32_t>> cand(inst.set_count());
        for (std::uint32_t i = 0; i < inst.set_count(); ++i) {
            for (std::uint32_t j = 0; j < inst.sizes[i]; ++j)
                if (g() % 2) cand[i].push_back(j);
            if (cand[i].empty()) cand[i].push_back(g() % inst.sizes[i]);
        }
        Posterior p;
        p.instance = inst;
        std::function<void(std::size_t, Code, Code)> fill = [&](std::size_t i, Code acc,
                                                                Code radix) {
            if (i == cand.size()) {
                p.members.push_back(acc);
                return;
            }
            for (auto j : cand[i]) fill(i + 1, acc + j * radix, radix * inst.sizes[i]);
        };
        fill(0, 0, 1);
        std::sort(p.members.begin(), p.members.end());
        if (p.members.size() < 2) continue;

        detail::RadixView rv(inst);
        auto analysis = detail::analyze_classes(rv, p.members);
        REQUIRE(analysis.product_form);
        detail::WorkerState ws(inst);
        int checked = 0;
        auto emit = [&](const detail::CountWeighing& cw) -> bool {
            auto closed = detail::count_outcomes_product(analysis, cw);
            std::vector<std::uint32_t> touched;
            detail::mark_weighing(ws, analysis, cw, touched);
            auto scanned = detail::count_outcomes(rv, ws, touched, p.members);
            detail::unmark_weighing(ws, analysis, cw);
            REQUIRE(closed == scanned);
            return ++checked < 500;
        };
        detail::CountEnumerator<decltype(emit)> enumerator(analysis, emit);
        for (std::uint32_t s = 1; s <= inst.total_coins() / 2; ++s)
            if (!enumerator.run(s)) break;
    }
}

TEST_CASE("search statistics are populated", "[search]") {
    auto res = solve_exact(Instance({5, 5}));
    REQUIRE(res.status == SearchStatus::Found);
    CHECK(res.stats.nodes_expanded > 0);
    CHECK(res.stats.weighings_enumerated > 0);
    // Symmetry folding must have merged something on a 10-coin instance.
    CHECK(res.stats.weighings_pruned_symmetry > 0);
    CHECK(res.stats.elapsed.count() >= 0.0);
}
