#include <catch2/catch_amalgamated.hpp>

#include "coins/search.hpp"
#include "coins/verify.hpp"
#include "test_util.hpp"

using namespace coins;

namespace {

Strategy classic_three() {
    return Strategy(Instance({3}),
                    make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_decide(Configuration({0})),
                               make_decide(Configuration({2})), make_decide(Configuration({1}))));
}

} // namespace

TEST_CASE("depth measurement", "[verify]") {
    Strategy leaf(Instance({1}), make_decide(Configuration({0})));
    CHECK(depth(leaf) == 0);
    CHECK(depth(classic_three()) == 1);

    auto res = solve_exact(Instance({5, 5}));
    REQUIRE(res.status == SearchStatus::Found);
    CHECK(depth(*res.strategy) == 3);
}

TEST_CASE("exhaustive_verify completeness", "[verify]") {
    SECTION("single leaf on [1]") {
        Strategy s(Instance({1}), make_decide(Configuration({0})));
        auto r = exhaustive_verify(s);
        CHECK(r.complete);
        CHECK(r.depth == 0);
        CHECK(r.configs_checked == 1);
    }
    SECTION("three-coin classic") {
        auto r = exhaustive_verify(classic_three());
        CHECK(r.complete);
        CHECK(r.depth == 1);
    }
    SECTION("any depth-2 tree on [5,5] is incomplete by pigeonhole") {
        // 25 configurations exceed the 9 outcome words of two weighings.
        Instance inst({5, 5});
        auto weigh_pair = [&](std::uint32_t s) {
            return Weighing{{{s, 0}, {s, 1}}, {{s, 2}, {s, 3}}};
        };
        auto leafy = [&](Code code) { return make_decide(decode_config(inst, code)); };
        auto second = [&]() {
            return make_weigh(weigh_pair(1), leafy(0), leafy(1), leafy(2));
        };
        Strategy s(inst, make_weigh(weigh_pair(0), second(), second(), second()));
        auto r = exhaustive_verify(s);
        CHECK_FALSE(r.complete);
        CHECK_FALSE(r.ambiguous_leaves.empty());
    }
}

TEST_CASE("wrong decisions and contradictions are reported, not thrown", "[verify]") {
    SECTION("leaf deciding a configuration outside its objective set") {
        Strategy s(Instance({3}),
                   make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_decide(Configuration({1})),
                              make_decide(Configuration({2})), make_decide(Configuration({1}))));
        auto r = exhaustive_verify(s);
        CHECK_FALSE(r.complete);
        REQUIRE(r.wrong_decisions.size() == 1);
        CHECK(r.wrong_decisions[0].actual == Configuration({0}));
        CHECK(r.wrong_decisions[0].decided == Configuration({1}));
    }
    SECTION("reachable contradiction counts as wrong decision") {
        Strategy s(Instance({3}),
                   make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_contradiction(),
                              make_decide(Configuration({2})), make_decide(Configuration({1}))));
        auto r = exhaustive_verify(s);
        CHECK_FALSE(r.complete);
        REQUIRE(r.wrong_decisions.size() == 1);
        CHECK_FALSE(r.wrong_decisions[0].decided.has_value());
    }
    SECTION("unreachable contradictions are allowed") {
        // [2]: the balanced branch can never occur.
        Strategy s(Instance({2}),
                   make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_decide(Configuration({0})),
                              make_contradiction(), make_decide(Configuration({1}))));
        auto r = exhaustive_verify(s);
        CHECK(r.complete);
        CHECK(r.unreachable_contradictions == 1);
    }
}

TEST_CASE("complete strategies satisfy |P| <= 3^depth", "[verify][property]") {
    auto g = testutil::rng(41);
    std::vector<Instance> pool = {Instance({2}),    Instance({3}),    Instance({4}),
                                  Instance({5}),    Instance({2, 2}), Instance({2, 3}),
                                  Instance({3, 3}), Instance({2, 4}), Instance({2, 2, 2}),
                                  Instance({6}),    Instance({2, 2, 3})};
    std::vector<std::optional<Strategy>> solved(pool.size());
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int i = 0; i < 1000; ++i) {
        std::size_t k = pick(g);
        if (!solved[k]) {
            auto res = solve_exact(pool[k]);
            REQUIRE(res.status == SearchStatus::Found);
            solved[k] = std::move(*res.strategy);
        }
        auto r = exhaustive_verify(*solved[k]);
        REQUIRE(r.complete);
        std::uint64_t cap = 1;
        for (int d = 0; d < r.depth; ++d) cap *= 3;
        CHECK(pool[k].config_count() <= cap);
    }
}

TEST_CASE("verification is restricted to the supplied posterior", "[verify]") {
    // A strategy that only tells coins 0 and 1 apart is complete on the
    // posterior that excludes coin 2.
    Instance inst({3});
    Strategy s(inst, make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_decide(Configuration({0})),
                                make_decide(Configuration({2})), make_decide(Configuration({1}))));
    Posterior p;
    p.instance = inst;
    p.members = {0, 1};
    auto r = verify_posterior(p, s);
    CHECK(r.complete);
    auto full = exhaustive_verify(s);
    CHECK(full.complete);
}
