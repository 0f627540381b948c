#include <catch2/catch_amalgamated.hpp>

#include "coins/oracle.hpp"
#include "coins/search.hpp"
#include "test_util.hpp"

using namespace coins;

TEST_CASE("weigh_outcome basics", "[oracle]") {
    Instance one({3});
    Configuration fake0({0});
    CHECK(weigh_outcome(one, fake0, Weighing{{{0, 0}}, {{0, 1}}}) == Outcome::Plus);
    CHECK(weigh_outcome(one, fake0, Weighing{{{0, 1}}, {{0, 2}}}) == Outcome::Zero);

    Instance two({2, 2});
    // One fake on each pan balances out.
    CHECK(weigh_outcome(two, Configuration({0, 0}),
                        Weighing{{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}}) == Outcome::Zero);

    CHECK_THROWS_AS(weigh_outcome(one, Configuration({0, 0}), Weighing{{{0, 0}}, {{0, 1}}}),
                    ValidationError);
}

TEST_CASE("mirror antisymmetry", "[oracle][property]") {
    auto g = testutil::rng(21);
    int cases = 0;
    while (cases < 1200) {
        Instance inst = testutil::random_instance(g);
        if (inst.total_coins() < 2) continue;
        Configuration c = testutil::random_config(g, inst);
        Weighing w = testutil::random_weighing(g, inst);
        Weighing m{w.right, w.left};
        CHECK(weigh_outcome(inst, c, w) == mirror(weigh_outcome(inst, c, m)));
        ++cases;
    }
    // Exhaustive on a small instance: every configuration, every 1v1 weighing.
    Instance inst({2, 3});
    Posterior full = full_posterior(inst);
    std::vector<CoinId> coins;
    for (std::uint32_t s = 0; s < 2; ++s)
        for (std::uint32_t j = 0; j < inst.sizes[s]; ++j) coins.push_back({s, j});
    for (std::size_t a = 0; a < coins.size(); ++a)
        for (std::size_t b = 0; b < coins.size(); ++b) {
            if (a == b) continue;
            Weighing w{{coins[a]}, {coins[b]}};
            Weighing m{{coins[b]}, {coins[a]}};
            for (Code code : full.members) {
                Configuration c = decode_config(inst, code);
                CHECK(weigh_outcome(inst, c, w) == mirror(weigh_outcome(inst, c, m)));
            }
        }
}

TEST_CASE("partition basics", "[oracle]") {
    SECTION("classic three-way split of [3]") {
        Posterior p = full_posterior(Instance({3}));
        auto parts = partition(p, Weighing{{{0, 0}}, {{0, 1}}});
        CHECK(parts[0].members == std::vector<Code>{0});
        CHECK(parts[1].members == std::vector<Code>{2});
        CHECK(parts[2].members == std::vector<Code>{1});
    }
    SECTION("balance impossible when the fake must be on a pan") {
        Posterior p = full_posterior(Instance({2}));
        auto parts = partition(p, Weighing{{{0, 0}}, {{0, 1}}});
        CHECK(parts[0].members == std::vector<Code>{0});
        CHECK(parts[1].members.empty());
        CHECK(parts[2].members == std::vector<Code>{1});
    }
    SECTION("[2,4] split sizes against brute force") {
        Instance inst({2, 4});
        Posterior p = full_posterior(inst);
        Weighing w{{{0, 0}}, {{0, 1}}};
        auto parts = partition(p, w);
        // Independent count: classify every configuration directly.
        std::array<std::size_t, 3> expected{0, 0, 0};
        for (Code code = 0; code < 8; ++code) {
            Configuration c = decode_config(inst, code);
            int bal = (c.fakes[0] == 0 ? 1 : 0) - (c.fakes[0] == 1 ? 1 : 0);
            expected[bal > 0 ? 0 : (bal < 0 ? 2 : 1)]++;
        }
        CHECK(expected == std::array<std::size_t, 3>{4, 0, 4});
        for (int i = 0; i < 3; ++i) CHECK(parts[i].members.size() == expected[i]);
    }
}

TEST_CASE("partition completeness", "[oracle][property]") {
    auto g = testutil::rng(22);
    int cases = 0;
    while (cases < 1200) {
        Instance inst = testutil::random_instance(g);
        if (inst.total_coins() < 2) continue;
        Posterior p = testutil::random_posterior(g, inst);
        Weighing w = testutil::random_weighing(g, inst);
        auto parts = partition(p, w);
        // Classes are disjoint, ordered, and union back to p.
        std::vector<Code> merged;
        for (const auto& q : parts) {
            CHECK(std::is_sorted(q.members.begin(), q.members.end()));
            merged.insert(merged.end(), q.members.begin(), q.members.end());
        }
        std::sort(merged.begin(), merged.end());
        CHECK(merged == p.members);
        ++cases;
    }
}

TEST_CASE("padding invariance", "[oracle][property]") {
    auto g = testutil::rng(23);
    int cases = 0;
    while (cases < 1000) {
        Instance inst = testutil::random_instance(g);
        if (inst.total_coins() < 4) continue;
        Posterior p = testutil::random_posterior(g, inst);
        Weighing w = testutil::random_weighing(g, inst);

        // Find two coins outside the weighing that are fake in no member of p.
        std::vector<char> used(inst.total_coins(), 0);
        auto flat = [&](const CoinId& c) {
            std::uint32_t off = 0;
            for (std::uint32_t s = 0; s < c.set; ++s) off += inst.sizes[s];
            return off + c.index;
        };
        for (const auto& c : w.left) used[flat(c)] = 1;
        for (const auto& c : w.right) used[flat(c)] = 1;
        std::vector<CoinId> genuine;
        for (std::uint32_t s = 0; s < inst.set_count(); ++s)
            for (std::uint32_t j = 0; j < inst.sizes[s]; ++j) {
                CoinId coin{s, j};
                if (used[flat(coin)]) continue;
                bool fake_somewhere = false;
                for (Code code : p.members)
                    if (decode_config(inst, code).fakes[s] == j) {
                        fake_somewhere = true;
                        break;
                    }
                if (!fake_somewhere) genuine.push_back(coin);
            }
        if (genuine.size() < 2) continue;

        Weighing padded = w;
        padded.left.push_back(genuine[0]);
        padded.right.push_back(genuine[1]);
        auto base = partition(p, w);
        auto with_pad = partition(p, padded);
        for (int i = 0; i < 3; ++i) CHECK(base[i].members == with_pad[i].members);
        ++cases;
    }
}

TEST_CASE("trace basics", "[oracle]") {
    SECTION("depth-0 strategy") {
        Strategy s(Instance({1}), make_decide(Configuration({0})));
        auto r = trace(Configuration({0}), s);
        CHECK(r.word.weighing_count() == 0);
        CHECK(r.word.to_string() == "0");
        CHECK(r.leaf->decided == Configuration({0}));
    }
    SECTION("[3] classic") {
        Strategy s(Instance({3}),
                   make_weigh(Weighing{{{0, 0}}, {{0, 1}}}, make_decide(Configuration({0})),
                              make_decide(Configuration({2})), make_decide(Configuration({1}))));
        auto r0 = trace(Configuration({0}), s);
        CHECK(r0.word.to_string() == "0+");
        auto r2 = trace(Configuration({2}), s);
        CHECK(r2.word.to_string() == "00");
        CHECK(r2.leaf->decided == Configuration({2}));
    }
}

TEST_CASE("trace consistency with repeated partition", "[oracle][property]") {
    // The leaf reached by trace() must contain the configuration in the
    // objective set computed top-down by partition().
    Instance inst({3, 3});
    auto res = solve_exact(inst);
    REQUIRE(res.status == SearchStatus::Found);
    const Strategy& s = *res.strategy;

    struct Walk {
        const Strategy& s;
        void check(const StrategyNode& node, const Posterior& p) {
            if (node.is_leaf()) {
                for (Code code : p.members) {
                    auto r = trace(decode_config(p.instance, code), s);
                    CHECK(r.leaf == &node);
                }
                return;
            }
            auto parts = partition(p, node.weighing);
            for (Outcome o : kOutcomes) check(node.next(o), parts[static_cast<int>(o)]);
        }
    };
    Walk{s}.check(*s.root, full_posterior(inst));
}
