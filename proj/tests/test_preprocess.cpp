#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "generators.hpp"
#include "traffic/preprocess.hpp"

using namespace traffic;
using testgen::chain_network;

namespace {

// Raw fixture: an n-arm roundabout of 10 m arcs m0 -> m1 -> ... -> m0, with
// an in-street a_i attached at the start of arc m_i and an out-street b_i at
// its end.
Network roundabout_fixture(int arms) {
    Network net;
    net.step_seconds = 5.0;
    std::vector<int> arcs;
    for (int i = 0; i < arms; ++i) arcs.push_back(net.add_street("m" + std::to_string(i), 10, 2));
    std::vector<int> ins, outs;
    for (int i = 0; i < arms; ++i) {
        ins.push_back(net.add_street("a" + std::to_string(i), 100, 6));
        outs.push_back(net.add_street("b" + std::to_string(i), 100, 6));
    }
    for (int i = 0; i < arms; ++i) {
        net.add_link(arcs[i], arcs[(i + 1) % arms]);
        net.add_link(ins[i], arcs[i]);             // enters at the start of m_i
        net.add_link(arcs[i], outs[(i + 1) % arms]);  // exits at the end of m_i
    }
    net.add_roundabout("R", 4, arcs);
    net.finalize();
    return net;
}

std::set<int> reachable(const Network& net, int from) {
    std::set<int> seen{from};
    std::vector<int> stack{from};
    while (!stack.empty()) {
        int at = stack.back();
        stack.pop_back();
        for (int nxt : net.out[at])
            if (seen.insert(nxt).second) stack.push_back(nxt);
    }
    return seen;
}

}  // namespace

TEST_CASE("path enumeration on tiny fixtures") {
    SUBCASE("two-street chain has the unique path") {
        Network net = chain_network({100, 100}, {4, 4});
        auto paths = enumerate_acyclic_paths(net, 0, 1, 10);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0] == std::vector<int>{0, 1});
    }
    SUBCASE("diamond yields both three-street paths") {
        Network net;
        net.step_seconds = 5;
        int a = net.add_street("A", 100, 4);
        int b = net.add_street("B", 100, 4);
        int c = net.add_street("C", 150, 4);
        int d = net.add_street("D", 100, 4);
        net.add_link(a, b);
        net.add_link(b, d);
        net.add_link(a, c);
        net.add_link(c, d);
        net.finalize();
        auto paths = enumerate_acyclic_paths(net, a, d, 10);
        REQUIRE(paths.size() == 2);
        CHECK(paths[0] == std::vector<int>{a, b, d});  // shorter first
        CHECK(paths[1] == std::vector<int>{a, c, d});
    }
    SUBCASE("unreachable destination gives an empty list") {
        Network net;
        net.step_seconds = 5;
        net.add_street("A", 100, 4);
        net.add_street("B", 100, 4);
        net.add_link(1, 0);  // only B -> A
        net.finalize();
        CHECK(enumerate_acyclic_paths(net, 0, 1, 10).empty());
    }
    SUBCASE("origin equal to destination is the single-street path") {
        Network net = chain_network({100, 100}, {4, 4});
        auto paths = enumerate_acyclic_paths(net, 0, 0, 10);
        REQUIRE(paths.size() == 1);
        CHECK(paths[0] == std::vector<int>{0});
    }
}

TEST_CASE("enumeration respects the limit and returns the shortest") {
    // Grid with many alternatives: limit must pick the shortest by length.
    testgen::GridSpec g;
    g.rows = 3;
    g.cols = 3;
    Network net = testgen::grid_network(g);
    int from = net.street_index("r0c0E");
    int to = net.street_index("r2c0E");
    auto all = enumerate_acyclic_paths(net, from, to, 200);
    auto limited = enumerate_acyclic_paths(net, from, to, 4);
    REQUIRE(all.size() >= limited.size());
    REQUIRE(limited.size() == 4);
    for (std::size_t i = 0; i + 1 < limited.size(); ++i)
        CHECK(path_length(net, limited[i]) <= path_length(net, limited[i + 1]));
    // the limited list is a prefix of the full enumeration
    for (std::size_t i = 0; i < limited.size(); ++i) CHECK(limited[i] == all[i]);
    // every enumerated path is loopless and link-valid
    for (const auto& p : all) {
        std::set<int> uniq(p.begin(), p.end());
        CHECK(uniq.size() == p.size());
        for (std::size_t i = 0; i + 1 < p.size(); ++i) CHECK(net.has_link(p[i], p[i + 1]));
    }
}

TEST_CASE("diverse route selection groups by street-set similarity") {
    SUBCASE("single path passes through") {
        Network net = chain_network({100, 100}, {4, 4});
        auto sel = select_diverse_routes(net, {{0, 1}}, 5, 0.5);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == std::vector<int>{0, 1});
    }
    SUBCASE("near-identical street sets collapse to the shorter path") {
        Network net = chain_network({100, 100, 100}, {4, 4, 4});
        // {0,1} vs {0,1,2}: similarity 2/3 puts them in one group
        auto sel = select_diverse_routes(net, {{0, 1, 2}, {0, 1}}, 1, 0.5);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == std::vector<int>{0, 1});
    }
    SUBCASE("ten paths in three hand-built clusters, k = 4") {
        // Streets 0..11; three street-set families with no overlap across
        // families (cross similarity 0) and pairwise similarity >= 0.6
        // inside each family.
        Network net;
        net.step_seconds = 5;
        for (int i = 0; i < 12; ++i)
            net.add_street("s" + std::to_string(i), 50.0 + i, 4);
        net.finalize();
        std::vector<std::vector<int>> paths = {
            {0, 1, 2, 3},    // A: lengths 50+51+52+53 = 206
            {0, 1, 2},       // A: 153  (J with prev = 3/4)
            {0, 1, 3},       // A: 154
            {0, 2, 3},       // A: 155
            {4, 5, 6},       // B: 159
            {4, 5, 6, 7},    // B: 216
            {4, 5, 7},       // B: 160
            {8, 9, 10, 11},  // C: 234
            {8, 9, 10},      // C: 177
            {8, 9, 11},      // C: 178
        };
        auto sel = select_diverse_routes(net, paths, 4, 0.5);
        REQUIRE(sel.size() == 4);
        // Which family each selected path belongs to.
        std::set<int> families;
        for (const auto& p : sel) families.insert(p[0] / 4);
        CHECK(families.size() >= 2);
        // Two shortest of A (153, 154) survive, then B's two shortest.
        CHECK(sel[0] == std::vector<int>{0, 1, 2});
        CHECK(sel[1] == std::vector<int>{0, 1, 3});
        CHECK(sel[2] == std::vector<int>{4, 5, 6});
        CHECK(sel[3] == std::vector<int>{4, 5, 7});
    }
}

TEST_CASE("roundabout contraction") {
    SUBCASE("four arms of 10 m arcs become 12 pair streets") {
        Network raw = roundabout_fixture(4);
        Network net = contract_roundabouts(raw);
        CHECK(net.contracted);
        REQUIRE(net.roundabouts.size() == 1);
        CHECK(net.roundabouts[0].members.size() == 12);
        CHECK(net.roundabouts[0].capacity == 4);
        std::map<double, int> length_hist;
        for (int m : net.roundabouts[0].members) {
            length_hist[net.street(m).length_m] += 1;
            CHECK(net.street(m).capacity == 4);
        }
        CHECK(length_hist == std::map<double, int>{{10, 4}, {20, 4}, {30, 4}});
        // raw arcs are gone
        CHECK(!net.find_street("m0"));
        CHECK(net.streets.size() == 8 + 12);
    }
    SUBCASE("two arms become 2 pair streets") {
        Network raw = roundabout_fixture(2);
        Network net = contract_roundabouts(raw);
        REQUIRE(net.roundabouts.size() == 1);
        CHECK(net.roundabouts[0].members.size() == 2);
    }
    SUBCASE("network without roundabouts is unchanged") {
        Network raw = chain_network({100, 150}, {4, 4});
        Network net = contract_roundabouts(raw);
        CHECK(net.streets.size() == 2);
        CHECK(net.links == raw.links);
        CHECK(net.street(0).id == "s0");
        CHECK(net.contracted);
    }
    SUBCASE("arcs that do not close a cycle are rejected") {
        Network raw;
        raw.step_seconds = 5;
        int m0 = raw.add_street("m0", 10, 2);
        int m1 = raw.add_street("m1", 10, 2);
        raw.add_street("a", 100, 4);
        raw.add_link(m0, m1);  // no edge back
        raw.add_link(2, m0);
        raw.add_roundabout("R", 3, {m0, m1});
        raw.finalize();
        CHECK_THROWS_WITH_AS(contract_roundabouts(raw), doctest::Contains("cycle"),
                             std::runtime_error);
    }
    SUBCASE("contraction preserves cross-roundabout reachability") {
        Network raw = roundabout_fixture(4);
        Network net = contract_roundabouts(raw);
        for (int i = 0; i < 4; ++i) {
            int from = net.street_index("a" + std::to_string(i));
            auto seen = reachable(net, from);
            for (int j = 0; j < 4; ++j) {
                if (j == i) continue;  // the U-turn pair is dropped by design
                CHECK(seen.count(net.street_index("b" + std::to_string(j))));
            }
        }
    }
}

TEST_CASE("enter-time windows") {
    Network net = chain_network({125, 250, 125}, {7, 7, 7});
    // light times: 2, 4, 2 steps
    SUBCASE("empty ledger collapses to light prefix sums") {
        OccupancyLedger ledger(3);
        auto wins = compute_windows(net, {0, 1, 2}, ledger);
        REQUIRE(wins.size() == 3);
        CHECK(wins[0] == Window{0, 0});
        CHECK(wins[1] == Window{2, 2});
        CHECK(wins[2] == Window{6, 6});
    }
    SUBCASE("first street always opens at zero") {
        OccupancyLedger ledger(3);
        ledger.add_interval(0, 0, 20);
        auto wins = compute_windows(net, {0, 1, 2}, ledger);
        CHECK(wins[0].min_enter == 0);
    }
    SUBCASE("street at capacity at its min-enter bounds the exit by max_tt") {
        OccupancyLedger ledger(3);
        for (int i = 0; i < 7; ++i) ledger.add_interval(0, 0, 30);
        auto wins = compute_windows(net, {0, 1, 2}, ledger);
        // max exit of street 0 = max enter of street 1
        CHECK(wins[1].max_enter == net.street(0).max_tt);
        CHECK(wins[1].min_enter == 2);
    }
    SUBCASE("occupancy below capacity slows the bound proportionally") {
        OccupancyLedger ledger(3);
        ledger.add_interval(0, 0, 20);
        ledger.add_interval(0, 0, 20);
        ledger.add_interval(0, 0, 20);  // 3 vehicles on street 0 at step 0
        auto wins = compute_windows(net, {0, 1, 2}, ledger);
        // divisor 3: 125 m at 45/3 km/h = 30 s -> 6 steps (>= medium floor)
        CHECK(wins[1].max_enter == 6);
    }
    SUBCASE("windows shifted by a start step read the ledger at shifted times") {
        OccupancyLedger ledger(3);
        ledger.add_interval(0, 0, 4);  // gone by step 5
        auto wins = compute_windows(net, {0, 1, 2}, ledger, 5);
        CHECK(wins[1] == Window{2, 2});
    }
}

TEST_CASE("candidate routes satisfy the route invariants") {
    std::mt19937 rng(11);
    PreprocessConfig cfg;
    int built = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Network net = testgen::random_network(rng, 12, false);
        OccupancyLedger ledger(net.streets.size());
        std::uniform_int_distribution<int> pick(0, static_cast<int>(net.streets.size()) - 1);
        int from = pick(rng), to = pick(rng);
        auto routes = candidate_routes(net, "v", from, to, ledger, 0, cfg);
        for (const auto& r : routes) {
            ++built;
            REQUIRE(!r.streets.empty());
            CHECK(r.streets.front() == from);
            CHECK(r.streets.back() == to);
            CHECK(r.windows.size() == r.streets.size());
            CHECK(r.windows.front().min_enter == 0);
            CHECK(r.cost >= 0);
            std::set<int> uniq(r.streets.begin(), r.streets.end());
            CHECK(uniq.size() == r.streets.size());
            Step prefix = 0;
            for (std::size_t i = 0; i < r.streets.size(); ++i) {
                if (i > 0) {
                    CHECK(net.has_link(r.streets[i - 1], r.streets[i]));
                    CHECK(r.windows[i].min_enter >= r.windows[i - 1].min_enter);
                }
                CHECK(r.windows[i].min_enter == prefix);  // light-tier reachability
                CHECK(r.windows[i].min_enter <= r.windows[i].max_enter);
                prefix += net.street(r.streets[i]).light_tt;
            }
        }
    }
    CHECK(built > 50);
}

TEST_CASE("route costs follow the configured mode") {
    Network net = chain_network({125, 250}, {7, 7});
    CHECK(route_cost(net, {0, 1}, CostMode::length_m) == 375);
    CHECK(route_cost(net, {0, 1}, CostMode::light_steps) == 2 + 4);
}
