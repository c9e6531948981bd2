#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "traffic/network.hpp"

using namespace traffic;

namespace {

Network one_street(double length, int capacity) {
    Network net;
    net.step_seconds = 5.0;
    net.add_street("a", length, capacity);
    net.finalize();
    return net;
}

// Direct evaluation of the occupancy sum over raw event lists: enters at or
// before t minus exits at or before t.
int occupancy_scratch(const std::vector<std::pair<Step, Step>>& intervals, Step t) {
    int n = 0;
    for (auto [in, out] : intervals) {
        if (in <= t) ++n;
        if (out <= t) --n;
    }
    return n;
}

}  // namespace

TEST_CASE("tier travel times quantize from the fixed speeds") {
    // 125 m: 10 s at 45 km/h and 30 s at 15 km/h; 5 s steps.
    Network net = one_street(125, 9);
    const Street& s = net.street(0);
    CHECK(s.light_tt == 2);
    CHECK(s.medium_tt == 3);
    CHECK(s.heavy_tt == 6);
    CHECK(travel_time(s, 0) == 2);  // light tier covers zero
    CHECK(travel_time(s, 8) == 6);  // beyond heavy minimum, no upper bound
    CHECK(travel_time(s, 100) == 6);
    CHECK(travel_time(s, 4) == 3);
}

TEST_CASE("derived thresholds partition occupancy and stay monotone") {
    for (int cap = 1; cap <= 12; ++cap) {
        Network net = one_street(125, cap);
        const Street& s = net.street(0);
        CHECK(s.light_below >= 1);
        CHECK(s.light_below <= s.heavy_from);
        CHECK(s.heavy_from <= s.capacity);
        CHECK(s.heavy_tt >= s.medium_tt);
        CHECK(s.medium_tt >= s.light_tt);
        CHECK(s.light_tt >= 1);
        CHECK(s.max_tt >= s.heavy_tt);
        for (int occ = 0; occ <= cap; ++occ) {
            int matches = (occ < s.light_below ? 1 : 0) +
                          ((occ >= s.light_below && occ < s.heavy_from) ? 1 : 0) +
                          (occ >= s.heavy_from ? 1 : 0);
            CHECK(matches == 1);
        }
    }
}

TEST_CASE("travel time is non-increasing as the tier lightens") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> len(10.0, 400.0);
    for (int i = 0; i < 50; ++i) {
        Network net = one_street(len(rng), 9);
        const Street& s = net.street(0);
        CHECK(travel_time(s, s.capacity) >= travel_time(s, s.light_below));
        CHECK(travel_time(s, s.light_below) >= travel_time(s, 0));
    }
}

TEST_CASE("occupancy follows the enter/exit counting rule") {
    Network net = one_street(100, 5);
    OccupancyLedger ledger(1);

    SUBCASE("no events") {
        for (Step t = 0; t < 10; ++t) CHECK(ledger.occupancy(0, t) == 0);
    }
    SUBCASE("three enters, one exit at the query step") {
        ledger.add_interval(0, 0, 2);
        ledger.add_interval(0, 1, 9);
        ledger.add_interval(0, 2, 9);
        CHECK(ledger.occupancy(0, 2) == 2);
    }
    SUBCASE("exit at t removes the vehicle at t") {
        ledger.add_interval(0, 3, 7);
        CHECK(ledger.occupancy(0, 2) == 0);
        CHECK(ledger.occupancy(0, 3) == 1);
        CHECK(ledger.occupancy(0, 6) == 1);
        CHECK(ledger.occupancy(0, 7) == 0);
    }
}

TEST_CASE("ledger matches a from-scratch recomputation on random event sets") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<Step> t_dist(0, 30);
    for (int trial = 0; trial < 200; ++trial) {
        OccupancyLedger ledger(1);
        std::vector<std::pair<Step, Step>> intervals;
        std::uniform_int_distribution<int> n_dist(0, 12);
        int n = n_dist(rng);
        for (int i = 0; i < n; ++i) {
            Step in = t_dist(rng);
            std::uniform_int_distribution<Step> out_dist(in + 1, in + 10);
            Step out = out_dist(rng);
            ledger.add_interval(0, in, out);
            intervals.emplace_back(in, out);
        }
        for (Step t = 0; t <= 45; ++t) {
            int expect = occupancy_scratch(intervals, t);
            CHECK(ledger.occupancy(0, t) == expect);
            CHECK(expect >= 0);
        }
    }
}

TEST_CASE("ledger copies are isolated snapshots") {
    OccupancyLedger a(2);
    a.add_interval(0, 0, 5);
    OccupancyLedger b = a;
    a.add_interval(0, 1, 4);
    CHECK(a.occupancy(0, 2) == 2);
    CHECK(b.occupancy(0, 2) == 1);
    b.add_interval(1, 0, 3);
    CHECK(a.occupancy(1, 1) == 0);
}

TEST_CASE("roundabout occupancy sums member streets") {
    Network net;
    net.step_seconds = 5.0;
    net.contracted = true;
    net.add_street("p", 50, 4);
    net.add_street("q", 50, 4);
    net.add_street("z", 50, 4);
    net.add_roundabout("R", 6, {0, 1});
    net.finalize();

    OccupancyLedger ledger(3);
    SUBCASE("empty roundabout") { CHECK(roundabout_occupancy(net, ledger, "R", 3) == 0); }
    SUBCASE("one member occupied") {
        ledger.add_interval(0, 0, 9);
        CHECK(roundabout_occupancy(net, ledger, 0, 3) == 1);
    }
    SUBCASE("two members with occupancy 2 and 3") {
        ledger.add_interval(0, 0, 9);
        ledger.add_interval(0, 1, 9);
        ledger.add_interval(1, 0, 9);
        ledger.add_interval(1, 1, 9);
        ledger.add_interval(1, 2, 9);
        ledger.add_interval(2, 0, 9);  // not a member, must not count
        CHECK(roundabout_occupancy(net, ledger, "R", 3) == 5);
    }
    SUBCASE("unknown roundabout id") {
        CHECK_THROWS(roundabout_occupancy(net, ledger, "nope", 0));
    }
}

TEST_CASE("unknown street id is an error") {
    Network net = one_street(100, 5);
    OccupancyLedger ledger(1);
    CHECK_THROWS(occupancy(net, ledger, "missing", 0));
    CHECK(occupancy(net, ledger, "a", 0) == 0);
}

TEST_CASE("network invariants are enforced at finalize") {
    SUBCASE("capacity must be at least 1") {
        Network net;
        net.add_street("a", 100, 0);
        CHECK_THROWS_WITH_AS(net.finalize(), doctest::Contains("'a'"), std::runtime_error);
    }
    SUBCASE("length must be positive") {
        Network net;
        net.add_street("a", 0, 3);
        CHECK_THROWS(net.finalize());
    }
    SUBCASE("no self links") {
        Network net;
        net.add_street("a", 100, 3);
        net.add_link(0, 0);
        CHECK_THROWS(net.finalize());
    }
    SUBCASE("duplicate street ids") {
        Network net;
        net.add_street("a", 100, 3);
        CHECK_THROWS(net.add_street("a", 50, 2));
    }
    SUBCASE("threshold override must respect the partition") {
        Network net;
        Street s;
        s.id = "a";
        s.length_m = 100;
        s.capacity = 4;
        s.threshold_override = {{3, 2}};  // light_below > heavy_from
        net.add_street(s);
        CHECK_THROWS(net.finalize());
    }
    SUBCASE("max_tt override below the heavy time") {
        Network net;
        Street s;
        s.id = "a";
        s.length_m = 125;
        s.capacity = 4;
        s.max_tt_override = 1;  // heavy time is 6
        net.add_street(s);
        CHECK_THROWS(net.finalize());
    }
    SUBCASE("street in two roundabouts") {
        Network net;
        net.contracted = true;
        net.add_street("a", 100, 3);
        net.add_roundabout("R1", 3, {0});
        net.add_roundabout("R2", 3, {0});
        CHECK_THROWS(net.finalize());
    }
}
