#pragma once

// Fixture builders and randomized generators shared by the unit and
// acceptance suites.

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "traffic/network.hpp"
#include "traffic/oracle.hpp"
#include "traffic/preprocess.hpp"
#include "traffic/scheduler.hpp"

namespace testgen {

using namespace traffic;

/// Linear chain s0 -> s1 -> ... with the given lengths and capacities.
inline Network chain_network(const std::vector<double>& lengths,
                             const std::vector<int>& caps, double step_seconds = 5.0) {
    Network net;
    net.step_seconds = step_seconds;
    for (std::size_t i = 0; i < lengths.size(); ++i)
        net.add_street("s" + std::to_string(i), lengths[i], caps[i]);
    for (std::size_t i = 0; i + 1 < lengths.size(); ++i)
        net.add_link(static_cast<int>(i), static_cast<int>(i + 1));
    net.finalize();
    return net;
}

inline VehicleState controlled_vehicle(const Network& net, const std::string& id,
                                       Step depart, const std::string& origin,
                                       const std::string& destination) {
    VehicleState vs;
    vs.id = id;
    vs.klass = 1;
    vs.depart = depart;
    vs.origin = origin;
    vs.destination = destination;
    (void)net;
    return vs;
}

/// Class-0 vehicle whose fixed schedule chains through `events` =
/// {(street id, enter, exit), ...}.
inline VehicleState simulated_vehicle(const Network& net, const std::string& id,
                                      const std::vector<std::tuple<std::string, Step, Step>>& events) {
    VehicleState vs;
    vs.id = id;
    vs.klass = 0;
    vs.origin = std::get<0>(events.front());
    vs.destination = std::get<0>(events.back());
    vs.depart = std::get<1>(events.front());
    Route r;
    r.id = id + ":fixed";
    r.vehicle = id;
    for (const auto& [sid, in, out] : events) {
        int s = net.street_index(sid);
        r.streets.push_back(s);
        vs.fixed.push_back({s, in, out});
    }
    r.windows.assign(r.streets.size(), Window{0, 0});
    vs.routes.push_back(std::move(r));
    return vs;
}

/// One-way junction grid with alternating directions: `rows` x `cols`
/// junctions, one street per edge (rows alternate east/west, columns
/// alternate south/north). Strongly connected for rows, cols >= 2 with the
/// default 5 x 6 shape.
struct GridSpec {
    int rows = 5;
    int cols = 6;
    double row_len = 140.0;
    double col_len = 120.0;
    int cap = 10;
    double step_seconds = 5.0;
    double mid_row_len = 0.0;  // > 0: override the middle row's lengths
    int mid_row_cap = 0;       // > 0: override the middle row's capacities
};

inline Network grid_network(const GridSpec& g) {
    Network net;
    net.step_seconds = g.step_seconds;
    struct Ends { int tail_j, head_j; };
    std::vector<Ends> ends;
    auto junction = [&](int r, int c) { return r * g.cols + c; };
    const int mid = g.rows / 2;

    for (int r = 0; r < g.rows; ++r) {
        bool east = (r % 2 == 0);
        for (int c = 0; c + 1 < g.cols; ++c) {
            double len = (r == mid && g.mid_row_len > 0) ? g.mid_row_len : g.row_len;
            int cap = (r == mid && g.mid_row_cap > 0) ? g.mid_row_cap : g.cap;
            std::string id = "r" + std::to_string(r) + "c" + std::to_string(c) +
                             (east ? "E" : "W");
            net.add_street(id, len, cap);
            if (east)
                ends.push_back({junction(r, c), junction(r, c + 1)});
            else
                ends.push_back({junction(r, c + 1), junction(r, c)});
        }
    }
    for (int c = 0; c < g.cols; ++c) {
        bool south = (c % 2 == 0);
        for (int r = 0; r + 1 < g.rows; ++r) {
            std::string id = "v" + std::to_string(r) + "c" + std::to_string(c) +
                             (south ? "S" : "N");
            net.add_street(id, g.col_len, g.cap);
            if (south)
                ends.push_back({junction(r, c), junction(r + 1, c)});
            else
                ends.push_back({junction(r + 1, c), junction(r, c)});
        }
    }
    for (std::size_t a = 0; a < ends.size(); ++a)
        for (std::size_t b = 0; b < ends.size(); ++b)
            if (a != b && ends[a].head_j == ends[b].tail_j &&
                !(ends[a].tail_j == ends[b].head_j && ends[a].head_j == ends[b].tail_j))
                net.add_link(static_cast<int>(a), static_cast<int>(b));
    net.finalize();
    return net;
}

/// Small random connected digraph for randomized instance generation.
inline Network random_network(std::mt19937& rng, int max_streets, bool desk_scale) {
    std::uniform_int_distribution<int> n_dist(3, max_streets);
    const int n = n_dist(rng);
    const std::vector<double> lengths =
        desk_scale ? std::vector<double>{40, 60, 80} : std::vector<double>{40, 80, 125, 150, 250};
    std::uniform_int_distribution<std::size_t> len_pick(0, lengths.size() - 1);
    std::uniform_int_distribution<int> cap_pick(desk_scale ? 1 : 2, desk_scale ? 4 : 12);

    Network net;
    net.step_seconds = 5.0;
    for (int i = 0; i < n; ++i)
        net.add_street("s" + std::to_string(i), lengths[len_pick(rng)], cap_pick(rng));
    for (int i = 0; i + 1 < n; ++i) net.add_link(i, i + 1);  // spine
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> extra_dist(0, n);
    int extra = extra_dist(rng);
    for (int e = 0; e < extra; ++e) {
        int a = pick(rng), b = pick(rng);
        if (a != b) net.add_link(a, b);
    }
    net.finalize();
    return net;
}

/// Random schedule instance built through the real preprocessor. Desk-scale
/// instances respect the brute-force guard and keep the oracle's assignment
/// space enumerable. Returns false when the draw was unusable (unreachable
/// pair, horizon overflow); callers redraw.
inline bool random_instance(std::mt19937& rng, bool desk_scale, SchedulingInstance& out) {
    const int max_streets = desk_scale ? 8 : 20;
    Network net = random_network(rng, max_streets, desk_scale);
    const int n = static_cast<int>(net.streets.size());
    std::uniform_int_distribution<int> pick(0, n - 1);

    PreprocessConfig prep;
    prep.k_routes = desk_scale ? 3 : 6;
    prep.path_limit = desk_scale ? 20 : 60;
    prep.horizon_cap = desk_scale ? 15 : 400;

    std::vector<VehicleState> vehicles;
    std::uniform_int_distribution<int> sim_dist(0, desk_scale ? 2 : 6);
    std::uniform_int_distribution<int> veh_dist(1, desk_scale ? 3 : 5);
    std::uniform_int_distribution<Step> depart_dist(0, desk_scale ? 3 : 12);

    const int n_sim = sim_dist(rng);
    for (int v = 0; v < n_sim; ++v) {
        // Random link walk with a plausible enter/exit chain.
        int at = pick(rng);
        Step t = depart_dist(rng);
        VehicleState vs;
        vs.id = "sim" + std::to_string(v);
        vs.klass = 0;
        vs.depart = t;
        Route r;
        r.id = vs.id + ":fixed";
        r.vehicle = vs.id;
        std::uniform_int_distribution<int> hop_dist(1, desk_scale ? 3 : 6);
        int hops = hop_dist(rng);
        std::vector<char> used(n, 0);
        for (int h = 0; h < hops; ++h) {
            if (used[at]) break;
            used[at] = 1;
            const Street& st = net.street(at);
            std::uniform_int_distribution<Step> stay(travel_time(st, 1), travel_time(st, 1) + 2);
            Step exit = t + stay(rng);
            if (exit > prep.horizon_cap - 1) break;
            r.streets.push_back(at);
            vs.fixed.push_back({at, t, exit});
            t = exit;
            if (net.out[at].empty()) break;
            std::uniform_int_distribution<std::size_t> next(0, net.out[at].size() - 1);
            int cand = net.out[at][next(rng)];
            if (used[cand]) break;
            at = cand;
        }
        if (vs.fixed.empty()) continue;
        vs.origin = net.street(vs.fixed.front().street).id;
        vs.destination = net.street(vs.fixed.back().street).id;
        r.windows.assign(r.streets.size(), Window{0, 0});
        vs.routes.push_back(std::move(r));
        vehicles.push_back(std::move(vs));
    }

    const int n_controlled = veh_dist(rng);
    for (int v = 0; v < n_controlled; ++v) {
        VehicleState vs;
        vs.id = "v" + std::to_string(v);
        vs.klass = 1;
        vs.depart = depart_dist(rng);
        vs.origin = net.street(pick(rng)).id;
        vs.destination = net.street(pick(rng)).id;
        vehicles.push_back(std::move(vs));
    }

    try {
        out = build_instance(net, vehicles, prep);
    } catch (const std::exception&) {
        return false;
    }

    if (desk_scale) {
        // Keep the oracle's cross product enumerable.
        double leaves = 1.0;
        for (const auto& vs : out.controlled) {
            double cands = 0.0;
            for (const auto& r : vs.routes) {
                double per_route = 1.0;
                for (std::size_t i = 1; i < r.windows.size(); ++i)
                    per_route *= r.windows[i].max_enter - r.windows[i].min_enter + 1;
                const Street& last = out.network.street(r.streets.back());
                per_route *= last.max_tt;
                cands += per_route;
            }
            leaves *= cands;
        }
        if (leaves > 2e5) return false;
    }
    return true;
}

}  // namespace testgen
