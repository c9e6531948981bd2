#include "traffic/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>

namespace traffic {

namespace {

struct Candidate {
    int route_idx;
    std::vector<PlanEvent> events;
};

// All timing assignments of one route that satisfy the per-vehicle rules
// (origin enter at depart, windows, exit ranges, street order) on their own.
void enumerate_timings(const Network& net, const VehicleState& vs, const Route& route,
                       int route_idx, Step horizon, std::vector<Candidate>& out) {
    const std::size_t m = route.streets.size();
    std::vector<PlanEvent> events(m);

    auto rec = [&](auto&& self, std::size_t i, Step entered) -> void {
        const Street& st = net.street(route.streets[i]);
        events[i].street = route.streets[i];
        events[i].enter = entered;
        if (i + 1 == m) {
            for (Step x = entered + 1; x <= entered + st.max_tt && x <= horizon; ++x) {
                events[i].exit = x;
                out.push_back({route_idx, events});
            }
            return;
        }
        const Window& w = route.windows[i + 1];
        Step lo = std::max(vs.depart + w.min_enter, entered + 1);
        Step hi = std::min({vs.depart + w.max_enter, entered + st.max_tt, horizon});
        for (Step x = lo; x <= hi; ++x) {
            events[i].exit = x;
            self(self, i + 1, x);
        }
    };
    if (vs.depart <= horizon) rec(rec, 0, vs.depart);
}

struct EventSet {
    // flat event list; occupancy recomputed by direct counting
    std::vector<PlanEvent> events;                 // every vehicle
    std::vector<std::pair<std::size_t, std::size_t>> controlled_spans;  // per vehicle

    int occupancy(int street, Step t) const {
        int n = 0;
        for (const auto& ev : events) {
            if (ev.street != street) continue;
            if (ev.enter <= t) ++n;
            if (ev.exit <= t) --n;
        }
        return n;
    }
};

Step tier_time(const Street& s, int n) {
    if (n < s.light_below) return s.light_tt;
    if (n < s.heavy_from) return s.medium_tt;
    return s.heavy_tt;
}

bool feasible(const SchedulingInstance& inst, const EventSet& es) {
    const Network& net = inst.network;
    // r11 and r13 at controlled enter events
    for (auto [lo, hi] : es.controlled_spans) {
        for (std::size_t i = lo; i < hi; ++i) {
            const PlanEvent& ev = es.events[i];
            const Street& st = net.street(ev.street);
            int n = es.occupancy(ev.street, ev.enter);
            if (n > st.capacity) return false;
            if (ev.exit - ev.enter < tier_time(st, n)) return false;
        }
    }
    // r14 at every enter event into a roundabout street
    for (const auto& ev : es.events) {
        int rb = net.roundabout_of[ev.street];
        if (rb < 0) continue;
        int sum = 0;
        for (int m : net.roundabouts[rb].members) sum += es.occupancy(m, ev.enter);
        if (sum > net.roundabouts[rb].capacity) return false;
    }
    return true;
}

Objective score(const SchedulingInstance& inst, const EventSet& es,
                const std::vector<int>& chosen_route) {
    Objective obj;
    for (std::size_t k = 0; k < inst.controlled.size(); ++k)
        obj.primary += inst.controlled[k].routes[chosen_route[k]].cost;
    std::set<std::pair<int, Step>> instants;
    for (const auto& ev : es.events) instants.insert({ev.street, ev.enter});
    for (auto [street, t] : instants) obj.secondary += es.occupancy(street, t);
    return obj;
}

}  // namespace

SolveResult brute_force_solve(const SchedulingInstance& inst) {
    if (inst.controlled.size() > 3 || inst.network.streets.size() > 8 ||
        inst.horizon > 15)
        throw std::invalid_argument(
            "brute force guard: at most 3 controlled vehicles, 8 streets, horizon 15");
    inst.validate();
    auto t0 = std::chrono::steady_clock::now();

    const std::size_t n = inst.controlled.size();
    std::vector<std::vector<Candidate>> candidates(n);
    for (std::size_t k = 0; k < n; ++k) {
        const VehicleState& vs = inst.controlled[k];
        // Deterministic order: routes by (cost, id), timings ascending.
        std::vector<int> order(vs.routes.size());
        for (std::size_t r = 0; r < order.size(); ++r) order[r] = static_cast<int>(r);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (vs.routes[a].cost != vs.routes[b].cost)
                return vs.routes[a].cost < vs.routes[b].cost;
            return vs.routes[a].id < vs.routes[b].id;
        });
        for (int r : order)
            enumerate_timings(inst.network, vs, vs.routes[r], r, inst.horizon,
                              candidates[k]);
    }

    SolveResult res;
    auto finish = [&](SolveStatus status) {
        res.status = status;
        res.wall_secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        return res;
    };

    double leaves = 1.0;
    std::size_t blame = 0;
    bool any_empty = false;
    for (std::size_t k = 0; k < n; ++k) {
        if (candidates[k].empty() && !any_empty) {
            any_empty = true;
            blame = k;
        }
        leaves *= static_cast<double>(candidates[k].size());
    }
    if (any_empty) {
        res.blocked_vehicle = inst.controlled[blame].id;
        return finish(SolveStatus::infeasible);
    }
    if (leaves > 5e7)
        throw std::runtime_error("brute force: assignment space too large");

    EventSet es;
    es.controlled_spans.resize(n);
    // Simulated events are constants at the tail of the list.
    std::vector<PlanEvent> sim_events;
    for (const auto& vs : inst.simulated)
        for (const auto& ev : vs.fixed) sim_events.push_back({ev.street, ev.enter, ev.exit});

    bool found = false;
    Objective best;
    std::vector<int> best_choice(n, -1);
    std::vector<int> best_cand(n, -1);
    std::vector<int> pick(n, -1);

    auto rec = [&](auto&& self, std::size_t k) -> void {
        if (k == n) {
            es.events.clear();
            for (std::size_t j = 0; j < n; ++j) {
                es.controlled_spans[j] = {es.events.size(),
                                          es.events.size() +
                                              candidates[j][pick[j]].events.size()};
                for (const auto& ev : candidates[j][pick[j]].events) es.events.push_back(ev);
            }
            es.events.insert(es.events.end(), sim_events.begin(), sim_events.end());
            if (!feasible(inst, es)) return;
            std::vector<int> chosen(n);
            for (std::size_t j = 0; j < n; ++j) chosen[j] = candidates[j][pick[j]].route_idx;
            Objective obj = score(inst, es, chosen);
            if (!found || obj < best) {
                found = true;
                best = obj;
                best_choice = chosen;
                for (std::size_t j = 0; j < n; ++j) best_cand[j] = pick[j];
            }
            return;
        }
        for (std::size_t c = 0; c < candidates[k].size(); ++c) {
            pick[k] = static_cast<int>(c);
            self(self, k + 1);
        }
    };
    rec(rec, 0);

    if (!found) {
        // Joint infeasibility: name the vehicle with the tightest candidate set.
        std::size_t tightest = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (candidates[k].size() < candidates[tightest].size()) tightest = k;
        res.blocked_vehicle = inst.controlled[tightest].id;
        return finish(SolveStatus::infeasible);
    }

    res.objective = best;
    for (std::size_t k = 0; k < n; ++k) {
        VehiclePlan plan;
        plan.vehicle = inst.controlled[k].id;
        plan.route = inst.controlled[k].routes[best_choice[k]].id;
        plan.events = candidates[k][best_cand[k]].events;
        res.schedule.plans.push_back(std::move(plan));
    }
    for (const auto& vs : inst.simulated) {
        VehiclePlan plan;
        plan.vehicle = vs.id;
        plan.route = vs.routes.front().id;
        for (const auto& ev : vs.fixed) plan.events.push_back({ev.street, ev.enter, ev.exit});
        res.schedule.plans.push_back(std::move(plan));
    }
    return finish(SolveStatus::proven);
}

}  // namespace traffic
