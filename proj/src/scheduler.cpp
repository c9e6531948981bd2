#include "traffic/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace traffic {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::proven: return "proven";
        case SolveStatus::anytime: return "anytime";
        case SolveStatus::infeasible: return "infeasible";
        default: return "timeout";
    }
}

const VehiclePlan* Schedule::find(const std::string& vehicle) const {
    for (const auto& p : plans)
        if (p.vehicle == vehicle) return &p;
    return nullptr;
}

OccupancyLedger SchedulingInstance::base_ledger() const {
    OccupancyLedger ledger(network.streets.size());
    for (const auto& vs : simulated)
        for (const auto& ev : vs.fixed) ledger.add_interval(ev.street, ev.enter, ev.exit);
    return ledger;
}

namespace {

void validate_route(const Network& net, const VehicleState& vs, const Route& r,
                    Step horizon) {
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("vehicle '" + vs.id + "', route '" + r.id + "': " + what);
    };
    if (r.streets.empty()) fail("route has no streets");
    if (r.windows.size() != r.streets.size()) fail("window count differs from street count");
    std::unordered_set<int> seen;
    for (std::size_t i = 0; i < r.streets.size(); ++i) {
        int s = r.streets[i];
        if (s < 0 || s >= static_cast<int>(net.streets.size())) fail("unknown street");
        if (!seen.insert(s).second) fail("route repeats street '" + net.street(s).id + "'");
        if (i > 0 && !net.has_link(r.streets[i - 1], s))
            fail("streets '" + net.street(r.streets[i - 1]).id + "' and '" +
                 net.street(s).id + "' are not linked");
    }
    if (!vs.origin.empty() && net.street(r.streets.front()).id != vs.origin)
        fail("route does not start at the vehicle origin");
    if (!vs.destination.empty() && net.street(r.streets.back()).id != vs.destination)
        fail("route does not end at the vehicle destination");
    if (r.windows.front().min_enter != 0) fail("first window must start at 0");
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
        const Window& w = r.windows[i];
        if (w.min_enter > w.max_enter) fail("window has min_enter > max_enter");
        if (i > 0 && w.min_enter < r.windows[i - 1].min_enter)
            fail("min_enter must be non-decreasing along the route");
        if (vs.depart + w.max_enter > horizon) fail("window exceeds the horizon");
    }
}

}  // namespace

void SchedulingInstance::validate() const {
    if (horizon < 0) throw std::runtime_error("horizon must be nonnegative");
    std::unordered_set<std::string> ids;
    for (const auto& vs : controlled) {
        if (!ids.insert(vs.id).second)
            throw std::runtime_error("duplicate vehicle id '" + vs.id + "'");
        if (vs.klass != 1)
            throw std::runtime_error("vehicle '" + vs.id + "' listed as controlled but has class 0");
        if (vs.depart < 0)
            throw std::runtime_error("vehicle '" + vs.id + "': depart step must be nonnegative");
        if (vs.routes.empty())
            throw std::runtime_error("controlled vehicle '" + vs.id + "' has no candidate route");
        if (!vs.fixed.empty())
            throw std::runtime_error("controlled vehicle '" + vs.id + "' carries a fixed schedule");
        for (const auto& r : vs.routes) validate_route(network, vs, r, horizon);
    }
    for (const auto& vs : simulated) {
        if (!ids.insert(vs.id).second)
            throw std::runtime_error("duplicate vehicle id '" + vs.id + "'");
        if (vs.klass != 0)
            throw std::runtime_error("vehicle '" + vs.id + "' listed as simulated but has class 1");
        if (vs.routes.size() != 1)
            throw std::runtime_error("simulated vehicle '" + vs.id + "' must have exactly one route");
        const Route& r = vs.routes.front();
        if (vs.fixed.size() != r.streets.size())
            throw std::runtime_error("simulated vehicle '" + vs.id + "' has an incomplete fixed schedule");
        for (std::size_t i = 0; i < vs.fixed.size(); ++i) {
            const FixedEvent& ev = vs.fixed[i];
            if (ev.street != r.streets[i])
                throw std::runtime_error("simulated vehicle '" + vs.id +
                                         "': fixed events do not follow the route");
            if (ev.enter < 0 || ev.exit <= ev.enter || ev.exit > horizon)
                throw std::runtime_error("simulated vehicle '" + vs.id +
                                         "': fixed events must lie within [0, horizon]");
        }
    }
}

// ---------------------------------------------------------------------------
// check(): independent validator
// ---------------------------------------------------------------------------

namespace {

struct EventIndex {
    std::vector<std::vector<Step>> enters;  // per street, sorted
    std::vector<std::vector<Step>> exits;

    explicit EventIndex(std::size_t n) : enters(n), exits(n) {}

    void add(int street, Step in, Step out) {
        enters[street].push_back(in);
        exits[street].push_back(out);
    }
    void sort_all() {
        for (auto& v : enters) std::sort(v.begin(), v.end());
        for (auto& v : exits) std::sort(v.begin(), v.end());
    }
    int occupancy(int street, Step t) const {
        const auto& in = enters[street];
        const auto& out = exits[street];
        return static_cast<int>(
            (std::upper_bound(in.begin(), in.end(), t) - in.begin()) -
            (std::upper_bound(out.begin(), out.end(), t) - out.begin()));
    }
};

const Route* find_route(const VehicleState& vs, const std::string& route_id) {
    for (const auto& r : vs.routes)
        if (r.id == route_id) return &r;
    return nullptr;
}

}  // namespace

std::vector<Violation> check(const Schedule& schedule, const SchedulingInstance& inst) {
    const Network& net = inst.network;
    std::vector<Violation> out;
    auto flag = [&](std::string rule, const std::string& vehicle, int street, Step step,
                    std::string detail) {
        out.push_back({std::move(rule), vehicle, street >= 0 ? net.street(street).id : "",
                       step, std::move(detail)});
    };

    std::unordered_map<std::string, const VehicleState*> known;
    for (const auto& vs : inst.controlled) known[vs.id] = &vs;
    for (const auto& vs : inst.simulated) known[vs.id] = &vs;
    for (const auto& plan : schedule.plans)
        if (!known.count(plan.vehicle))
            flag("r1", plan.vehicle, -1, 0, "plan for a vehicle not in the instance");

    // Structural checks per controlled vehicle; r11/r13/r14 need the full
    // event set and run afterwards.
    std::vector<std::pair<const VehiclePlan*, const VehicleState*>> checked_plans;
    for (const auto& vs : inst.controlled) {
        const VehiclePlan* plan = schedule.find(vs.id);
        if (!plan) {
            flag("r1", vs.id, -1, 0, "no plan for controlled vehicle");
            continue;
        }
        const Route* route = find_route(vs, plan->route);
        if (!route) {
            flag("r1", vs.id, -1, 0, "chosen route '" + plan->route + "' is not a candidate");
            continue;
        }
        bool aligned = plan->events.size() == route->streets.size();
        if (aligned)
            for (std::size_t i = 0; i < plan->events.size(); ++i)
                if (plan->events[i].street != route->streets[i]) aligned = false;
        if (!aligned) {
            flag("r4", vs.id, -1, 0, "events do not cover the chosen route's streets in order");
            continue;
        }
        if (plan->events.front().enter != vs.depart)
            flag("r5", vs.id, plan->events.front().street, plan->events.front().enter,
                 "origin entered at a step other than the depart step");
        for (std::size_t i = 0; i < plan->events.size(); ++i) {
            const PlanEvent& ev = plan->events[i];
            const Street& st = net.street(ev.street);
            if (i > 0) {
                Step lo = vs.depart + route->windows[i].min_enter;
                Step hi = vs.depart + route->windows[i].max_enter;
                if (ev.enter < lo || ev.enter > hi || ev.enter > inst.horizon)
                    flag("r4", vs.id, ev.street, ev.enter, "enter outside the route window");
            }
            if (!(ev.enter < ev.exit && ev.exit <= ev.enter + st.max_tt) ||
                ev.exit > inst.horizon)
                flag("r6", vs.id, ev.street, ev.exit,
                     "exit not in (enter, enter + max travel time] within the horizon");
            if (i + 1 < plan->events.size() && ev.exit != plan->events[i + 1].enter)
                flag("r12", vs.id, ev.street, ev.exit,
                     "exit differs from the next street's enter");
        }
        checked_plans.emplace_back(plan, &vs);
    }

    std::vector<std::pair<const VehiclePlan*, const VehicleState*>> simulated_plans;
    for (const auto& vs : inst.simulated) {
        const VehiclePlan* plan = schedule.find(vs.id);
        if (!plan) {
            flag("r2", vs.id, -1, 0, "simulated vehicle missing from the schedule");
            continue;
        }
        bool same = plan->events.size() == vs.fixed.size();
        if (same)
            for (std::size_t i = 0; i < vs.fixed.size(); ++i)
                if (!(plan->events[i].street == vs.fixed[i].street &&
                      plan->events[i].enter == vs.fixed[i].enter &&
                      plan->events[i].exit == vs.fixed[i].exit))
                    same = false;
        if (!same) {
            flag("r2", vs.id, -1, 0, "simulated vehicle was re-timed");
            continue;
        }
        simulated_plans.emplace_back(plan, &vs);
    }

    EventIndex idx(net.streets.size());
    for (const auto& [plan, vs] : checked_plans)
        for (const auto& ev : plan->events) idx.add(ev.street, ev.enter, ev.exit);
    for (const auto& [plan, vs] : simulated_plans)
        for (const auto& ev : plan->events) idx.add(ev.street, ev.enter, ev.exit);
    idx.sort_all();

    for (const auto& [plan, vs] : checked_plans) {
        for (const auto& ev : plan->events) {
            const Street& st = net.street(ev.street);
            int occ = idx.occupancy(ev.street, ev.enter);
            Step tt = travel_time(st, occ);
            if (ev.exit - ev.enter < tt)
                flag("r11", vs->id, ev.street, ev.enter,
                     "exit earlier than enter + travel time at the enter occupancy");
            if (occ > st.capacity)
                flag("r13", vs->id, ev.street, ev.enter, "street over capacity at enter");
        }
    }
    auto check_r14 = [&](const VehiclePlan* plan, const VehicleState* vs) {
        for (const auto& ev : plan->events) {
            int rb = net.roundabout_of[ev.street];
            if (rb < 0) continue;
            int sum = 0;
            for (int m : net.roundabouts[rb].members) sum += idx.occupancy(m, ev.enter);
            if (sum > net.roundabouts[rb].capacity)
                flag("r14", vs->id, ev.street, ev.enter, "roundabout over capacity at enter");
        }
    };
    for (const auto& [plan, vs] : checked_plans) check_r14(plan, vs);
    for (const auto& [plan, vs] : simulated_plans) check_r14(plan, vs);

    return out;
}

Objective evaluate(const Schedule& schedule, const SchedulingInstance& inst) {
    auto violations = check(schedule, inst);
    if (!violations.empty()) {
        const Violation& v = violations.front();
        throw std::runtime_error("schedule is infeasible: " + v.rule + " vehicle '" +
                                 v.vehicle + "' street '" + v.street + "' step " +
                                 std::to_string(v.step) + " (" + v.detail + ") plus " +
                                 std::to_string(violations.size() - 1) + " more");
    }

    Objective obj;
    for (const auto& vs : inst.controlled) {
        const VehiclePlan* plan = schedule.find(vs.id);
        const Route* route = find_route(vs, plan->route);
        obj.primary += route->cost;
    }

    EventIndex idx(inst.network.streets.size());
    std::set<std::pair<int, Step>> instants;
    for (const auto& plan : schedule.plans)
        for (const auto& ev : plan.events) {
            idx.add(ev.street, ev.enter, ev.exit);
            instants.insert({ev.street, ev.enter});
        }
    idx.sort_all();
    for (const auto& [street, t] : instants) obj.secondary += idx.occupancy(street, t);
    return obj;
}

// ---------------------------------------------------------------------------
// solve(): branch-and-bound portfolio
// ---------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

constexpr Cost kObjClamp = 0x7FFFFFFF;

std::uint64_t pack_objective(const Objective& o) {
    Cost p = std::min(std::max<Cost>(o.primary, 0), kObjClamp);
    Cost s = std::min(std::max<Cost>(o.secondary, 0), kObjClamp);
    return (static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint64_t>(s);
}

struct CancelSearch {};

struct SharedState {
    std::mutex mu;
    bool has_incumbent = false;
    Objective best;
    Schedule best_schedule;
    std::atomic<std::uint64_t> packed{~0ull};
    std::atomic<bool> cancel{false};
    std::atomic<unsigned long long> nodes{0};
    std::atomic<int> deepest{0};  // most vehicles ever fully placed
    bool completed = false;       // some worker exhausted its search space
    Clock::time_point deadline;
    bool has_deadline = false;
};

struct SlotInfo {
    const VehicleState* vs;
    std::vector<const Route*> routes;  // sorted by (cost, id)
    Cost min_cost = 0;
    int min_streets = 0;
};

struct InstantInfo {
    int n = 0;
    int controlled_enters = 0;
};

struct Stay {
    Step in;
    Step out;
};

// Private search workspace; each worker owns one.
struct SearchContext {
    const SchedulingInstance* inst;
    const Network* net;
    SharedState* shared;
    std::vector<SlotInfo>* slots;
    OccupancyLedger base;
    std::vector<std::map<Step, InstantInfo>> instants;   // per street
    std::vector<std::vector<Stay>> stays;                // per street, controlled only
    std::vector<std::map<Step, int>> rab_enters;         // per roundabout
    Cost secondary_now = 0;
    std::vector<Cost> suffix_min_cost;     // over slots k..end
    std::vector<Cost> suffix_min_streets;
    // current assignment
    std::vector<int> chosen_route;
    std::vector<std::vector<PlanEvent>> events;
    Cost placed_cost = 0;
    unsigned long long local_nodes = 0;

    void poll() {
        if ((++local_nodes & 0x3FF) == 0) {
            shared->nodes.fetch_add(1024, std::memory_order_relaxed);
            if (shared->has_deadline && Clock::now() >= shared->deadline)
                shared->cancel.store(true, std::memory_order_relaxed);
        }
        if (shared->cancel.load(std::memory_order_relaxed)) throw CancelSearch{};
    }

    int occ_all(int street, Step t) const {
        int occ = base.occupancy(street, t);
        for (const Stay& st : stays[street])
            if (st.in <= t && t < st.out) ++occ;
        return occ;
    }

    int rab_sum(int rb, Step t) const {
        int sum = 0;
        for (int m : net->roundabouts[rb].members) sum += occ_all(m, t);
        return sum;
    }
};

struct IntervalUndo {
    int street;
    Step in, out;
    std::vector<Step> bumped;  // pre-existing instants raised by this stay
    bool created_instant = false;
    Cost created_n = 0;
    bool rab_touched = false;
    int rab = -1;
    bool rab_created = false;
};

// Books a controlled stay on `street` and re-validates every constraint the
// new interval can affect (r11/r13 on this street, r14 on the roundabout).
// On failure the context is left untouched.
bool push_interval(SearchContext& ctx, int slot, int street, Step in, Step out,
                   IntervalUndo& undo) {
    const Street& st = ctx.net->street(street);
    undo.street = street;
    undo.in = in;
    undo.out = out;
    undo.bumped.clear();
    undo.created_instant = false;
    undo.rab_touched = false;

    auto& inst_map = ctx.instants[street];
    ctx.stays[street].push_back({in, out});

    // The stay raises occupancy at every grounded instant it covers.
    for (auto it = inst_map.lower_bound(in); it != inst_map.end() && it->first < out; ++it) {
        it->second.n += 1;
        ctx.secondary_now += 1;
        undo.bumped.push_back(it->first);
    }
    auto here = inst_map.find(in);
    if (here == inst_map.end()) {
        InstantInfo info;
        info.n = ctx.occ_all(street, in);
        info.controlled_enters = 1;
        ctx.secondary_now += info.n;
        undo.created_instant = true;
        undo.created_n = info.n;
        here = inst_map.emplace(in, info).first;
    } else {
        here->second.controlled_enters += 1;
    }

    int rb = ctx.net->roundabout_of[street];
    if (rb >= 0) {
        undo.rab_touched = true;
        undo.rab = rb;
        auto [it, inserted] = ctx.rab_enters[rb].try_emplace(in, 0);
        it->second += 1;
        undo.rab_created = inserted;
    }

    auto rollback = [&]() {
        if (undo.rab_touched) {
            auto it = ctx.rab_enters[undo.rab].find(in);
            if (--it->second == 0 && undo.rab_created) ctx.rab_enters[undo.rab].erase(it);
        }
        if (undo.created_instant) {
            ctx.secondary_now -= undo.created_n;
            inst_map.erase(in);
        } else {
            inst_map.find(in)->second.controlled_enters -= 1;
        }
        for (Step t : undo.bumped) {
            inst_map.find(t)->second.n -= 1;
            ctx.secondary_now -= 1;
        }
        ctx.stays[street].pop_back();
    };

    // r13 at every controlled enter instant this stay covers (own included).
    for (auto it = inst_map.lower_bound(in); it != inst_map.end() && it->first < out; ++it) {
        if (it->second.controlled_enters > 0 && it->second.n > st.capacity) {
            rollback();
            return false;
        }
    }
    // r11 for every placed stay on this street entering inside [in, out).
    for (const Stay& other : ctx.stays[street]) {
        if (other.in < in || other.in >= out) continue;
        int n = inst_map.find(other.in)->second.n;
        if (other.out - other.in < travel_time(st, n)) {
            rollback();
            return false;
        }
    }
    // r14 at every enter instant (any vehicle class) into the roundabout
    // inside [in, out).
    if (rb >= 0) {
        const auto& rmap = ctx.rab_enters[rb];
        int rcap = ctx.net->roundabouts[rb].capacity;
        for (auto it = rmap.lower_bound(in); it != rmap.end() && it->first < out; ++it) {
            if (ctx.rab_sum(rb, it->first) > rcap) {
                rollback();
                return false;
            }
        }
    }

    ctx.events[slot].push_back({street, in, out});
    return true;
}

void pop_interval(SearchContext& ctx, int slot, const IntervalUndo& undo) {
    ctx.events[slot].pop_back();
    auto& inst_map = ctx.instants[undo.street];
    if (undo.rab_touched) {
        auto it = ctx.rab_enters[undo.rab].find(undo.in);
        if (--it->second == 0 && undo.rab_created) ctx.rab_enters[undo.rab].erase(it);
    }
    if (undo.created_instant) {
        ctx.secondary_now -= undo.created_n;
        inst_map.erase(undo.in);
    } else {
        inst_map.find(undo.in)->second.controlled_enters -= 1;
    }
    for (Step t : undo.bumped) {
        inst_map.find(t)->second.n -= 1;
        ctx.secondary_now -= 1;
    }
    ctx.stays[undo.street].pop_back();
}

// Lexicographic bound test against the shared incumbent.
bool bound_cut(const SearchContext& ctx, Cost lb_primary, Cost lb_secondary) {
    std::uint64_t packed = ctx.shared->packed.load(std::memory_order_relaxed);
    if (packed == ~0ull) return false;
    return pack_objective({lb_primary, lb_secondary}) >= packed;
}

void record_solution(SearchContext& ctx) {
    Objective obj{ctx.placed_cost, ctx.secondary_now};
    SharedState& sh = *ctx.shared;
    std::lock_guard<std::mutex> lock(sh.mu);
    if (sh.has_incumbent && obj >= sh.best) return;
    sh.has_incumbent = true;
    sh.best = obj;
    sh.packed.store(pack_objective(obj), std::memory_order_relaxed);
    Schedule sched;
    const auto& slots = *ctx.slots;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        VehiclePlan plan;
        plan.vehicle = slots[k].vs->id;
        plan.route = slots[k].routes[ctx.chosen_route[k]]->id;
        plan.events = ctx.events[k];
        sched.plans.push_back(std::move(plan));
    }
    for (const auto& vs : ctx.inst->simulated) {
        VehiclePlan plan;
        plan.vehicle = vs.id;
        plan.route = vs.routes.front().id;
        for (const auto& ev : vs.fixed) plan.events.push_back({ev.street, ev.enter, ev.exit});
        sched.plans.push_back(std::move(plan));
    }
    sh.best_schedule = std::move(sched);
}

void search_vehicle(SearchContext& ctx, int k);

// Explores enter/exit choices for route streets i.. with street i entered at
// e_i. Exits are the next street's enter (r12); the last street's exit is
// free inside (enter, enter + max_tt].
void search_streets(SearchContext& ctx, int k, const Route& route, std::size_t i,
                    Step e_i, Cost streets_left_bound) {
    ctx.poll();
    const int street = route.streets[i];
    const Street& st = ctx.net->street(street);
    const Step depart = (*ctx.slots)[k].vs->depart;
    // Occupancy at the candidate enter includes the vehicle itself.
    Step own_tt = travel_time(st, ctx.occ_all(street, e_i) + 1);
    const bool last = i + 1 == route.streets.size();

    Step lo, hi;
    if (last) {
        // Exits past enter + heavy_tt are dominated: the travel-time rule can
        // demand at most the heavy tier, and a longer stay only raises
        // occupancy. Shrinking a final exit never breaks a constraint.
        lo = e_i + std::max<Step>(own_tt, 1);
        hi = std::min<Step>(e_i + st.heavy_tt, ctx.inst->horizon);
    } else {
        const Window& w = route.windows[i + 1];
        lo = std::max({depart + w.min_enter, e_i + own_tt, e_i + 1});
        hi = std::min({depart + w.max_enter, e_i + st.max_tt, ctx.inst->horizon});
    }
    for (Step x = lo; x <= hi; ++x) {
        IntervalUndo undo;
        if (!push_interval(ctx, k, street, e_i, x, undo)) continue;
        Cost lb_s = ctx.secondary_now + streets_left_bound - 1 +
                    ctx.suffix_min_streets[k + 1];
        Cost lb_p = ctx.placed_cost + ctx.suffix_min_cost[k + 1];
        if (!bound_cut(ctx, lb_p, lb_s)) {
            if (last)
                search_vehicle(ctx, k + 1);
            else
                search_streets(ctx, k, route, i + 1, x, streets_left_bound - 1);
        }
        pop_interval(ctx, k, undo);
    }
}

void search_vehicle(SearchContext& ctx, int k) {
    ctx.poll();
    const auto& slots = *ctx.slots;
    if (k == static_cast<int>(slots.size())) {
        record_solution(ctx);
        return;
    }
    {
        int seen = ctx.shared->deepest.load(std::memory_order_relaxed);
        while (seen < k &&
               !ctx.shared->deepest.compare_exchange_weak(seen, k, std::memory_order_relaxed)) {
        }
    }
    const SlotInfo& slot = slots[k];
    if (slot.vs->depart > ctx.inst->horizon) return;
    for (std::size_t r = 0; r < slot.routes.size(); ++r) {
        const Route& route = *slot.routes[r];
        Cost lb_p = ctx.placed_cost + route.cost + ctx.suffix_min_cost[k + 1];
        std::uint64_t packed = ctx.shared->packed.load(std::memory_order_relaxed);
        if (packed != ~0ull && lb_p > static_cast<Cost>(packed >> 32))
            break;  // routes are cost-sorted; later ones are no cheaper
        ctx.chosen_route[k] = static_cast<int>(r);
        ctx.placed_cost += route.cost;
        search_streets(ctx, k, route, 0, slot.vs->depart,
                       static_cast<Cost>(route.streets.size()));
        ctx.placed_cost -= route.cost;
        ctx.chosen_route[k] = -1;
    }
}

SearchContext make_context(const SchedulingInstance& inst, SharedState& shared,
                           std::vector<SlotInfo>& slots) {
    SearchContext ctx;
    ctx.inst = &inst;
    ctx.net = &inst.network;
    ctx.shared = &shared;
    ctx.slots = &slots;
    ctx.base = inst.base_ledger();
    const std::size_t n_streets = inst.network.streets.size();
    ctx.instants.resize(n_streets);
    ctx.stays.resize(n_streets);
    ctx.rab_enters.resize(inst.network.roundabouts.size());
    for (const auto& vs : inst.simulated) {
        for (const auto& ev : vs.fixed) {
            ctx.instants[ev.street][ev.enter];  // ground the instant
            int rb = inst.network.roundabout_of[ev.street];
            if (rb >= 0) ctx.rab_enters[rb][ev.enter] += 1;
        }
    }
    for (std::size_t s = 0; s < n_streets; ++s)
        for (auto& [t, info] : ctx.instants[s]) {
            info.n = ctx.base.occupancy(static_cast<int>(s), t);
            ctx.secondary_now += info.n;
        }

    const std::size_t n = inst.controlled.size();
    ctx.chosen_route.assign(n, -1);
    ctx.events.assign(n, {});
    ctx.suffix_min_cost.assign(n + 1, 0);
    ctx.suffix_min_streets.assign(n + 1, 0);
    for (std::size_t k = n; k-- > 0;) {
        ctx.suffix_min_cost[k] = ctx.suffix_min_cost[k + 1] + slots[k].min_cost;
        ctx.suffix_min_streets[k] = ctx.suffix_min_streets[k + 1] + slots[k].min_streets;
    }
    return ctx;
}

// Worker A: depth-first branch and bound over (route, enter times).
void worker_dfs(const SchedulingInstance& inst, SharedState& shared,
                std::vector<SlotInfo>& slots) {
    SearchContext ctx = make_context(inst, shared, slots);
    bool complete = true;
    try {
        search_vehicle(ctx, 0);
    } catch (const CancelSearch&) {
        complete = false;
    }
    shared.nodes.fetch_add(ctx.local_nodes & 0x3FF, std::memory_order_relaxed);
    std::lock_guard<std::mutex> lock(shared.mu);
    if (complete) {
        shared.completed = true;
        shared.cancel.store(true, std::memory_order_relaxed);
    }
}

// Worker B: lower-bound-driven strategy. Route combinations are visited in
// ascending total-cost order; each is closed with the same timing search.
// Once the next combination's cost exceeds the incumbent's primary value the
// remaining space cannot contain a better solution.
void worker_lb(const SchedulingInstance& inst, SharedState& shared,
               std::vector<SlotInfo>& slots) {
    const std::size_t n = slots.size();

    struct Combo {
        Cost total;
        std::vector<int> ridx;
        bool operator>(const Combo& o) const {
            if (total != o.total) return total > o.total;
            return ridx > o.ridx;
        }
    };
    std::priority_queue<Combo, std::vector<Combo>, std::greater<>> heap;
    Combo first{0, std::vector<int>(n, 0)};
    for (std::size_t k = 0; k < n; ++k) first.total += slots[k].routes[0]->cost;
    heap.push(std::move(first));

    // With the routes of every vehicle fixed, the vehicle layer degenerates
    // to the timing search alone.
    std::vector<SlotInfo> fixed = slots;
    SearchContext cctx = make_context(inst, shared, fixed);

    bool complete = true;
    try {
        while (!heap.empty()) {
            cctx.poll();
            Combo combo = heap.top();
            heap.pop();
            std::uint64_t packed = shared.packed.load(std::memory_order_relaxed);
            if (packed != ~0ull && combo.total > static_cast<Cost>(packed >> 32)) break;

            for (std::size_t k = 0; k < n; ++k) {
                fixed[k].routes = {slots[k].routes[combo.ridx[k]]};
                fixed[k].min_cost = fixed[k].routes[0]->cost;
                fixed[k].min_streets = static_cast<int>(fixed[k].routes[0]->streets.size());
            }
            for (std::size_t k = n; k-- > 0;) {
                cctx.suffix_min_cost[k] = cctx.suffix_min_cost[k + 1] + fixed[k].min_cost;
                cctx.suffix_min_streets[k] = cctx.suffix_min_streets[k + 1] + fixed[k].min_streets;
            }
            search_vehicle(cctx, 0);

            // Successors: bump one coordinate; only positions whose suffix is
            // all-zero may advance, so each combination is generated once.
            for (std::size_t k = 0; k < n; ++k) {
                if (combo.ridx[k] + 1 < static_cast<int>(slots[k].routes.size())) {
                    Combo next = combo;
                    next.total += slots[k].routes[combo.ridx[k] + 1]->cost -
                                  slots[k].routes[combo.ridx[k]]->cost;
                    next.ridx[k] += 1;
                    heap.push(std::move(next));
                }
                if (combo.ridx[k] != 0) break;
            }
        }
    } catch (const CancelSearch&) {
        complete = false;
    }
    std::lock_guard<std::mutex> lock(shared.mu);
    if (complete) {
        shared.completed = true;
        shared.cancel.store(true, std::memory_order_relaxed);
    }
}

}  // namespace

SolveResult solve(const SchedulingInstance& inst, const SolveOptions& opts) {
    inst.validate();
    auto t0 = Clock::now();

    SolveResult res;
    res.status = SolveStatus::infeasible;

    // Simulated traffic alone can already break a roundabout capacity (r14
    // constrains every vehicle class); no controlled choice can repair that.
    {
        OccupancyLedger base = inst.base_ledger();
        for (const auto& vs : inst.simulated) {
            for (const auto& ev : vs.fixed) {
                int rb = inst.network.roundabout_of[ev.street];
                if (rb < 0) continue;
                if (roundabout_occupancy(inst.network, base, rb, ev.enter) >
                    inst.network.roundabouts[rb].capacity) {
                    res.blocked_vehicle = vs.id;
                    res.wall_secs = std::chrono::duration<double>(Clock::now() - t0).count();
                    return res;
                }
            }
        }
    }

    std::vector<SlotInfo> slots;
    slots.reserve(inst.controlled.size());
    for (const auto& vs : inst.controlled) {
        SlotInfo s;
        s.vs = &vs;
        for (const auto& r : vs.routes) s.routes.push_back(&r);
        std::sort(s.routes.begin(), s.routes.end(), [](const Route* a, const Route* b) {
            if (a->cost != b->cost) return a->cost < b->cost;
            return a->id < b->id;
        });
        s.min_cost = s.routes.front()->cost;
        s.min_streets = static_cast<int>(s.routes.front()->streets.size());
        for (const Route* r : s.routes)
            s.min_streets = std::min(s.min_streets, static_cast<int>(r->streets.size()));
        slots.push_back(std::move(s));
    }

    SharedState shared;
    if (opts.budget_secs > 0) {
        shared.deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                   std::chrono::duration<double>(opts.budget_secs));
        shared.has_deadline = true;
    }

    int workers = std::max(1, opts.workers);
    if (workers >= 2 && !slots.empty()) {
        std::thread tb(worker_lb, std::cref(inst), std::ref(shared), std::ref(slots));
        worker_dfs(inst, shared, slots);
        tb.join();
    } else {
        worker_dfs(inst, shared, slots);
    }

    res.nodes = shared.nodes.load();
    res.wall_secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (shared.has_incumbent) {
        res.status = shared.completed ? SolveStatus::proven : SolveStatus::anytime;
        res.schedule = std::move(shared.best_schedule);
        res.objective = shared.best;
    } else if (shared.completed) {
        res.status = SolveStatus::infeasible;
        int deepest = shared.deepest.load();
        res.blocked_vehicle = slots.empty() ? "" : slots[std::min<std::size_t>(
                                                       deepest, slots.size() - 1)]
                                                       .vs->id;
    } else {
        res.status = SolveStatus::timeout;
    }
    return res;
}

// ---------------------------------------------------------------------------
// build_instance
// ---------------------------------------------------------------------------

SchedulingInstance build_instance(const Network& contracted,
                                  const std::vector<VehicleState>& vehicles,
                                  const PreprocessConfig& cfg, Step clock) {
    SchedulingInstance inst;
    inst.network = contracted;

    OccupancyLedger ledger(contracted.streets.size());
    Step needed = 0;
    for (const auto& vs : vehicles) {
        if (vs.klass != 0) continue;
        for (const auto& ev : vs.fixed) {
            ledger.add_interval(ev.street, ev.enter, ev.exit);
            needed = std::max(needed, ev.exit);
        }
        inst.simulated.push_back(vs);
    }
    if (needed > cfg.horizon_cap)
        throw std::runtime_error("simulated schedule extends past the horizon cap");

    std::vector<VehicleState> pending;
    for (const auto& vs : vehicles) {
        if (vs.klass != 1) continue;
        VehicleState c = vs;
        c.depart = std::max(vs.depart, clock);
        c.routes = candidate_routes(contracted, c.id, contracted.street_index(c.origin),
                                    contracted.street_index(c.destination), ledger,
                                    c.depart, cfg);
        if (c.routes.empty())
            throw std::runtime_error("vehicle '" + c.id + "': no route from '" + c.origin +
                                     "' to '" + c.destination + "'");
        pending.push_back(std::move(c));
    }

    for (auto& c : pending) {
        std::vector<Route> usable;
        for (auto& r : c.routes) {
            Step last = c.depart + r.windows.back().max_enter +
                        contracted.street(r.streets.back()).max_tt;
            if (last <= cfg.horizon_cap) {
                needed = std::max(needed, last);
                usable.push_back(std::move(r));
            }
        }
        if (usable.empty())
            throw std::runtime_error("vehicle '" + c.id +
                                     "': every candidate route exceeds the horizon cap");
        c.routes = std::move(usable);
        inst.controlled.push_back(std::move(c));
    }

    inst.horizon = std::min(needed, cfg.horizon_cap);
    return inst;
}

}  // namespace traffic
