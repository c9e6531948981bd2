#include "traffic/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace traffic {

EpochOutcome step_epoch(EpochState& state, const Network& contracted,
                        const std::vector<VehicleState>& demand,
                        const ControllerConfig& cfg) {
    if (cfg.epoch_steps < 1) throw std::runtime_error("epoch_steps must be at least 1");

    while (state.next_arrival < demand.size() &&
           demand[state.next_arrival].depart <= state.clock) {
        const VehicleState& vs = demand[state.next_arrival];
        if (vs.klass != 1)
            throw std::runtime_error("controller demand must be controlled vehicles; '" +
                                     vs.id + "' has class 0");
        state.pending.push_back(state.next_arrival);
        ++state.next_arrival;
    }

    EpochOutcome outcome;
    outcome.stats.clock = state.clock;
    if (state.pending.empty()) {
        state.clock += cfg.epoch_steps;
        return outcome;
    }

    outcome.attempted = true;
    std::vector<std::size_t> batch = state.pending;
    outcome.stats.batch_size = static_cast<int>(batch.size());

    while (!batch.empty()) {
        std::vector<VehicleState> vehicles;
        vehicles.reserve(batch.size() + state.committed.size());
        for (std::size_t idx : batch) vehicles.push_back(demand[idx]);
        for (const CommittedPlan& cp : state.committed) {
            if (cp.events.back().exit <= state.clock) continue;  // already drained
            VehicleState sim;
            sim.id = cp.vehicle;
            sim.klass = 0;
            sim.depart = cp.events.front().enter;
            sim.origin = contracted.street(cp.route_streets.front()).id;
            sim.destination = contracted.street(cp.route_streets.back()).id;
            Route r;
            r.id = cp.route;
            r.vehicle = cp.vehicle;
            r.streets = cp.route_streets;
            r.windows.assign(cp.route_streets.size(), Window{0, 0});
            sim.routes.push_back(std::move(r));
            for (const PlanEvent& ev : cp.events)
                sim.fixed.push_back({ev.street, ev.enter, ev.exit});
            vehicles.push_back(std::move(sim));
        }

        SchedulingInstance instance = build_instance(contracted, vehicles, cfg.prep,
                                                     state.clock);
        SolveOptions opts;
        opts.budget_secs = cfg.budget_secs;
        opts.workers = cfg.workers;
        opts.seed = cfg.seed;
        SolveResult res = solve(instance, opts);
        outcome.stats.wall_secs += res.wall_secs;
        outcome.stats.nodes += res.nodes;
        outcome.stats.status = res.status;

        if (res.status == SolveStatus::timeout)
            throw ScheduleFailure("scheduler ran out of budget at step " +
                                  std::to_string(state.clock) +
                                  " without a schedule; raise --budget-secs");
        if (res.status == SolveStatus::infeasible) {
            std::string blocked = res.blocked_vehicle.empty()
                                      ? demand[batch.back()].id
                                      : res.blocked_vehicle;
            int& count = state.defer_count[blocked];
            if (++count > cfg.max_defer)
                throw ScheduleFailure("vehicle '" + blocked + "' deferred more than " +
                                      std::to_string(cfg.max_defer) +
                                      " times; demand cannot be admitted");
            outcome.deferred.push_back(blocked);
            outcome.stats.deferred += 1;
            std::erase_if(batch, [&](std::size_t idx) { return demand[idx].id == blocked; });
            continue;
        }

        // Commit the batch.
        for (std::size_t idx : batch) {
            const VehicleState& vs = demand[idx];
            const VehiclePlan* plan = res.schedule.find(vs.id);
            const VehicleState* ivs = nullptr;
            for (const auto& c : instance.controlled)
                if (c.id == vs.id) ivs = &c;
            const Route* route = nullptr;
            for (const auto& r : ivs->routes)
                if (r.id == plan->route) route = &r;
            CommittedPlan cp;
            cp.vehicle = vs.id;
            cp.route = plan->route;
            cp.depart_request = vs.depart;
            cp.route_streets = route->streets;
            cp.events = plan->events;
            state.committed.push_back(std::move(cp));
        }
        std::erase_if(state.pending, [&](std::size_t idx) {
            return std::find(batch.begin(), batch.end(), idx) != batch.end();
        });
        outcome.stats.committed = static_cast<int>(batch.size());
        outcome.stats.objective = res.objective;
        outcome.batch = std::move(res.schedule);
        outcome.instance = std::move(instance);
        break;
    }

    state.clock += cfg.epoch_steps;
    return outcome;
}

RunResult run(const Network& network, const std::vector<VehicleState>& demand,
              const ControllerConfig& cfg) {
    Network contracted = network.contracted ? network : contract_roundabouts(network);

    // Class-0 vehicles in the demand are traffic already inside: they enter
    // the committed set up front and constrain every epoch.
    RunResult result;
    EpochState state;
    std::vector<VehicleState> arrivals;
    for (const auto& vs : demand) {
        if (vs.klass == 0) {
            CommittedPlan cp;
            cp.vehicle = vs.id;
            cp.route = vs.routes.front().id;
            cp.depart_request = vs.depart;
            cp.route_streets = vs.routes.front().streets;
            for (const auto& ev : vs.fixed) cp.events.push_back({ev.street, ev.enter, ev.exit});
            state.committed.push_back(std::move(cp));
        } else {
            arrivals.push_back(vs);
        }
    }
    for (std::size_t i = 1; i < arrivals.size(); ++i)
        if (arrivals[i].depart < arrivals[i - 1].depart)
            throw std::runtime_error("demand must be sorted by depart step");

    while (state.next_arrival < arrivals.size() || !state.pending.empty()) {
        if (state.pending.empty() && state.next_arrival < arrivals.size()) {
            Step next = arrivals[state.next_arrival].depart;
            if (next > state.clock) {
                // jump to the first epoch boundary at or after the arrival
                Step hops = (next - state.clock + cfg.epoch_steps - 1) / cfg.epoch_steps;
                state.clock += hops * cfg.epoch_steps;
            }
        }
        EpochOutcome outcome = step_epoch(state, contracted, arrivals, cfg);
        if (outcome.attempted) result.epochs.push_back(outcome.stats);
    }

    result.plans = std::move(state.committed);
    std::sort(result.plans.begin(), result.plans.end(),
              [](const CommittedPlan& a, const CommittedPlan& b) {
                  if (a.depart_request != b.depart_request)
                      return a.depart_request < b.depart_request;
                  return a.vehicle < b.vehicle;
              });
    return result;
}

}  // namespace traffic
