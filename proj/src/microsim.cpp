#include "traffic/microsim.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "traffic/preprocess.hpp"

namespace traffic {

const char* to_string(SimEventKind k) {
    switch (k) {
        case SimEventKind::request: return "request";
        case SimEventKind::enter: return "enter";
        case SimEventKind::exit: return "exit";
        default: return "finish";
    }
}

namespace {

double tier_speed_mps(const Street& s, int occupancy) {
    switch (tier_of(s, occupancy)) {
        case Tier::light: return kLightKmh / 3.6;
        case Tier::medium: return kMediumKmh / 3.6;
        default: return kHeavyKmh / 3.6;
    }
}

struct Car {
    std::size_t plan;
    std::size_t leg = 0;     // index into route
    double pos = 0.0;        // meters into current street
    bool inside = false;
    bool done = false;
};

}  // namespace

EventLog simulate(const Network& net, const std::vector<SimPlan>& plans,
                  double tick_seconds, double max_seconds) {
    if (tick_seconds <= 0.0) throw std::runtime_error("tick_seconds must be positive");
    EventLog log;
    log.tick_seconds = tick_seconds;

    const std::size_t n_streets = net.streets.size();
    std::vector<Car> cars;
    std::vector<int> summary_of;  // plan -> summary index, -1 when rejected
    summary_of.assign(plans.size(), -1);

    for (std::size_t p = 0; p < plans.size(); ++p) {
        const SimPlan& plan = plans[p];
        std::string reason;
        if (plan.route.empty()) {
            reason = "empty route";
        } else {
            for (std::size_t i = 0; i < plan.route.size() && reason.empty(); ++i) {
                int s = plan.route[i];
                if (s < 0 || s >= static_cast<int>(n_streets))
                    reason = "unknown street";
                else if (i > 0 && !net.has_link(plan.route[i - 1], s))
                    reason = "streets '" + net.street(plan.route[i - 1]).id + "' and '" +
                             net.street(s).id + "' are not linked";
            }
        }
        if (!reason.empty()) {
            log.rejected.push_back({plan.vehicle, reason});
            continue;
        }
        VehicleSummary sum;
        sum.vehicle = plan.vehicle;
        sum.request_s = plan.request_s;
        sum.route_length_m = path_length(net, plan.route);
        summary_of[p] = static_cast<int>(log.vehicles.size());
        log.vehicles.push_back(sum);
        Car car;
        car.plan = p;
        cars.push_back(car);
        log.events.push_back({plan.request_s, plan.vehicle, SimEventKind::request, -1});
    }

    // Departure queues per origin street, FIFO by (request time, vehicle id).
    std::vector<std::deque<std::size_t>> depart_queue(n_streets);
    {
        std::vector<std::size_t> order(cars.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const SimPlan& pa = plans[cars[a].plan];
            const SimPlan& pb = plans[cars[b].plan];
            if (pa.request_s != pb.request_s) return pa.request_s < pb.request_s;
            return pa.vehicle < pb.vehicle;
        });
        for (std::size_t i : order)
            depart_queue[plans[cars[i].plan].route.front()].push_back(i);
    }

    std::vector<std::deque<std::size_t>> on_street(n_streets);  // entry order
    std::vector<int> occ(n_streets, 0);
    std::size_t remaining = cars.size();
    const long long max_ticks = static_cast<long long>(max_seconds / tick_seconds) + 1;

    for (long long tick = 0; remaining > 0 && tick <= max_ticks; ++tick) {
        const double now = tick * tick_seconds;

        // Admissions. A vehicle enters its origin street only when the street
        // is below capacity; blocked vehicles accrue depart delay implicitly
        // (delay = entry time - request time).
        for (std::size_t s = 0; s < n_streets; ++s) {
            auto& queue = depart_queue[s];
            while (!queue.empty() && occ[s] < net.street(s).capacity) {
                std::size_t ci = queue.front();
                if (plans[cars[ci].plan].request_s > now) break;
                queue.pop_front();
                Car& car = cars[ci];
                car.inside = true;
                car.pos = 0.0;
                occ[s] += 1;
                on_street[s].push_back(ci);
                VehicleSummary& sum = log.vehicles[summary_of[car.plan]];
                sum.entered_s = now;
                sum.delay_s = now - sum.request_s;
                log.events.push_back({now, plans[car.plan].vehicle, SimEventKind::enter,
                                      static_cast<int>(s)});
            }
        }

        // Speeds for this tick come from occupancy at tick start.
        std::vector<double> speed(n_streets, 0.0);
        for (std::size_t s = 0; s < n_streets; ++s)
            if (occ[s] > 0) speed[s] = tier_speed_mps(net.street(s), occ[s]);

        // Movement over [now, now + tick).
        for (std::size_t s = 0; s < n_streets; ++s) {
            const double len = net.street(s).length_m;
            for (std::size_t ci : on_street[s]) {
                Car& car = cars[ci];
                if (car.pos < len)
                    car.pos = std::min(len, car.pos + speed[s] * tick_seconds);
            }
        }

        // Transfers and finishes happen at the end of the tick. Only the
        // street's FIFO head may leave. Network exits are processed first so
        // the capacity they free is visible to every transfer this tick.
        const double then = (tick + 1) * tick_seconds;
        for (std::size_t s = 0; s < n_streets; ++s) {
            const double len = net.street(s).length_m;
            auto& lane = on_street[s];
            while (!lane.empty()) {
                std::size_t ci = lane.front();
                Car& car = cars[ci];
                const SimPlan& plan = plans[car.plan];
                if (car.pos < len || car.leg + 1 != plan.route.size()) break;
                lane.pop_front();
                occ[s] -= 1;
                car.inside = false;
                car.done = true;
                remaining -= 1;
                VehicleSummary& sum = log.vehicles[summary_of[car.plan]];
                sum.finished_s = then;
                sum.finished = true;
                log.events.push_back({then, plan.vehicle, SimEventKind::exit,
                                      static_cast<int>(s)});
                log.events.push_back({then, plan.vehicle, SimEventKind::finish, -1});
            }
        }
        for (std::size_t s = 0; s < n_streets; ++s) {
            const double len = net.street(s).length_m;
            auto& lane = on_street[s];
            while (!lane.empty()) {
                std::size_t ci = lane.front();
                Car& car = cars[ci];
                if (car.pos < len) break;
                const SimPlan& plan = plans[car.plan];
                if (car.leg + 1 == plan.route.size()) {
                    lane.pop_front();
                    occ[s] -= 1;
                    car.inside = false;
                    car.done = true;
                    remaining -= 1;
                    VehicleSummary& sum = log.vehicles[summary_of[car.plan]];
                    sum.finished_s = then;
                    sum.finished = true;
                    log.events.push_back({then, plan.vehicle, SimEventKind::exit,
                                          static_cast<int>(s)});
                    log.events.push_back({then, plan.vehicle, SimEventKind::finish, -1});
                    continue;
                }
                int next = plan.route[car.leg + 1];
                if (occ[next] >= net.street(next).capacity) break;
                lane.pop_front();
                occ[s] -= 1;
                car.leg += 1;
                car.pos = 0.0;
                occ[next] += 1;
                on_street[next].push_back(ci);
                log.events.push_back({then, plan.vehicle, SimEventKind::exit,
                                      static_cast<int>(s)});
                log.events.push_back({then, plan.vehicle, SimEventKind::enter, next});
            }
            // Everyone still parked at the street end spent this tick queued.
            for (std::size_t ci : lane) {
                if (cars[ci].pos >= len)
                    log.vehicles[summary_of[cars[ci].plan]].waiting_s += tick_seconds;
            }
        }
    }

    std::stable_sort(log.events.begin(), log.events.end(),
                     [](const SimEvent& a, const SimEvent& b) {
                         if (a.t != b.t) return a.t < b.t;
                         if (a.vehicle != b.vehicle) return a.vehicle < b.vehicle;
                         return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                     });
    return log;
}

MetricsReport metrics(const EventLog& log) {
    std::string unfinished;
    for (const auto& v : log.vehicles)
        if (!v.finished) unfinished += (unfinished.empty() ? "" : ", ") + v.vehicle;
    if (!unfinished.empty())
        throw std::runtime_error("metrics requires a completed log; unfinished: " +
                                 unfinished);

    MetricsReport rep;
    rep.vehicles = static_cast<int>(log.vehicles.size());
    if (rep.vehicles == 0) return rep;
    for (const auto& v : log.vehicles) {
        rep.total_duration_s = std::max(rep.total_duration_s, v.finished_s);
        rep.avg_route_length_m += v.route_length_m;
        rep.avg_duration_s += v.finished_s - v.request_s;
        rep.avg_waiting_s += v.waiting_s;
        rep.avg_depart_delay_s += v.delay_s;
    }
    rep.avg_route_length_m /= rep.vehicles;
    rep.avg_duration_s /= rep.vehicles;
    rep.avg_waiting_s /= rep.vehicles;
    rep.avg_depart_delay_s /= rep.vehicles;
    rep.avg_speed_mps = rep.avg_duration_s > 0.0
                            ? rep.avg_route_length_m / rep.avg_duration_s
                            : 0.0;
    return rep;
}

}  // namespace traffic
