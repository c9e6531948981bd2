#pragma once

#include <string>
#include <vector>

#include "traffic/network.hpp"

namespace traffic {

/// Route assignment executed by the queue simulator. Times are in seconds.
struct SimPlan {
    std::string vehicle;
    double request_s = 0.0;   // depart request time
    std::vector<int> route;   // street indices, link-connected
};

enum class SimEventKind { request, enter, exit, finish };
const char* to_string(SimEventKind k);

struct SimEvent {
    double t = 0.0;
    std::string vehicle;
    SimEventKind kind = SimEventKind::request;
    int street = -1;  // -1 for request/finish
    bool operator==(const SimEvent&) const = default;
};

struct VehicleSummary {
    std::string vehicle;
    double request_s = 0.0;
    double entered_s = 0.0;   // first street entry
    double finished_s = 0.0;
    double waiting_s = 0.0;   // time at zero speed inside the network
    double delay_s = 0.0;     // request to first entry
    double route_length_m = 0.0;
    bool finished = false;
    bool operator==(const VehicleSummary&) const = default;
};

struct Rejection {
    std::string vehicle;
    std::string reason;
    bool operator==(const Rejection&) const = default;
};

struct EventLog {
    double tick_seconds = 1.0;
    std::vector<SimEvent> events;
    std::vector<VehicleSummary> vehicles;
    std::vector<Rejection> rejected;
};

struct MetricsReport {
    int vehicles = 0;
    double total_duration_s = 0.0;
    double avg_route_length_m = 0.0;
    double avg_speed_mps = 0.0;
    double avg_duration_s = 0.0;
    double avg_waiting_s = 0.0;
    double avg_depart_delay_s = 0.0;
};

/// Queue-based microscopic execution: per tick, every vehicle advances at its
/// street's tier speed for the occupancy at tick start; a vehicle at a
/// street's end transfers in FIFO order when the next street is below
/// capacity, otherwise it queues and accrues waiting time; vehicles depart
/// when their origin street has room, otherwise they accrue depart delay.
/// Street occupancy never exceeds capacity. Deterministic.
EventLog simulate(const Network& net, const std::vector<SimPlan>& plans,
                  double tick_seconds = 1.0, double max_seconds = 86400.0);

/// Table aggregates of a completed log. Throws std::runtime_error naming any
/// unfinished vehicle. avg_speed is avg_route_length / avg_duration.
MetricsReport metrics(const EventLog& log);

}  // namespace traffic
