#pragma once

#include <string>
#include <vector>

#include "traffic/controller.hpp"
#include "traffic/microsim.hpp"
#include "traffic/network.hpp"
#include "traffic/scheduler.hpp"

namespace traffic {

/// Pipeline knobs shared by the CLI subcommands.
struct Config {
    double tick_seconds = 1.0;
    int k_routes = 6;
    double similarity_threshold = 0.5;
    int path_limit = 200;
    double budget_secs = 5.0;
    int workers = 1;
    unsigned seed = 0;
    Step epoch_steps = 1;
    int max_defer = 16;

    /// Positivity plus step_seconds being a multiple of tick_seconds.
    void validate(double step_seconds) const;
};

// All formats are line oriented and whitespace delimited; lines whose first
// token is '#' are comments. Writers emit a canonical form, so
// write(parse(write(x))) == write(x) byte for byte.

std::string write_network(const Network& net);
Network parse_network(const std::string& text);

std::string write_demand(const std::vector<VehicleState>& vehicles, const Network& net);
std::vector<VehicleState> parse_demand(const std::string& text, const Network& net);

std::string write_instance(const SchedulingInstance& inst);
SchedulingInstance parse_instance(const std::string& text);

/// Schedule/trace document: solver output or controller trace.
struct PlanRecord {
    std::string vehicle;
    std::string route;
    Step depart = 0;
    std::vector<PlanEvent> events;
    bool operator==(const PlanRecord&) const = default;
};

struct ScheduleDoc {
    std::string status = "proven";  // proven | anytime | trace
    bool has_objective = false;
    Objective objective;
    std::vector<PlanRecord> plans;
};

std::string write_schedule(const ScheduleDoc& doc, const Network& net);
ScheduleDoc parse_schedule(const std::string& text, const Network& net);

std::string write_eventlog(const EventLog& log, const Network& net);
EventLog parse_eventlog(const std::string& text, const Network& net);

std::string write_metrics(const MetricsReport& rep);
MetricsReport parse_metrics(const std::string& text);

// Glue between pipeline stages.
ScheduleDoc to_schedule_doc(const SolveResult& res, const SchedulingInstance& inst);
ScheduleDoc to_schedule_doc(const RunResult& run);
std::vector<SimPlan> to_sim_plans(const ScheduleDoc& doc, double step_seconds);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace traffic
