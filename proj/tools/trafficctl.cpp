#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "traffic/controller.hpp"
#include "traffic/io.hpp"
#include "traffic/microsim.hpp"
#include "traffic/oracle.hpp"
#include "traffic/preprocess.hpp"
#include "traffic/scheduler.hpp"

namespace {

using namespace traffic;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInput = 2;

struct PrepFlags {
    int k_routes = 6;
    double similarity = 0.5;
    int path_limit = 200;
    std::string cost_mode = "length";
    int horizon_cap = 1000000;

    PreprocessConfig to_config() const {
        PreprocessConfig cfg;
        cfg.k_routes = k_routes;
        cfg.similarity_threshold = similarity;
        cfg.path_limit = path_limit;
        cfg.cost_mode = cost_mode == "steps" ? CostMode::light_steps : CostMode::length_m;
        cfg.horizon_cap = horizon_cap;
        return cfg;
    }
};

void add_prep_flags(CLI::App* cmd, PrepFlags& f) {
    cmd->add_option("--k-routes", f.k_routes, "Candidate routes per vehicle");
    cmd->add_option("--similarity", f.similarity, "Jaccard threshold for route grouping");
    cmd->add_option("--path-limit", f.path_limit, "Acyclic path enumeration cap");
    cmd->add_option("--cost", f.cost_mode, "Route cost: length | steps")
        ->check(CLI::IsMember({"length", "steps"}));
    cmd->add_option("--horizon-cap", f.horizon_cap, "Upper bound on the step horizon");
}

Network load_contracted(const std::string& path) {
    Network raw = parse_network(read_file(path));
    return raw.contracted ? raw : contract_roundabouts(raw);
}

void print_epoch(const EpochStats& st) {
    std::printf("epoch clock=%d batch=%d committed=%d deferred=%d status=%s "
                "objective=(%lld,%lld) wall=%.3fs nodes=%llu\n",
                st.clock, st.batch_size, st.committed, st.deferred, to_string(st.status),
                st.objective.primary, st.objective.secondary, st.wall_secs, st.nodes);
}

void print_comparison(const MetricsReport& base, const MetricsReport& opt) {
    std::printf("%-28s %14s %14s\n", "Metric", "Baseline", "Optimized");
    auto row = [](const char* name, double a, double b) {
        std::printf("%-28s %14.2f %14.2f\n", name, a, b);
    };
    row("Total Duration [s]", base.total_duration_s, opt.total_duration_s);
    row("Avg. Route Length [m]", base.avg_route_length_m, opt.avg_route_length_m);
    row("Avg. Speed [m/s]", base.avg_speed_mps, opt.avg_speed_mps);
    row("Avg. Duration [s]", base.avg_duration_s, opt.avg_duration_s);
    row("Avg. Waiting Time [s]", base.avg_waiting_s, opt.avg_waiting_s);
    row("Avg. Depart Delay [s]", base.avg_depart_delay_s, opt.avg_depart_delay_s);
}

std::vector<SimPlan> baseline_plans(const Network& net,
                                    const std::vector<VehicleState>& demand) {
    std::vector<SimPlan> plans;
    for (const auto& vs : demand) {
        auto paths = enumerate_acyclic_paths(net, net.street_index(vs.origin),
                                             net.street_index(vs.destination), 1);
        if (paths.empty())
            throw std::runtime_error("vehicle '" + vs.id + "': no route from '" +
                                     vs.origin + "' to '" + vs.destination + "'");
        SimPlan sp;
        sp.vehicle = vs.id;
        sp.request_s = vs.depart * net.step_seconds;
        sp.route = paths.front();
        plans.push_back(std::move(sp));
    }
    return plans;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Centralized traffic controller: route scheduling over a relaxed "
                 "street-occupancy model, verified by a queue-based simulator"};
    app.require_subcommand(1);

    // preprocess
    auto* prep_cmd = app.add_subcommand(
        "preprocess", "Build a scheduling instance from a network and a demand file");
    std::string prep_network, prep_demand, prep_out;
    int prep_clock = 0;
    PrepFlags prep_flags;
    prep_cmd->add_option("--network", prep_network, "Network file")->required();
    prep_cmd->add_option("--demand", prep_demand, "Demand file")->required();
    prep_cmd->add_option("--out", prep_out, "Instance output file")->required();
    prep_cmd->add_option("--clock", prep_clock, "Current step (shifts windows)");
    add_prep_flags(prep_cmd, prep_flags);

    // schedule
    auto* sched_cmd = app.add_subcommand("schedule", "Solve a scheduling instance");
    std::string sched_instance, sched_out;
    double sched_budget = 5.0;
    int sched_workers = 1;
    unsigned sched_seed = 0;
    sched_cmd->add_option("--instance", sched_instance, "Instance file")->required();
    sched_cmd->add_option("--out", sched_out, "Schedule output file")->required();
    sched_cmd->add_option("--budget-secs", sched_budget, "Wall-clock budget (0 = none)");
    sched_cmd->add_option("--workers", sched_workers, "Search workers (strategies)");
    sched_cmd->add_option("--seed", sched_seed, "Random seed");

    // simulate
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Execute a plan (or class-0 demand) on the queue simulator");
    std::string sim_network, sim_plan, sim_demand, sim_out, sim_metrics_out;
    double sim_tick = 1.0, sim_max = 86400.0;
    sim_cmd->add_option("--network", sim_network, "Network file")->required();
    sim_cmd->add_option("--plan", sim_plan, "Schedule or trace file");
    sim_cmd->add_option("--demand", sim_demand, "Demand file with fixed (class-0) routes");
    sim_cmd->add_option("--tick-secs", sim_tick, "Simulator tick in seconds");
    sim_cmd->add_option("--max-secs", sim_max, "Simulation time cap");
    sim_cmd->add_option("--out", sim_out, "Event log output file");
    sim_cmd->add_option("--metrics-out", sim_metrics_out, "Metrics output file");

    // run
    auto* run_cmd = app.add_subcommand(
        "run", "Rolling-horizon control: schedule arrivals epoch by epoch");
    std::string run_network, run_demand, run_out;
    double run_budget = 5.0;
    int run_workers = 1, run_epoch = 1, run_max_defer = 16;
    unsigned run_seed = 0;
    PrepFlags run_flags;
    run_cmd->add_option("--network", run_network, "Network file")->required();
    run_cmd->add_option("--demand", run_demand, "Demand file")->required();
    run_cmd->add_option("--out", run_out, "Trace output file")->required();
    run_cmd->add_option("--epoch-steps", run_epoch, "Steps per controller epoch");
    run_cmd->add_option("--budget-secs", run_budget, "Solver budget per epoch");
    run_cmd->add_option("--workers", run_workers, "Search workers");
    run_cmd->add_option("--seed", run_seed, "Random seed");
    run_cmd->add_option("--max-defer", run_max_defer, "Deferrals allowed per vehicle");
    add_prep_flags(run_cmd, run_flags);

    // compare-baseline
    auto* cmp_cmd = app.add_subcommand(
        "compare-baseline",
        "Same demand under shortest-path routing vs. scheduled routing");
    std::string cmp_network, cmp_demand;
    double cmp_budget = 5.0, cmp_tick = 1.0, cmp_max = 86400.0;
    int cmp_workers = 1, cmp_epoch = 1, cmp_max_defer = 16;
    unsigned cmp_seed = 0;
    PrepFlags cmp_flags;
    cmp_cmd->add_option("--network", cmp_network, "Network file")->required();
    cmp_cmd->add_option("--demand", cmp_demand, "Demand file")->required();
    cmp_cmd->add_option("--epoch-steps", cmp_epoch, "Steps per controller epoch");
    cmp_cmd->add_option("--budget-secs", cmp_budget, "Solver budget per epoch");
    cmp_cmd->add_option("--workers", cmp_workers, "Search workers");
    cmp_cmd->add_option("--seed", cmp_seed, "Random seed");
    cmp_cmd->add_option("--max-defer", cmp_max_defer, "Deferrals allowed per vehicle");
    cmp_cmd->add_option("--tick-secs", cmp_tick, "Simulator tick in seconds");
    cmp_cmd->add_option("--max-secs", cmp_max, "Simulation time cap");
    add_prep_flags(cmp_cmd, cmp_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (prep_cmd->parsed()) {
            Network net = load_contracted(prep_network);
            auto demand = parse_demand(read_file(prep_demand), net);
            SchedulingInstance inst =
                build_instance(net, demand, prep_flags.to_config(), prep_clock);
            write_file(prep_out, write_instance(inst));
            std::printf("instance: %zu controlled, %zu simulated, horizon %d, %zu streets\n",
                        inst.controlled.size(), inst.simulated.size(), inst.horizon,
                        inst.network.streets.size());
            return kExitOk;
        }

        if (sched_cmd->parsed()) {
            SchedulingInstance inst = parse_instance(read_file(sched_instance));
            SolveOptions opts;
            opts.budget_secs = sched_budget;
            opts.workers = sched_workers;
            opts.seed = sched_seed;
            SolveResult res = solve(inst, opts);
            write_file(sched_out, write_schedule(to_schedule_doc(res, inst), inst.network));
            std::printf("status=%s objective=(%lld,%lld) wall=%.3fs nodes=%llu\n",
                        to_string(res.status), res.objective.primary,
                        res.objective.secondary, res.wall_secs, res.nodes);
            if (res.status == SolveStatus::infeasible) {
                std::fprintf(stderr, "infeasible: vehicle '%s' has an empty feasible set\n",
                             res.blocked_vehicle.c_str());
                return kExitInfeasible;
            }
            if (res.status == SolveStatus::timeout) {
                std::fprintf(stderr, "timeout: no schedule within budget\n");
                return kExitInfeasible;
            }
            return kExitOk;
        }

        if (sim_cmd->parsed()) {
            if (sim_plan.empty() == sim_demand.empty())
                throw std::runtime_error("simulate needs exactly one of --plan / --demand");
            Network net = load_contracted(sim_network);
            std::vector<SimPlan> plans;
            if (!sim_plan.empty()) {
                ScheduleDoc doc = parse_schedule(read_file(sim_plan), net);
                plans = to_sim_plans(doc, net.step_seconds);
            } else {
                auto demand = parse_demand(read_file(sim_demand), net);
                for (const auto& vs : demand) {
                    if (vs.klass != 0)
                        throw std::runtime_error("vehicle '" + vs.id +
                                                 "' has no fixed route; use --plan");
                    SimPlan sp;
                    sp.vehicle = vs.id;
                    sp.request_s = vs.depart * net.step_seconds;
                    sp.route = vs.routes.front().streets;
                    plans.push_back(std::move(sp));
                }
            }
            Config cfg;
            cfg.tick_seconds = sim_tick;
            cfg.validate(net.step_seconds);
            EventLog log = simulate(net, plans, sim_tick, sim_max);
            if (!sim_out.empty()) write_file(sim_out, write_eventlog(log, net));
            MetricsReport rep = metrics(log);
            std::fputs(write_metrics(rep).c_str(), stdout);
            if (!sim_metrics_out.empty()) write_file(sim_metrics_out, write_metrics(rep));
            return kExitOk;
        }

        if (run_cmd->parsed()) {
            Network net = load_contracted(run_network);
            auto demand = parse_demand(read_file(run_demand), net);
            ControllerConfig cfg;
            cfg.epoch_steps = run_epoch;
            cfg.budget_secs = run_budget;
            cfg.workers = run_workers;
            cfg.seed = run_seed;
            cfg.max_defer = run_max_defer;
            cfg.prep = run_flags.to_config();
            RunResult result = run(net, demand, cfg);
            for (const auto& st : result.epochs) print_epoch(st);
            write_file(run_out, write_schedule(to_schedule_doc(result), net));
            std::printf("committed %zu vehicles over %zu epochs\n", result.plans.size(),
                        result.epochs.size());
            return kExitOk;
        }

        if (cmp_cmd->parsed()) {
            Network net = load_contracted(cmp_network);
            auto demand = parse_demand(read_file(cmp_demand), net);
            Config io_cfg;
            io_cfg.tick_seconds = cmp_tick;
            io_cfg.validate(net.step_seconds);

            EventLog base_log = simulate(net, baseline_plans(net, demand), cmp_tick, cmp_max);
            MetricsReport base = metrics(base_log);

            ControllerConfig cfg;
            cfg.epoch_steps = cmp_epoch;
            cfg.budget_secs = cmp_budget;
            cfg.workers = cmp_workers;
            cfg.seed = cmp_seed;
            cfg.max_defer = cmp_max_defer;
            cfg.prep = cmp_flags.to_config();
            RunResult result = run(net, demand, cfg);
            EventLog opt_log =
                simulate(net, to_sim_plans(to_schedule_doc(result), net.step_seconds),
                         cmp_tick, cmp_max);
            MetricsReport opt = metrics(opt_log);
            print_comparison(base, opt);
            return kExitOk;
        }
    } catch (const ScheduleFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInput;
    }
    return kExitInput;
}
