#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qns/experiment.hpp"
#include "qns/model_io.hpp"
#include "qns/protoselect.hpp"
#include "qns/pts.hpp"
#include "qns/rcpsp.hpp"
#include "qns/validate.hpp"

namespace {

using namespace qns;

int cmd_schedule(const std::string& topology_path, const std::string& demands_path,
                 const std::string& scheduler_name, double t_slot_ms, double attempt_multiplier,
                 int nesting_cap, const std::string& pivot_rule, bool jitter,
                 const std::string& out_path, const std::string& report_path) {
    const Topology topo = io::load_topology(topology_path);
    const auto demands = io::load_demands(demands_path);

    auto kind = bench::scheduler_from_string(scheduler_name);
    if (!kind) {
        std::cerr << "unknown scheduler: " << scheduler_name << "\n";
        return 2;
    }

    select::SelectConfig sel;
    sel.t_slot_ms = t_slot_ms;
    sel.attempt_multiplier = attempt_multiplier;
    sel.nesting_depth_cap = nesting_cap;
    if (pivot_rule == "midpoint") sel.pivot_rule = select::PivotRule::midpoint;
    else if (pivot_rule == "lowest") sel.pivot_rule = select::PivotRule::lowest;
    else if (pivot_rule == "highest") sel.pivot_rule = select::PivotRule::highest;
    else {
        std::cerr << "unknown pivot rule: " << pivot_rule << "\n";
        return 2;
    }

    std::vector<DemandProtocol> pairs;
    for (const auto& d : demands) {
        for (const auto& v : validate_demand(d, topo)) {
            std::cerr << d.id << ": invalid demand [" << v.code << "] " << v.detail << "\n";
            return 2;
        }
        auto r = select::route(topo, d);
        if (!r.ok()) {
            std::cerr << d.id << ": excluded (" << r.error().code << ": " << r.error().message
                      << ")\n";
            continue;
        }
        auto p = select::esss(r.value(), d.f_min, topo, sel);
        if (!p.ok()) {
            std::cerr << d.id << ": excluded (" << p.error().code << ": " << p.error().message
                      << ")\n";
            continue;
        }
        auto task = pts::to_task(d, p.value(), t_slot_ms);
        if (!task.ok()) {
            std::cerr << d.id << ": excluded (" << task.error().code << ": "
                      << task.error().message << ")\n";
            continue;
        }
        pairs.push_back({d, p.take()});
    }

    Result<NetworkSchedule> scheduled = Result<NetworkSchedule>::fail("unset", "");
    if (*kind == bench::SchedulerKind::pts_np_edf) {
        pts::PtsOptions o;
        o.t_slot_ms = t_slot_ms;
        o.jitter_constrained = jitter;
        scheduled = pts::schedule_pts(pairs, o);
    } else {
        rcpsp::RcpspOptions o;
        o.t_slot_ms = t_slot_ms;
        o.style = *kind == bench::SchedulerKind::rcpsp_np_fpr ? rcpsp::FragmentStyle::condensed
                                                              : rcpsp::FragmentStyle::full;
        o.jitter_constrained = jitter;
        scheduled = rcpsp::schedule_rcpsp(pairs, o);
    }
    if (!scheduled.ok()) {
        std::cerr << "scheduling failed: " << scheduled.error().code << ": "
                  << scheduled.error().message << "\n";
        return 1;
    }

    const NetworkSchedule& schedule = scheduled.value();
    const auto rep = validate::report(schedule, pairs);
    for (const auto& v : rep.violations)
        std::cerr << "violation [" << v.code << "] " << v.detail << "\n";

    if (!out_path.empty())
        io::write_file(out_path, io::schedule_to_json({schedule, pairs}));

    std::ostringstream os;
    os << "demand_id,r_min,achieved_rate,jitter,satisfied\n";
    for (const auto& dp : pairs) {
        const auto& m = rep.per_demand.at(dp.demand.id);
        os << dp.demand.id << ',' << bench::format_double(dp.demand.r_min) << ','
           << bench::format_double(m.achieved_rate) << ','
           << (m.jitter_s2 ? bench::format_double(*m.jitter_s2) : std::string()) << ','
           << (m.satisfied ? "true" : "false") << '\n';
    }
    if (report_path.empty()) std::cout << os.str();
    else io::write_file(report_path, os.str());

    std::cout << "schedule length: " << schedule.length << " slots of "
              << bench::format_double(schedule.t_slot_ms) << " ms\n"
              << "network throughput: " << bench::format_double(rep.network_throughput)
              << " ebit/s\n"
              << "scheduled pairs: " << pairs.size() << ", dropped instances: "
              << schedule.unscheduled.size() << "\n";
    return rep.violations.empty() ? 0 : 1;
}

int cmd_validate(const std::string& schedule_path) {
    const auto dump = io::schedule_from_json(io::read_file(schedule_path));
    const auto violations = validate::check_schedule(dump.schedule, dump.pairs);
    for (const auto& v : violations) std::cout << "[" << v.code << "] " << v.detail << "\n";
    std::cout << (violations.empty() ? "schedule is valid" : "schedule is INVALID") << "\n";
    return violations.empty() ? 0 : 1;
}

int cmd_oracle(const std::string& task_spec, Slots h) {
    // task spec: "C,T;C,T;..." in slots
    std::vector<pts::PeriodicTask> tasks;
    std::istringstream in(task_spec);
    std::string item;
    int n = 0;
    while (std::getline(in, item, ';')) {
        const auto comma = item.find(',');
        if (comma == std::string::npos) {
            std::cerr << "bad task spec item: " << item << "\n";
            return 2;
        }
        pts::PeriodicTask t;
        t.task_id = "t" + std::to_string(++n);
        t.wcet = std::stoll(item.substr(0, comma));
        t.period = std::stoll(item.substr(comma + 1));
        tasks.push_back(t);
    }
    if (h == 0) {
        auto hp = pts::hyperperiod(tasks, validate::kOracleMaxHyperperiod);
        if (!hp.ok()) {
            std::cerr << hp.error().code << ": " << hp.error().message << "\n";
            return 2;
        }
        h = hp.value();
    }
    auto witness = validate::brute_force_tasks(tasks, h);
    if (!witness.ok()) {
        std::cerr << witness.error().code << ": " << witness.error().message << "\n";
        return 2;
    }
    if (!witness.value().feasible) {
        std::cout << "infeasible over H=" << h << "\n";
        return 1;
    }
    std::cout << "feasible over H=" << h << "\n";
    for (const auto& [key, start] : witness.value().starts)
        std::cout << key.first << "#" << key.second << " -> slot " << start << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schedule construction engine for multi-user quantum networks"};
    app.require_subcommand(1);

    // schedule: run the pipeline once on explicit demand/topology files
    auto* sched = app.add_subcommand("schedule", "route, select and schedule a demand file");
    std::string topology_path, demands_path, out_path, report_path;
    std::string scheduler_name = "rcpsp-np-edf";
    std::string pivot_rule = "midpoint";
    double t_slot_ms = 10.0, attempt_multiplier = 1.0;
    int nesting_cap = 4;
    bool jitter = false;
    sched->add_option("--topology", topology_path, "topology JSON file")->required();
    sched->add_option("--demands", demands_path, "demand JSON file")->required();
    sched->add_option("--scheduler", scheduler_name, "pts-np-edf | rcpsp-np-edf | rcpsp-np-fpr");
    sched->add_option("--t-slot", t_slot_ms, "slot duration in ms");
    sched->add_option("--attempt-multiplier", attempt_multiplier,
                      "slack factor on expected link latency");
    sched->add_option("--nesting-cap", nesting_cap, "maximum nested pumping depth");
    sched->add_option("--pivot", pivot_rule, "pivot rule: midpoint | lowest | highest");
    sched->add_flag("--jitter", jitter, "enforce demand jitter bounds while scheduling");
    sched->add_option("--out", out_path, "write the schedule dump JSON here");
    sched->add_option("--report", report_path, "write the per-demand CSV here");

    // sweep: the experiment grid
    auto* sweep = app.add_subcommand("sweep", "run a seeded experiment grid and emit CSV");
    bench::ExperimentConfig cfg;
    std::string sweep_scheduler = "pts-np-edf";
    std::string csv_path, summary_path;
    sweep->add_option("--topology", cfg.topology_path, "topology JSON file")->required();
    sweep->add_option("--scheduler", sweep_scheduler, "pts-np-edf | rcpsp-np-edf | rcpsp-np-fpr");
    sweep->add_option("--fidelity", cfg.fidelity_levels, "fidelity levels");
    sweep->add_option("--loads", cfg.load_targets, "offered load targets (ebit/s)");
    sweep->add_option("--rates", cfg.rate_menu, "rate menu demands draw from (ebit/s)");
    sweep->add_option("--reps", cfg.repetitions, "repetitions per grid cell");
    sweep->add_option("--seed", cfg.seed, "RNG seed");
    sweep->add_option("--t-slot", cfg.t_slot_ms, "slot duration in ms");
    sweep->add_option("--attempt-multiplier", cfg.select.attempt_multiplier,
                      "slack factor on expected link latency");
    sweep->add_option("--nesting-cap", cfg.select.nesting_depth_cap, "maximum nesting depth");
    sweep->add_option("--workers", cfg.workers, "parallel repetition workers");
    sweep->add_option("--out", csv_path, "result CSV path (stdout when omitted)");
    sweep->add_option("--summary", summary_path, "aggregate CSV path");

    // validate: re-check a schedule dump
    auto* val = app.add_subcommand("validate", "re-check a schedule dump");
    std::string schedule_path;
    val->add_option("--schedule", schedule_path, "schedule dump JSON")->required();

    // oracle: tiny brute-force feasibility check
    auto* oracle = app.add_subcommand("oracle", "brute-force a tiny periodic task set");
    std::string task_spec;
    Slots oracle_h = 0;
    oracle->add_option("--tasks", task_spec, "task list as C,T;C,T;... (slots)")->required();
    oracle->add_option("--hyperperiod", oracle_h, "explicit hyperperiod (slots)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sched->parsed())
            return cmd_schedule(topology_path, demands_path, scheduler_name, t_slot_ms,
                                attempt_multiplier, nesting_cap, pivot_rule, jitter, out_path,
                                report_path);
        if (sweep->parsed()) {
            auto kind = bench::scheduler_from_string(sweep_scheduler);
            if (!kind) {
                std::cerr << "unknown scheduler: " << sweep_scheduler << "\n";
                return 2;
            }
            cfg.scheduler = *kind;
            const Topology topo = io::load_topology(cfg.topology_path);
            const auto result = bench::run_experiment(cfg, topo);
            const std::string csv = bench::rows_to_csv(result.rows);
            if (csv_path.empty()) std::cout << csv;
            else io::write_file(csv_path, csv);
            if (!summary_path.empty())
                io::write_file(summary_path, bench::summary_to_csv(cfg, result.repetitions));
            return 0;
        }
        if (val->parsed()) return cmd_validate(schedule_path);
        if (oracle->parsed()) return cmd_oracle(task_spec, oracle_h);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
