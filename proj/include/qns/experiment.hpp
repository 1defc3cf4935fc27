#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qns/model.hpp"
#include "qns/protoselect.hpp"
#include "qns/result.hpp"

namespace qns::bench {

// Deterministic stream generator (splitmix64); the same (seed, stream) pair
// yields the same draws on every platform and under any worker count.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next();
    // uniform draw from [0, n)
    std::size_t below(std::size_t n);

private:
    std::uint64_t state_;
};

enum class SchedulerKind { pts_np_edf, rcpsp_np_edf, rcpsp_np_fpr };

std::string to_string(SchedulerKind k);
std::optional<SchedulerKind> scheduler_from_string(const std::string& name);

struct ExperimentConfig {
    std::string topology_path;
    double t_slot_ms = 10.0;
    std::vector<double> fidelity_levels = {0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
    std::vector<double> rate_menu = {12.5, 6.25, 3.125, 1.5625, 0.78125, 0.390625, 0.1953125};
    std::vector<double> load_targets = {12.5, 25.0, 50.0, 100.0};
    int repetitions = 3;
    std::uint64_t seed = 1;
    SchedulerKind scheduler = SchedulerKind::pts_np_edf;
    select::SelectConfig select;
    Slots hyperperiod_cap = Slots{1} << 20;
    bool jitter_constrained = false;
    int workers = 1;
};

// uniform end-node pairs with rates drawn from the menu until the summed
// R_min reaches the load target (the final demand may overshoot)
std::vector<Demand> generate_demands(const Topology& t, const std::vector<double>& rate_menu,
                                     double load_target, double fidelity, Rng& rng);

struct ResultRow {
    std::string scheduler;
    double fidelity = 0.0;
    double load = 0.0;
    int repetition = 0;
    std::string demand_id;
    double r_min = 0.0;
    double achieved_rate = 0.0;
    std::optional<double> jitter_s2;
    bool satisfied = false;
    double network_throughput = 0.0;
};

struct RepetitionSummary {
    double fidelity = 0.0;
    double load = 0.0;
    int repetition = 0;
    double network_throughput = 0.0;
    double mean_jitter_s2 = 0.0;
    int jitter_samples = 0;
    int demands_offered = 0;
    int demands_excluded = 0;  // no route / selection failure / rate infeasible
    int demands_satisfied = 0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<RepetitionSummary> repetitions;
};

// Full pipeline per (fidelity, load, repetition) cell: generate demands,
// route, select protocols, schedule, validate, measure. A validator
// violation on an emitted schedule throws std::logic_error.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Topology& t);

// fixed column order:
// scheduler,fidelity,load,repetition,demand_id,r_min,achieved_rate,jitter,satisfied,network_throughput
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::string summary_to_csv(const ExperimentConfig& cfg,
                           const std::vector<RepetitionSummary>& summaries);

std::string format_double(double value);

}  // namespace qns::bench
