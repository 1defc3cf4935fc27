#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qns/model.hpp"
#include "qns/pts.hpp"
#include "qns/rcpsp.hpp"
#include "qns/result.hpp"

namespace qns::validate {

// Independent check of a schedule against the scheduling constraints:
//  1. per-instance op windows match the protocol offset map M,
//  2. ops of different instances never overlap on a shared qubit,
//  3. no op touches a qubit while it holds a link destined for another op
//     (occupation intervals included),
// plus the cyclic-length invariant that instances finish within the schedule.
std::vector<Violation> check_schedule(const NetworkSchedule& s,
                                      const std::vector<DemandProtocol>& pairs);

// scheduled instances per cyclic repetition, in ebit/s
double throughput(const NetworkSchedule& s, const Demand& d, double success_probability = 1.0);

// population variance of the cyclic inter-delivery gaps, in s^2; absent when
// nothing was scheduled for the demand
std::optional<double> jitter(const NetworkSchedule& s, const Demand& d);

struct DemandMetrics {
    double achieved_rate = 0.0;
    std::optional<double> jitter_s2;
    bool fidelity_ok = false;
    bool satisfied = false;
    int instances_scheduled = 0;
    int instances_dropped = 0;
};

struct ScheduleReport {
    std::map<std::string, DemandMetrics> per_demand;
    double network_throughput = 0.0;
    std::vector<Violation> violations;
};

ScheduleReport report(const NetworkSchedule& s, const std::vector<DemandProtocol>& pairs,
                      bool scale_by_success = false);

// --- tiny brute-force oracles -------------------------------------------

inline constexpr size_t kOracleMaxTasks = 3;
inline constexpr Slots kOracleMaxHyperperiod = 24;
inline constexpr size_t kOracleMaxActivities = 12;

struct TaskWitness {
    bool feasible = false;
    std::map<std::pair<std::string, int>, Slots> starts;
};

// exhaustive search over work-conserving non-preemptive dispatch orders;
// feasible iff some order completes every instance within its period
Result<TaskWitness> brute_force_tasks(const std::vector<pts::PeriodicTask>& tasks, Slots h);

struct AonWitness {
    bool feasible = false;
    std::map<std::pair<std::string, int>, Slots> starts;  // instance start slots
};

// exhaustive search over instance start assignments of a tiny activity
// network, subject to windows, jitter lags and unit resource capacities
Result<AonWitness> brute_force_aon(const rcpsp::ActivityNetwork& net);

}  // namespace qns::validate
