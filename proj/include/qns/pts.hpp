#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qns/model.hpp"
#include "qns/result.hpp"

namespace qns::pts {

struct PeriodicTask {
    std::string task_id;  // demand id
    Slots phase = 0;      // always 0
    Slots wcet = 0;       // C, protocol latency in slots
    Slots period = 0;     // T = floor(1 / (t_slot * R_min))
    // jitter window half-widths, floor(sqrt(J_max) / t_slot)
    std::optional<Slots> lambda;
    std::optional<Slots> eta;
};

struct TaskSchedule {
    Slots hyperperiod = 0;
    std::map<std::string, std::vector<Slots>> starts;
    std::set<std::pair<std::string, int>> unscheduled;
};

inline constexpr Slots kDefaultHyperperiodCap = Slots{1} << 20;

Result<PeriodicTask> to_task(const Demand& d, const RepeaterProtocol& p, double t_slot_ms);

Result<Slots> hyperperiod(const std::vector<PeriodicTask>& tasks,
                          Slots cap = kDefaultHyperperiodCap);

// connected components of the qubit-sharing intersection graph, as index
// sets into `pairs`; protocols in different components share no qubit
std::vector<std::vector<size_t>> decompose_disjoint(const std::vector<DemandProtocol>& pairs);

// single-machine non-preemptive EDF over [0, H); instances that cannot meet
// their deadline are dropped into `unscheduled`
TaskSchedule np_edf(const std::vector<PeriodicTask>& tasks, Slots h);

// as np_edf, but consecutive instances must start within
// [prev + T - lambda, prev + T + eta]
TaskSchedule np_edf_jitter(const std::vector<PeriodicTask>& tasks, Slots h);

struct PtsOptions {
    double t_slot_ms = 10.0;
    bool jitter_constrained = false;
    Slots hyperperiod_cap = kDefaultHyperperiodCap;
};

// full method: transform, decompose into disjoint components, schedule each
// independently, merge into one cyclic network schedule
Result<NetworkSchedule> schedule_pts(const std::vector<DemandProtocol>& pairs,
                                     const PtsOptions& opts = {});

}  // namespace qns::pts
