#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qns/model.hpp"
#include "qns/result.hpp"

namespace qns::rcpsp {

enum class ActivityKind {
    dummy_start,     // global j_s
    dummy_end,       // global j_e
    instance_start,  // per-instance dummy start j_{s_l}
    instance_end,    // per-instance dummy end j_{e_l}
    op,              // repeater protocol operation
    occupation,      // resource held between two operations
    condensed,       // full-protocol reservation activity
};

struct Activity {
    int id = 0;
    ActivityKind kind = ActivityKind::op;
    Slots duration = 0;                  // p_i
    std::vector<QubitRef> resources;     // h_ik = 1 for each listed qubit
    std::string demand_id;               // origin
    int instance = -1;
    std::string op_id;                   // protocol op for kind==op
};

// start(to) - end(from) must lie in [min_lag, max_lag]
struct TimeLag {
    int from = 0;
    int to = 0;
    Slots min_lag = 0;
    Slots max_lag = 0;
};

struct InstanceInfo {
    std::string demand_id;
    int instance = 0;
    Slots period = 0;
    Slots release = 0;     // l * T
    Slots deadline = 0;    // (l+1) * T
    Slots span = 0;        // protocol latency in slots
    int start_activity = 0;
    std::optional<Slots> jitter_halfwidth;  // floor(sqrt(J_max)/t_slot)
};

struct ActivityNetwork {
    double t_slot_ms = 10.0;
    Slots horizon = 0;  // H
    std::vector<Activity> activities;
    std::vector<TimeLag> lags;
    std::vector<InstanceInfo> instances;
};

// Activity-on-node fragment for one protocol: dummy start/end, one activity
// per op rigidly offset from the start, occupation activities holding stored
// links between consecutive uses (trailing ones run to the protocol latency).
Result<ActivityNetwork> build_aon(const RepeaterProtocol& p, double t_slot_ms);

// Full-protocol reservation: the fragment collapses to dummy start/end plus
// one activity claiming every used qubit for the whole latency.
ActivityNetwork condense_fpr(const ActivityNetwork& fragment);

enum class FragmentStyle { full, condensed };

struct RcpspOptions {
    double t_slot_ms = 10.0;
    FragmentStyle style = FragmentStyle::full;
    bool jitter_constrained = false;
    Slots hyperperiod_cap = Slots{1} << 20;
};

// H/T_i instances of each protocol's fragment under global dummies, each
// windowed to its period [l*T_i, (l+1)*T_i].
Result<ActivityNetwork> build_full_aon(const std::vector<DemandProtocol>& pairs,
                                       const RcpspOptions& opts);

// Min/max start-to-start lags T_i -/+ floor(sqrt(J_max)/t_slot) between
// consecutive instance dummy starts of demands that carry a jitter bound.
Result<ActivityNetwork> add_jitter_lags(ActivityNetwork net,
                                        const std::vector<DemandProtocol>& pairs);

// Serial schedule generation with earliest-instance-deadline priority; an
// instance that cannot be placed inside its window is withdrawn whole.
Result<NetworkSchedule> schedule_aon(const ActivityNetwork& net,
                                     const std::vector<DemandProtocol>& pairs);

// build_full_aon (+ jitter lags) + schedule_aon
Result<NetworkSchedule> schedule_rcpsp(const std::vector<DemandProtocol>& pairs,
                                       const RcpspOptions& opts = {});

// Debug dump: activities, lags and instance windows, one line each.
std::string dump_aon(const ActivityNetwork& net);

}  // namespace qns::rcpsp
