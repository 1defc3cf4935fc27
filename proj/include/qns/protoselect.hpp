#pragma once

#include <string>
#include <vector>

#include "qns/model.hpp"
#include "qns/result.hpp"

namespace qns::select {

struct Route {
    std::string demand_id;
    std::vector<std::string> path;  // src ... dst, consecutive nodes adjacent
};

struct DistillationPlan {
    enum class Scheme { none, pump, nested };
    Scheme scheme = Scheme::none;
    // pump: chain of `rounds` base links folded by rounds-1 distillations
    int rounds = 0;
    // nested: full binary distillation tree over 2^depth base links
    int depth = 0;
};

enum class PivotRule { midpoint, lowest, highest };

struct SelectConfig {
    double t_slot_ms = 10.0;
    // slack factor on the expected link-generation latency
    double attempt_multiplier = 1.0;
    int nesting_depth_cap = 4;
    int pump_rounds_cap = 64;
    PivotRule pivot_rule = PivotRule::midpoint;
};

// Minimum-total-length path; ties broken towards the lexicographically
// smallest node-id sequence.
Result<Route> route(const Topology& t, const Demand& d);

// Highest-rate capability whose fidelity still meets f_required.
Result<Capability> choose_link_capability(const LinkSpec& l, double f_required);

struct PlanOutcome {
    DistillationPlan plan;
    Capability capability;
    double achieved_fidelity = 0.0;
};

// Direct capability if one suffices, else the cheapest pumping chain, else
// the shallowest nested scheme within the configured depth cap.
Result<PlanOutcome> plan_distillation(double f_target, const LinkSpec& l,
                                      const SelectConfig& cfg = {});

// Post-order traversal assigning communication/storage qubits to every op
// of a tree-shaped protocol; ops must be listed producers-first. Fills the
// consumes/produces sets.
Result<RepeaterProtocol> map_qubits(RepeaterProtocol p, const Topology& t);

// Two-pass layout: ASAP under precedence and qubit availability, then link
// establishment pushed ALAP to shorten storage. Fills start/end (in slots).
Result<RepeaterProtocol> layout(RepeaterProtocol p, const Topology& t,
                                const SelectConfig& cfg = {});

// Extended ESSS: recursive pivot decomposition with per-level pre-swap
// fidelity targets and distillation planning on elementary segments.
// Returns a complete protocol with Q and M populated.
Result<RepeaterProtocol> esss(const Route& r, double f_min, const Topology& t,
                              const SelectConfig& cfg = {});

}  // namespace qns::select
