#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qns {

// All schedule arithmetic runs on integer slot counts; real-valued
// milliseconds appear only at I/O boundaries.
using Slots = std::int64_t;

enum class QubitKind { communication, storage };

struct QubitRef {
    std::string node_id;
    QubitKind kind = QubitKind::communication;
    int index = 0;

    auto operator<=>(const QubitRef&) const = default;
};

std::string to_string(const QubitRef& q);

struct NodeSpec {
    std::string node_id;
    int num_comm = 1;
    int num_storage = 3;
    double swap_latency_ms = 1.0;
    double distill_latency_ms = 0.526;
    double move_latency_ms = 0.961;
    bool is_end_node = false;
};

struct Capability {
    double fidelity = 0.0;
    double rate_hz = 0.0;
};

struct LinkSpec {
    std::string node_a;
    std::string node_b;
    double length_km = 0.0;
    // sorted by descending fidelity; rates strictly increase as fidelity drops
    std::vector<Capability> capabilities;

    bool connects(const std::string& u, const std::string& v) const {
        return (node_a == u && node_b == v) || (node_a == v && node_b == u);
    }
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;

    const NodeSpec* find_node(const std::string& id) const;
    const LinkSpec* find_link(const std::string& u, const std::string& v) const;
    std::vector<std::string> neighbors(const std::string& id) const;  // sorted
    std::vector<std::string> end_nodes() const;                       // sorted
    std::vector<QubitRef> resource_set() const;                       // K
};

struct Demand {
    std::string id;
    std::string src;
    std::string dst;
    double f_min = 0.0;                // in (0.25, 1]
    double r_min = 0.0;                // ebit/s
    std::optional<double> j_max_s2;    // variance bound, s^2
};

enum class OpKind { link, swap, distill };

std::string to_string(OpKind k);

struct ProtocolOp {
    std::string op_id;
    OpKind kind = OpKind::link;
    std::vector<std::string> nodes;          // a_V, sorted
    std::optional<double> link_fidelity;     // a_F, link ops only
    std::vector<QubitRef> consumes;          // qubits needed to perform the op
    std::vector<QubitRef> produces;          // qubits holding the output link
    Slots start = 0;                         // s_a
    Slots end = 0;                           // e_a

    Slots duration() const { return end - start; }
    std::vector<QubitRef> qubits() const;    // consumes U produces, sorted unique
};

// DAG of operations; ops are kept in a topological order (producers before
// consumers), which is the post-order of the construction tree.
struct RepeaterProtocol {
    std::vector<ProtocolOp> ops;                              // A
    std::vector<std::pair<std::string, std::string>> edges;   // I, (from, to)
    double worst_case_fidelity = 1.0;
    double success_probability = 1.0;

    const ProtocolOp* find_op(const std::string& id) const;
    std::vector<QubitRef> qubit_set() const;
};

// L = max over ops of e_a; throws std::invalid_argument on an empty protocol.
Slots protocol_latency(const RepeaterProtocol& p);

struct Violation {
    std::string code;
    std::string detail;
};

std::vector<Violation> validate_topology(const Topology& t);
std::vector<Violation> validate_demand(const Demand& d, const Topology& t);
std::vector<Violation> validate_protocol(const RepeaterProtocol& p, const Topology& t);

// empty when ms is not an integer multiple of the slot size
std::optional<Slots> slots_from_ms(double ms, double t_slot_ms);
double ms_from_slots(Slots s, double t_slot_ms);

// float-safe slot rounding for values that are integers up to rounding noise
Slots slots_floor(double x);
Slots slots_ceil(double x);

struct DemandProtocol {
    Demand demand;
    RepeaterProtocol protocol;
};

struct InstanceKey {
    std::string demand_id;
    int instance = 0;

    auto operator<=>(const InstanceKey&) const = default;
};

struct OpWindow {
    Slots start = 0;
    Slots end = 0;

    auto operator<=>(const OpWindow&) const = default;
};

// Cyclic slot-indexed schedule of protocol instances. op_slots is derived
// from entries plus each protocol's offset map M.
struct NetworkSchedule {
    double t_slot_ms = 10.0;
    Slots length = 0;  // hyperperiod H
    std::map<InstanceKey, Slots> entries;
    std::map<InstanceKey, std::map<std::string, OpWindow>> op_slots;
    std::vector<InstanceKey> unscheduled;

    bool operator==(const NetworkSchedule&) const = default;
};

// fills op_slots for every entry from the protocols' M maps
void derive_op_slots(NetworkSchedule& s, const std::vector<DemandProtocol>& pairs);

}  // namespace qns
