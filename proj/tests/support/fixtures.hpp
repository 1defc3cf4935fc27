#pragma once

// Shared test fixtures: the three-node worked example (two elementary links
// plus one swap), its four-node extension with a single-link neighbour pair,
// and the Table-1 hardware menu.

#include <vector>

#include "qns/model.hpp"

namespace fixtures {

using namespace qns;

inline std::vector<Capability> table1_capabilities() {
    return {{0.88, 14.16}, {0.83, 20.84}, {0.79, 27.83}, {0.75, 33.98},
            {0.7, 39.18},  {0.66, 45.6},  {0.62, 51.26}, {0.57, 57.73}};
}

inline NodeSpec node(const std::string& id, bool end_node, int comm = 1, int storage = 3) {
    NodeSpec n;
    n.node_id = id;
    n.is_end_node = end_node;
    n.num_comm = comm;
    n.num_storage = storage;
    return n;
}

// A - B - C chain with one storage qubit per node and a single (0.88, 62.5 Hz)
// capability, so links occupy two 10 ms slots and the swap one.
inline Topology worked_example_topology() {
    Topology t;
    t.nodes = {node("A", true, 1, 1), node("B", false, 1, 1), node("C", true, 1, 1)};
    t.links = {{"A", "B", 5.0, {{0.88, 62.5}}}, {"B", "C", 5.0, {{0.88, 62.5}}}};
    return t;
}

// worked_example_topology plus an end node D behind a fast 1-slot link, the
// second demand pair of the scheduling example
inline Topology two_pair_topology() {
    Topology t = worked_example_topology();
    t.nodes.push_back(node("D", true, 1, 1));
    // C serves both the long chain and the local pair
    t.nodes[2].is_end_node = true;
    t.links.push_back({"C", "D", 5.0, {{0.88, 125.0}}});
    return t;
}

inline QubitRef comm(const std::string& n, int i = 0) {
    return {n, QubitKind::communication, i};
}
inline QubitRef storage(const std::string& n, int i = 0) {
    return {n, QubitKind::storage, i};
}

// the worked-example protocol with M and Q fully populated (slot size 10 ms)
inline RepeaterProtocol worked_example_protocol(double link_fidelity = 0.88) {
    RepeaterProtocol p;
    ProtocolOp l1;
    l1.op_id = "L1";
    l1.kind = OpKind::link;
    l1.nodes = {"A", "B"};
    l1.link_fidelity = link_fidelity;
    l1.consumes = {comm("A"), comm("B"), storage("B")};
    l1.produces = {comm("A"), storage("B")};
    l1.start = 0;
    l1.end = 2;

    ProtocolOp l2;
    l2.op_id = "L2";
    l2.kind = OpKind::link;
    l2.nodes = {"B", "C"};
    l2.link_fidelity = link_fidelity;
    l2.consumes = {comm("B"), comm("C")};
    l2.produces = {comm("B"), comm("C")};
    l2.start = 2;
    l2.end = 4;

    ProtocolOp s1;
    s1.op_id = "S1";
    s1.kind = OpKind::swap;
    s1.nodes = {"B"};
    s1.consumes = {comm("B"), storage("B")};
    s1.start = 4;
    s1.end = 5;

    p.ops = {l1, l2, s1};
    p.edges = {{"L1", "S1"}, {"L2", "S1"}};
    p.worst_case_fidelity = 0.7792;
    return p;
}

// single-op protocol for the neighbour pair: one 1-slot link C - D
inline RepeaterProtocol neighbour_link_protocol(double link_fidelity = 0.88) {
    RepeaterProtocol p;
    ProtocolOp op;
    op.op_id = "L1";
    op.kind = OpKind::link;
    op.nodes = {"C", "D"};
    op.link_fidelity = link_fidelity;
    op.consumes = {comm("C"), comm("D")};
    op.produces = {comm("C"), comm("D")};
    op.start = 0;
    op.end = 1;
    p.ops = {op};
    p.worst_case_fidelity = link_fidelity;
    return p;
}

// the symmetric eight-node ring: end nodes and repeaters alternating, 5 km
// links carrying the Table-1 menu
inline Topology symmetric_ring_topology() {
    Topology t;
    const std::vector<std::pair<std::string, bool>> ring = {
        {"E1", true}, {"R1", false}, {"E2", true}, {"R2", false},
        {"E3", true}, {"R3", false}, {"E4", true}, {"R4", false}};
    for (const auto& [id, end] : ring) t.nodes.push_back(node(id, end));
    for (size_t i = 0; i < ring.size(); ++i)
        t.links.push_back({ring[i].first, ring[(i + 1) % ring.size()].first, 5.0,
                           table1_capabilities()});
    return t;
}

// three-node chain with Table-1 links
inline Topology chain3_topology() {
    Topology t;
    t.nodes = {node("A", true), node("B", false), node("C", true)};
    t.links = {{"A", "B", 5.0, table1_capabilities()},
               {"B", "C", 5.0, table1_capabilities()}};
    return t;
}

}  // namespace fixtures
