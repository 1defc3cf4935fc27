#include "qns/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace qns {

std::string to_string(const QubitRef& q) {
    const char* kind = q.kind == QubitKind::communication ? "comm" : "storage";
    return q.node_id + "-" + kind + std::to_string(q.index);
}

std::string to_string(OpKind k) {
    switch (k) {
        case OpKind::link: return "link";
        case OpKind::swap: return "swap";
        case OpKind::distill: return "distill";
    }
    return "?";
}

const NodeSpec* Topology::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.node_id == id) return &n;
    return nullptr;
}

const LinkSpec* Topology::find_link(const std::string& u, const std::string& v) const {
    for (const auto& l : links)
        if (l.connects(u, v)) return &l;
    return nullptr;
}

std::vector<std::string> Topology::neighbors(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& l : links) {
        if (l.node_a == id) out.push_back(l.node_b);
        if (l.node_b == id) out.push_back(l.node_a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Topology::end_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : nodes)
        if (n.is_end_node) out.push_back(n.node_id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<QubitRef> Topology::resource_set() const {
    std::vector<QubitRef> out;
    for (const auto& n : nodes) {
        for (int i = 0; i < n.num_comm; ++i)
            out.push_back({n.node_id, QubitKind::communication, i});
        for (int i = 0; i < n.num_storage; ++i)
            out.push_back({n.node_id, QubitKind::storage, i});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<QubitRef> ProtocolOp::qubits() const {
    std::vector<QubitRef> out = consumes;
    out.insert(out.end(), produces.begin(), produces.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const ProtocolOp* RepeaterProtocol::find_op(const std::string& id) const {
    for (const auto& op : ops)
        if (op.op_id == id) return &op;
    return nullptr;
}

std::vector<QubitRef> RepeaterProtocol::qubit_set() const {
    std::vector<QubitRef> out;
    for (const auto& op : ops) {
        auto q = op.qubits();
        out.insert(out.end(), q.begin(), q.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Slots protocol_latency(const RepeaterProtocol& p) {
    if (p.ops.empty()) throw std::invalid_argument("protocol has no operations");
    Slots latency = 0;
    for (const auto& op : p.ops) latency = std::max(latency, op.end);
    return latency;
}

std::optional<Slots> slots_from_ms(double ms, double t_slot_ms) {
    if (t_slot_ms <= 0.0) return std::nullopt;
    const double x = ms / t_slot_ms;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return std::nullopt;
    return static_cast<Slots>(r);
}

double ms_from_slots(Slots s, double t_slot_ms) {
    return static_cast<double>(s) * t_slot_ms;
}

Slots slots_floor(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) return static_cast<Slots>(r);
    return static_cast<Slots>(std::floor(x));
}

Slots slots_ceil(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) return static_cast<Slots>(r);
    return static_cast<Slots>(std::ceil(x));
}

namespace {

void add(std::vector<Violation>& v, std::string code, std::string detail) {
    v.push_back({std::move(code), std::move(detail)});
}

}  // namespace

std::vector<Violation> validate_topology(const Topology& t) {
    std::vector<Violation> v;
    std::set<std::string> ids;
    for (const auto& n : t.nodes) {
        if (!ids.insert(n.node_id).second) add(v, "duplicate-node", n.node_id);
        if (n.num_comm < 1) add(v, "node-comm-count", n.node_id);
        if (n.num_storage < 0) add(v, "node-storage-count", n.node_id);
        if (n.swap_latency_ms <= 0 || n.distill_latency_ms <= 0 || n.move_latency_ms <= 0)
            add(v, "node-latency", n.node_id + ": latencies must be strictly positive");
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& l : t.links) {
        const std::string tag = l.node_a + "-" + l.node_b;
        if (l.node_a == l.node_b) add(v, "link-self-loop", tag);
        if (!t.find_node(l.node_a) || !t.find_node(l.node_b)) add(v, "link-unknown-node", tag);
        auto key = std::minmax(l.node_a, l.node_b);
        if (!seen.insert(key).second) add(v, "duplicate-link", tag);
        if (l.length_km <= 0) add(v, "link-length", tag);
        if (l.capabilities.empty()) add(v, "link-no-capabilities", tag);
        for (size_t i = 0; i < l.capabilities.size(); ++i) {
            const auto& c = l.capabilities[i];
            if (!(c.fidelity > 0.25) || c.fidelity > 1.0) add(v, "capability-fidelity", tag);
            if (!(c.rate_hz > 0.0)) add(v, "capability-rate", tag);
            if (i > 0) {
                if (!(c.fidelity < l.capabilities[i - 1].fidelity))
                    add(v, "capability-order", tag + ": fidelity not strictly decreasing");
                else if (!(c.rate_hz > l.capabilities[i - 1].rate_hz))
                    add(v, "capability-order", tag + ": rate not strictly increasing");
            }
        }
    }
    return v;
}

std::vector<Violation> validate_demand(const Demand& d, const Topology& t) {
    std::vector<Violation> v;
    if (d.src == d.dst) add(v, "demand-endpoints", d.id + ": src equals dst");
    for (const auto& node : {d.src, d.dst}) {
        const NodeSpec* n = t.find_node(node);
        if (!n) add(v, "demand-unknown-node", d.id + ": " + node);
        else if (!n->is_end_node) add(v, "demand-not-end-node", d.id + ": " + node);
    }
    if (!(d.f_min > 0.25) || d.f_min > 1.0)
        add(v, "demand-fidelity", d.id + ": f_min must lie in (0.25, 1]");
    if (!(d.r_min > 0.0)) add(v, "demand-rate", d.id);
    if (d.j_max_s2 && *d.j_max_s2 < 0.0) add(v, "demand-jitter", d.id);
    return v;
}

std::vector<Violation> validate_protocol(const RepeaterProtocol& p, const Topology& t) {
    std::vector<Violation> v;
    if (p.ops.empty()) {
        add(v, "empty-protocol", "protocol has no operations");
        return v;
    }

    std::map<std::string, const ProtocolOp*> by_id;
    for (const auto& op : p.ops) {
        if (!by_id.emplace(op.op_id, &op).second) add(v, "duplicate-op", op.op_id);
    }

    for (const auto& op : p.ops) {
        if (op.start < 0 || op.start >= op.end)
            add(v, "op-window", op.op_id + ": start must precede end");
        if (op.kind == OpKind::link) {
            if (op.nodes.size() != 2)
                add(v, "link-arity", op.op_id + ": link op must name two nodes");
            else if (!t.find_link(op.nodes[0], op.nodes[1]))
                add(v, "link-not-adjacent", op.op_id + ": " + op.nodes[0] + "-" + op.nodes[1]);
            if (!op.link_fidelity)
                add(v, "link-fidelity-missing", op.op_id);
            else if (!(*op.link_fidelity > 0.25) || *op.link_fidelity > 1.0)
                add(v, "link-fidelity-range", op.op_id);
        } else {
            if (op.link_fidelity) add(v, "fidelity-on-non-link", op.op_id);
        }
        if (op.kind == OpKind::swap && !op.produces.empty())
            add(v, "swap-produces", op.op_id + ": deterministic swap measures out both qubits");

        for (const auto& q : op.qubits()) {
            if (std::find(op.nodes.begin(), op.nodes.end(), q.node_id) == op.nodes.end())
                add(v, "qubit-ownership", op.op_id + ": " + to_string(q) + " not at an op node");
            const NodeSpec* n = t.find_node(q.node_id);
            if (!n) {
                add(v, "qubit-unknown-node", op.op_id + ": " + to_string(q));
            } else {
                const int count = q.kind == QubitKind::communication ? n->num_comm : n->num_storage;
                if (q.index < 0 || q.index >= count)
                    add(v, "qubit-index", op.op_id + ": " + to_string(q) + " out of range");
            }
        }
    }

    // edges reference known ops and respect produce-before-consume timing
    std::map<std::string, std::vector<std::string>> succ;
    std::map<std::string, int> indegree;
    for (const auto& op : p.ops) indegree[op.op_id] = 0;
    for (const auto& [from, to] : p.edges) {
        if (!by_id.count(from) || !by_id.count(to)) {
            add(v, "edge-unknown-op", from + "->" + to);
            continue;
        }
        succ[from].push_back(to);
        indegree[to]++;
        if (by_id[from]->end > by_id[to]->start)
            add(v, "edge-timing", from + "->" + to + ": output consumed before it exists");
    }

    // cycle detection (Kahn)
    {
        auto deg = indegree;
        std::vector<std::string> queue;
        for (const auto& [id, d] : deg)
            if (d == 0) queue.push_back(id);
        size_t visited = 0;
        while (!queue.empty()) {
            std::string cur = queue.back();
            queue.pop_back();
            ++visited;
            for (const auto& nxt : succ[cur])
                if (--deg[nxt] == 0) queue.push_back(nxt);
        }
        if (visited != p.ops.size()) add(v, "cycle", "operation dependencies contain a cycle");
    }

    // link ops are exactly the sources of the DAG
    for (const auto& op : p.ops) {
        const bool source = indegree[op.op_id] == 0;
        if (source && op.kind != OpKind::link)
            add(v, "non-link-source", op.op_id);
        if (!source && op.kind == OpKind::link)
            add(v, "link-with-inputs", op.op_id);
    }

    // two ops may not touch the same qubit in overlapping windows; hold
    // semantics are expressed through edges, whose timing is already checked
    for (size_t i = 0; i < p.ops.size(); ++i) {
        for (size_t j = i + 1; j < p.ops.size(); ++j) {
            const auto& a = p.ops[i];
            const auto& b = p.ops[j];
            if (a.start >= b.end || b.start >= a.end) continue;
            auto qa = a.qubits();
            auto qb = b.qubits();
            std::vector<QubitRef> shared;
            std::set_intersection(qa.begin(), qa.end(), qb.begin(), qb.end(),
                                  std::back_inserter(shared));
            if (!shared.empty())
                add(v, "qubit-overlap",
                    a.op_id + "/" + b.op_id + " overlap on " + to_string(shared.front()));
        }
    }

    return v;
}

void derive_op_slots(NetworkSchedule& s, const std::vector<DemandProtocol>& pairs) {
    std::map<std::string, const RepeaterProtocol*> by_demand;
    for (const auto& dp : pairs) by_demand[dp.demand.id] = &dp.protocol;
    s.op_slots.clear();
    for (const auto& [key, start] : s.entries) {
        auto it = by_demand.find(key.demand_id);
        if (it == by_demand.end())
            throw std::invalid_argument("schedule entry for unknown demand " + key.demand_id);
        auto& windows = s.op_slots[key];
        for (const auto& op : it->second->ops)
            windows[op.op_id] = OpWindow{start + op.start, start + op.end};
    }
}

}  // namespace qns
