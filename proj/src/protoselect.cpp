#include "qns/protoselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "qns/fidelity.hpp"

namespace qns::select {

namespace fid = qns::fidelity;

Result<Route> route(const Topology& t, const Demand& d) {
    for (const auto& id : {d.src, d.dst}) {
        const NodeSpec* n = t.find_node(id);
        if (!n) return Result<Route>::fail("no-route", d.id + ": unknown node " + id);
        if (!n->is_end_node)
            return Result<Route>::fail("not-end-node", d.id + ": " + id + " is not an end node");
    }

    // Dijkstra on (distance, path) tuples; the path component breaks distance
    // ties towards the lexicographically smallest node sequence.
    using Entry = std::pair<double, std::vector<std::string>>;
    std::set<Entry> frontier;
    std::set<std::string> settled;
    frontier.insert({0.0, {d.src}});

    while (!frontier.empty()) {
        Entry cur = *frontier.begin();
        frontier.erase(frontier.begin());
        const std::string& node = cur.second.back();
        if (settled.count(node)) continue;
        settled.insert(node);
        if (node == d.dst) return Route{d.id, cur.second};
        for (const auto& nb : t.neighbors(node)) {
            if (settled.count(nb)) continue;
            const LinkSpec* l = t.find_link(node, nb);
            auto path = cur.second;
            path.push_back(nb);
            frontier.insert({cur.first + l->length_km, std::move(path)});
        }
    }
    return Result<Route>::fail("no-route", d.id + ": " + d.src + " and " + d.dst + " are disconnected");
}

Result<Capability> choose_link_capability(const LinkSpec& l, double f_required) {
    if (std::isnan(f_required) || f_required <= 0.25 || f_required > 1.0)
        throw std::domain_error("required link fidelity outside (0.25, 1]");
    const Capability* best = nullptr;
    for (const auto& c : l.capabilities) {
        if (c.fidelity + 1e-12 < f_required) continue;
        if (!best || c.rate_hz > best->rate_hz) best = &c;
    }
    if (!best)
        return Result<Capability>::fail(
            "infeasible-link", l.node_a + "-" + l.node_b + ": no capability reaches the target");
    return *best;
}

Result<PlanOutcome> plan_distillation(double f_target, const LinkSpec& l, const SelectConfig& cfg) {
    auto direct = choose_link_capability(l, f_target);
    if (direct.ok())
        return PlanOutcome{DistillationPlan{}, direct.value(), direct.value().fidelity};

    // pumping: fewest base links whose chain reaches the target before its
    // fixed point; ties towards the higher-rate capability
    int best_rounds = std::numeric_limits<int>::max();
    Capability best_cap;
    double best_f = 0.0;
    for (const auto& cap : l.capabilities) {
        double f = cap.fidelity;
        for (int len = 2; len <= cfg.pump_rounds_cap; ++len) {
            const double next = fid::distill_fidelity(f, cap.fidelity);
            if (next >= f_target - 1e-12) {
                if (len < best_rounds ||
                    (len == best_rounds && cap.rate_hz > best_cap.rate_hz)) {
                    best_rounds = len;
                    best_cap = cap;
                    best_f = next;
                }
                break;
            }
            if (next - f < 1e-13) break;  // fixed point, target unreachable by pumping
            f = next;
        }
    }
    if (best_rounds != std::numeric_limits<int>::max()) {
        DistillationPlan plan;
        plan.scheme = DistillationPlan::Scheme::pump;
        plan.rounds = best_rounds;
        return PlanOutcome{plan, best_cap, best_f};
    }

    // nested pumping: shallowest tree within the depth cap
    int best_depth = std::numeric_limits<int>::max();
    for (const auto& cap : l.capabilities) {
        double f = cap.fidelity;
        for (int d = 1; d <= cfg.nesting_depth_cap; ++d) {
            f = fid::distill_fidelity(f, f);
            if (f >= f_target - 1e-12) {
                if (d < best_depth || (d == best_depth && cap.rate_hz > best_cap.rate_hz)) {
                    best_depth = d;
                    best_cap = cap;
                    best_f = f;
                }
                break;
            }
        }
    }
    if (best_depth != std::numeric_limits<int>::max()) {
        DistillationPlan plan;
        plan.scheme = DistillationPlan::Scheme::nested;
        plan.depth = best_depth;
        return PlanOutcome{plan, best_cap, best_f};
    }

    return Result<PlanOutcome>::fail(
        "infeasible-distillation",
        l.node_a + "-" + l.node_b + ": target fidelity unreachable within the nesting cap");
}

namespace {

struct QubitPool {
    std::vector<bool> comm_free;
    std::vector<bool> stor_free;
};

struct MapperState {
    const Topology& topo;
    std::map<std::string, QubitPool> pools;

    QubitPool& pool(const std::string& node) {
        auto it = pools.find(node);
        if (it != pools.end()) return it->second;
        const NodeSpec* n = topo.find_node(node);
        if (!n) throw std::invalid_argument("unknown node in protocol: " + node);
        QubitPool p;
        p.comm_free.assign(static_cast<size_t>(n->num_comm), true);
        p.stor_free.assign(static_cast<size_t>(n->num_storage), true);
        return pools.emplace(node, std::move(p)).first->second;
    }

    std::optional<QubitRef> claim(const std::string& node, QubitKind kind) {
        auto& p = pool(node);
        auto& v = kind == QubitKind::communication ? p.comm_free : p.stor_free;
        for (size_t i = 0; i < v.size(); ++i) {
            if (v[i]) {
                v[i] = false;
                return QubitRef{node, kind, static_cast<int>(i)};
            }
        }
        return std::nullopt;
    }

    void release(const QubitRef& q) {
        auto& p = pool(q.node_id);
        auto& v = q.kind == QubitKind::communication ? p.comm_free : p.stor_free;
        v[static_cast<size_t>(q.index)] = true;
    }
};

}  // namespace

Result<RepeaterProtocol> map_qubits(RepeaterProtocol p, const Topology& t) {
    using R = Result<RepeaterProtocol>;
    if (p.ops.empty()) return R::fail("empty-protocol", "no operations to map");

    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < p.ops.size(); ++i) pos[p.ops[i].op_id] = i;

    std::map<std::string, std::vector<std::string>> children;  // consumer -> producers, in op order
    std::map<std::string, std::string> consumer;
    for (const auto& [from, to] : p.edges) {
        if (!pos.count(from) || !pos.count(to))
            return R::fail("edge-unknown-op", from + "->" + to);
        if (pos[from] >= pos[to])
            return R::fail("not-topological", "ops must be listed producers-first");
        children[to].push_back(from);
        if (consumer.count(from))
            return R::fail("not-a-tree", from + " feeds more than one operation");
        consumer[from] = to;
    }
    for (auto& [id, kids] : children)
        std::sort(kids.begin(), kids.end(),
                  [&](const std::string& a, const std::string& b) { return pos[a] < pos[b]; });

    MapperState state{t, {}};
    // output link location per op: node -> qubit holding that end
    std::map<std::string, std::map<std::string, QubitRef>> out_pair;

    // The qubit holding a link's end at node n stays occupied through swaps
    // at other nodes (and through distillations that keep its pair) until an
    // ancestor op at n finally consumes it; without such an ancestor it holds
    // the delivered link to the end of the protocol.
    auto release_position = [&](const std::string& link_id, const std::string& n) -> size_t {
        std::string cur = link_id;
        while (true) {
            auto it = consumer.find(cur);
            if (it == consumer.end()) return p.ops.size();
            const std::string& c = it->second;
            const ProtocolOp& cop = p.ops[pos[c]];
            if (cop.kind == OpKind::swap) {
                if (!cop.nodes.empty() && cop.nodes[0] == n) return pos[c];
            } else if (cop.kind == OpKind::distill) {
                const auto& kids = children[c];
                if (kids.empty() || kids[0] != cur) return pos[c];  // dropped pair
            }
            cur = c;
        }
    };

    for (size_t i = 0; i < p.ops.size(); ++i) {
        ProtocolOp& op = p.ops[i];

        if (op.kind == OpKind::link) {
            if (op.nodes.size() != 2)
                return R::fail("link-arity", op.op_id + ": link op must name two nodes");
            std::vector<QubitRef> consumes, produces;
            std::map<std::string, QubitRef> ends;
            for (const auto& n : op.nodes) {
                auto comm = state.claim(n, QubitKind::communication);
                if (!comm)
                    return R::fail("qubit-exhaustion",
                                   op.op_id + ": no free communication qubit at " + n);
                consumes.push_back(*comm);
                // the comm qubit must be vacated when another link op at this
                // node runs before this end of the link is released
                const size_t released_at = release_position(op.op_id, n);
                bool comm_needed_again = false;
                for (size_t k = i + 1; k < released_at && k < p.ops.size(); ++k) {
                    const auto& other = p.ops[k];
                    if (other.kind == OpKind::link &&
                        std::find(other.nodes.begin(), other.nodes.end(), n) != other.nodes.end()) {
                        comm_needed_again = true;
                        break;
                    }
                }
                std::optional<QubitRef> stor;
                if (comm_needed_again) stor = state.claim(n, QubitKind::storage);
                if (stor) {
                    consumes.push_back(*stor);
                    produces.push_back(*stor);
                    ends.emplace(n, *stor);
                    state.release(*comm);  // freed once the link moves to storage
                } else {
                    produces.push_back(*comm);
                    ends.emplace(n, *comm);
                }
            }
            std::sort(consumes.begin(), consumes.end());
            std::sort(produces.begin(), produces.end());
            op.consumes = std::move(consumes);
            op.produces = std::move(produces);
            out_pair[op.op_id] = std::move(ends);
        } else {
            const auto& kids = children[op.op_id];
            if (kids.size() != 2)
                return R::fail("not-a-tree", op.op_id + ": needs exactly two input links");
            auto& left = out_pair[kids[0]];
            auto& right = out_pair[kids[1]];

            if (op.kind == OpKind::swap) {
                if (op.nodes.size() != 1)
                    return R::fail("swap-arity", op.op_id + ": swap op must name its pivot node");
                const std::string& pivot = op.nodes[0];
                auto lq = left.find(pivot);
                auto rq = right.find(pivot);
                if (lq == left.end() || rq == right.end())
                    return R::fail("malformed-tree",
                                   op.op_id + ": input links do not meet at " + pivot);
                op.consumes = {lq->second, rq->second};
                std::sort(op.consumes.begin(), op.consumes.end());
                op.produces.clear();
                state.release(lq->second);
                state.release(rq->second);
                // the swapped link spans the two outer endpoints
                std::map<std::string, QubitRef> ends;
                for (const auto& [n, q] : left)
                    if (n != pivot) ends.emplace(n, q);
                for (const auto& [n, q] : right)
                    if (n != pivot) ends.emplace(n, q);
                if (ends.size() != 2)
                    return R::fail("malformed-tree", op.op_id + ": swap output is not a single link");
                out_pair[op.op_id] = std::move(ends);
            } else {
                if (op.nodes.size() != 2)
                    return R::fail("distill-arity", op.op_id + ": distill op must name two nodes");
                for (const auto& n : op.nodes) {
                    if (!left.count(n) || !right.count(n))
                        return R::fail("malformed-tree",
                                       op.op_id + ": input links do not both span " + n);
                }
                std::vector<QubitRef> consumes;
                for (const auto& [n, q] : left) consumes.push_back(q);
                for (const auto& [n, q] : right) consumes.push_back(q);
                std::sort(consumes.begin(), consumes.end());
                op.consumes = std::move(consumes);
                // two-to-one: the first (longer-running) pair keeps the output
                std::vector<QubitRef> produces;
                for (const auto& [n, q] : left) produces.push_back(q);
                std::sort(produces.begin(), produces.end());
                op.produces = std::move(produces);
                for (const auto& [n, q] : right) state.release(q);
                out_pair[op.op_id] = left;
            }
        }
    }
    return p;
}

namespace {

Result<Slots> op_duration(const ProtocolOp& op, const Topology& t, const SelectConfig& cfg) {
    using R = Result<Slots>;
    switch (op.kind) {
        case OpKind::link: {
            const LinkSpec* l = op.nodes.size() == 2 ? t.find_link(op.nodes[0], op.nodes[1]) : nullptr;
            if (!l) return R::fail("link-not-adjacent", op.op_id);
            const Capability* cap = nullptr;
            for (const auto& c : l->capabilities)
                if (std::abs(c.fidelity - op.link_fidelity.value_or(-1.0)) < 1e-9) cap = &c;
            if (!cap) return R::fail("unknown-capability", op.op_id);
            // expected latency of entanglement establishment, in slots
            const double slots =
                cfg.attempt_multiplier * 1000.0 / (cap->rate_hz * cfg.t_slot_ms);
            return std::max<Slots>(1, slots_ceil(slots));
        }
        case OpKind::swap: {
            const NodeSpec* n = op.nodes.empty() ? nullptr : t.find_node(op.nodes[0]);
            if (!n) return R::fail("unknown-node", op.op_id);
            return std::max<Slots>(1, slots_ceil(n->swap_latency_ms / cfg.t_slot_ms));
        }
        case OpKind::distill: {
            double latency = 0.0;
            for (const auto& id : op.nodes) {
                const NodeSpec* n = t.find_node(id);
                if (!n) return R::fail("unknown-node", op.op_id);
                latency = std::max(latency, n->distill_latency_ms);
            }
            return std::max<Slots>(1, slots_ceil(latency / cfg.t_slot_ms));
        }
    }
    return R::fail("unknown-op-kind", op.op_id);
}

}  // namespace

Result<RepeaterProtocol> layout(RepeaterProtocol p, const Topology& t, const SelectConfig& cfg) {
    using R = Result<RepeaterProtocol>;
    if (p.ops.empty()) return R::fail("empty-protocol", "no operations to lay out");

    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < p.ops.size(); ++i) pos[p.ops[i].op_id] = i;
    std::map<std::string, std::vector<std::string>> children;
    std::map<std::string, std::vector<std::string>> consumers;
    for (const auto& [from, to] : p.edges) {
        if (!pos.count(from) || !pos.count(to)) return R::fail("edge-unknown-op", from + "->" + to);
        if (pos[from] >= pos[to]) return R::fail("not-topological", "ops must be listed producers-first");
        children[to].push_back(from);
        consumers[from].push_back(to);
    }

    std::vector<Slots> dur(p.ops.size());
    for (size_t i = 0; i < p.ops.size(); ++i) {
        auto d = op_duration(p.ops[i], t, cfg);
        if (!d.ok()) return Error{d.error()};
        dur[i] = d.value();
    }

    // pass 1: ASAP under precedence and qubit availability
    constexpr Slots kHeld = std::numeric_limits<Slots>::max() / 4;
    std::map<QubitRef, Slots> free_from;
    for (size_t i = 0; i < p.ops.size(); ++i) {
        ProtocolOp& op = p.ops[i];
        Slots s = 0;
        for (const auto& c : children[op.op_id]) s = std::max(s, p.ops[pos[c]].end);
        if (op.kind == OpKind::link) {
            for (const auto& q : op.qubits()) {
                auto it = free_from.find(q);
                if (it != free_from.end()) {
                    if (it->second >= kHeld)
                        return R::fail("qubit-exhaustion",
                                       op.op_id + ": " + to_string(q) + " is still holding a link");
                    s = std::max(s, it->second);
                }
            }
        }
        op.start = s;
        op.end = s + dur[i];
        for (const auto& q : op.consumes) free_from[q] = op.end;
        for (const auto& q : op.produces) free_from[q] = kHeld;
    }

    // pass 2: push link establishment ALAP without moving swaps/distills
    std::vector<size_t> link_order;
    for (size_t i = 0; i < p.ops.size(); ++i)
        if (p.ops[i].kind == OpKind::link) link_order.push_back(i);
    std::sort(link_order.begin(), link_order.end(), [&](size_t a, size_t b) {
        if (p.ops[a].start != p.ops[b].start) return p.ops[a].start > p.ops[b].start;
        return p.ops[a].op_id > p.ops[b].op_id;
    });
    const Slots latency = protocol_latency(p);
    for (size_t idx : link_order) {
        ProtocolOp& op = p.ops[idx];
        Slots bound = latency;
        for (const auto& c : consumers[op.op_id]) bound = std::min(bound, p.ops[pos[c]].start);

        // blocked intervals per qubit: execution windows of the other ops
        // plus the spans where a qubit keeps holding a stored link
        std::vector<std::pair<Slots, Slots>> blocked;
        for (const auto& q : op.qubits()) {
            std::vector<const ProtocolOp*> users;
            for (size_t j = 0; j < p.ops.size(); ++j) {
                if (j == idx) continue;
                const ProtocolOp& other = p.ops[j];
                const auto oq = other.qubits();
                if (std::find(oq.begin(), oq.end(), q) == oq.end()) continue;
                users.push_back(&other);
                blocked.emplace_back(other.start, other.end);
            }
            std::sort(users.begin(), users.end(),
                      [](const ProtocolOp* a, const ProtocolOp* b) { return a->start < b->start; });
            for (size_t u = 0; u < users.size(); ++u) {
                const bool stores = std::find(users[u]->produces.begin(),
                                              users[u]->produces.end(),
                                              q) != users[u]->produces.end();
                if (!stores) continue;
                const Slots until = u + 1 < users.size() ? users[u + 1]->start : latency;
                if (users[u]->end < until) blocked.emplace_back(users[u]->end, until);
            }
        }

        for (Slots cand = bound - dur[idx]; cand > op.start; --cand) {
            bool conflict = false;
            for (const auto& [bs, be] : blocked) {
                if (cand < be && bs < cand + dur[idx]) {
                    conflict = true;
                    break;
                }
            }
            if (!conflict) {
                op.start = cand;
                op.end = cand + dur[idx];
                break;
            }
        }
    }
    return p;
}

namespace {

class ProtocolBuilder {
public:
    ProtocolBuilder(const Topology& topo, const SelectConfig& cfg) : topo_(topo), cfg_(cfg) {}

    Result<std::string> build_path(const std::vector<std::string>& path, size_t lo, size_t hi,
                                   double target) {
        using R = Result<std::string>;
        if (hi - lo == 1) return build_segment(path[lo], path[hi], target);

        size_t pivot = 0;
        switch (cfg_.pivot_rule) {
            case PivotRule::midpoint: pivot = (lo + hi) / 2; break;
            case PivotRule::lowest: pivot = lo + 1; break;
            case PivotRule::highest: pivot = hi - 1; break;
        }
        const double sub_target = fid::required_pre_swap_fidelity(target);
        auto left = build_path(path, lo, pivot, sub_target);
        if (!left.ok()) return left;
        auto right = build_path(path, pivot, hi, sub_target);
        if (!right.ok()) return right;

        ProtocolOp op;
        op.op_id = "S" + std::to_string(++swap_n_);
        op.kind = OpKind::swap;
        op.nodes = {path[pivot]};
        ops_.push_back(op);
        edges_.emplace_back(left.value(), op.op_id);
        edges_.emplace_back(right.value(), op.op_id);
        return R(op.op_id);
    }

    RepeaterProtocol take() {
        RepeaterProtocol p;
        p.ops = std::move(ops_);
        p.edges = std::move(edges_);
        return p;
    }

private:
    Result<std::string> build_segment(const std::string& u, const std::string& v, double target) {
        using R = Result<std::string>;
        const LinkSpec* l = topo_.find_link(u, v);
        if (!l) return R::fail("not-adjacent", u + "-" + v + " are not connected");
        auto plan = plan_distillation(target, *l, cfg_);
        if (!plan.ok()) return Error{plan.error()};
        const auto& outcome = plan.value();

        switch (outcome.plan.scheme) {
            case DistillationPlan::Scheme::none:
                return R(add_link(u, v, outcome.capability.fidelity));
            case DistillationPlan::Scheme::pump: {
                std::string held = add_link(u, v, outcome.capability.fidelity);
                for (int k = 1; k < outcome.plan.rounds; ++k) {
                    std::string fresh = add_link(u, v, outcome.capability.fidelity);
                    held = add_distill(held, fresh, u, v);
                }
                return R(held);
            }
            case DistillationPlan::Scheme::nested:
                return R(build_nested(u, v, outcome.capability.fidelity, outcome.plan.depth));
        }
        return R::fail("unknown-scheme", u + "-" + v);
    }

    std::string build_nested(const std::string& u, const std::string& v, double f, int depth) {
        if (depth == 0) return add_link(u, v, f);
        std::string left = build_nested(u, v, f, depth - 1);
        std::string right = build_nested(u, v, f, depth - 1);
        return add_distill(left, right, u, v);
    }

    std::string add_link(const std::string& u, const std::string& v, double f) {
        ProtocolOp op;
        op.op_id = "L" + std::to_string(++link_n_);
        op.kind = OpKind::link;
        op.nodes = {std::min(u, v), std::max(u, v)};
        op.link_fidelity = f;
        ops_.push_back(op);
        return op.op_id;
    }

    std::string add_distill(const std::string& first, const std::string& second,
                            const std::string& u, const std::string& v) {
        ProtocolOp op;
        op.op_id = "D" + std::to_string(++distill_n_);
        op.kind = OpKind::distill;
        op.nodes = {std::min(u, v), std::max(u, v)};
        ops_.push_back(op);
        edges_.emplace_back(first, op.op_id);
        edges_.emplace_back(second, op.op_id);
        return op.op_id;
    }

    const Topology& topo_;
    const SelectConfig& cfg_;
    std::vector<ProtocolOp> ops_;
    std::vector<std::pair<std::string, std::string>> edges_;
    int link_n_ = 0;
    int swap_n_ = 0;
    int distill_n_ = 0;
};

}  // namespace

Result<RepeaterProtocol> esss(const Route& r, double f_min, const Topology& t,
                              const SelectConfig& cfg) {
    using R = Result<RepeaterProtocol>;
    if (std::isnan(f_min) || f_min <= 0.25 || f_min > 1.0)
        throw std::domain_error("f_min outside (0.25, 1]");
    if (r.path.size() < 2) return R::fail("route-too-short", r.demand_id);

    ProtocolBuilder builder(t, cfg);
    auto root = builder.build_path(r.path, 0, r.path.size() - 1, f_min);
    if (!root.ok()) return Error{root.error()};

    auto mapped = map_qubits(builder.take(), t);
    if (!mapped.ok()) return mapped;
    auto laid_out = layout(mapped.take(), t, cfg);
    if (!laid_out.ok()) return laid_out;

    RepeaterProtocol p = laid_out.take();
    p.worst_case_fidelity = fid::end_to_end_worst_case(p, fid::DecayModel::identity(), cfg.t_slot_ms);
    p.success_probability = fid::success_probability(p, fid::SuccessModel::deterministic());
    if (p.worst_case_fidelity + 1e-9 < f_min)
        return R::fail("fidelity-shortfall", r.demand_id + ": selection missed the target");
    return p;
}

}  // namespace qns::select
