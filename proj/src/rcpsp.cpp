#include "qns/rcpsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "qns/pts.hpp"

namespace qns::rcpsp {

namespace {

void chain(std::vector<TimeLag>& lags, int from, int to, Slots min_lag, Slots max_lag) {
    lags.push_back({from, to, min_lag, max_lag});
}

}  // namespace

Result<ActivityNetwork> build_aon(const RepeaterProtocol& p, double t_slot_ms) {
    using R = Result<ActivityNetwork>;
    if (p.ops.empty()) return R::fail("empty-protocol", "cannot build a fragment of no ops");
    for (const auto& op : p.ops)
        if (op.start < 0 || op.end <= op.start)
            return R::fail("op-window", op.op_id + ": operations need laid-out slot windows");

    const Slots latency = protocol_latency(p);
    ActivityNetwork net;
    net.t_slot_ms = t_slot_ms;
    net.horizon = latency;

    auto add = [&](ActivityKind kind, Slots duration, std::vector<QubitRef> resources,
                   std::string op_id) {
        Activity a;
        a.id = static_cast<int>(net.activities.size());
        a.kind = kind;
        a.duration = duration;
        a.resources = std::move(resources);
        a.op_id = std::move(op_id);
        net.activities.push_back(a);
        return a.id;
    };

    const int js = add(ActivityKind::dummy_start, 0, {}, "");
    std::map<std::string, int> op_act;
    std::map<std::string, const ProtocolOp*> op_by_id;
    for (const auto& op : p.ops) {
        const int id = add(ActivityKind::op, op.duration(), op.qubits(), op.op_id);
        op_act[op.op_id] = id;
        op_by_id[op.op_id] = &op;
        chain(net.lags, js, id, op.start, op.start);
    }
    const int je = add(ActivityKind::dummy_end, 0, {}, "");

    // occupation activities: one per stored link per gap in its qubit's use list
    std::map<QubitRef, std::vector<const ProtocolOp*>> use_lists;
    for (const auto& op : p.ops)
        for (const auto& q : op.qubits()) use_lists[q].push_back(&op);
    int occ_n = 0;
    for (auto& [qubit, uses] : use_lists) {
        std::stable_sort(uses.begin(), uses.end(),
                         [](const ProtocolOp* a, const ProtocolOp* b) { return a->start < b->start; });
        for (size_t i = 0; i < uses.size(); ++i) {
            const ProtocolOp* a = uses[i];
            const bool stores = std::find(a->produces.begin(), a->produces.end(), qubit) !=
                                a->produces.end();
            if (!stores) continue;
            const bool last = i + 1 == uses.size();
            const Slots gap = last ? latency - a->end : uses[i + 1]->start - a->end;
            const int successor = last ? je : op_act[uses[i + 1]->op_id];
            if (gap == 0) {
                chain(net.lags, op_act[a->op_id], successor, 0, 0);
                continue;
            }
            const int occ =
                add(ActivityKind::occupation, gap, {qubit}, "O" + std::to_string(++occ_n));
            chain(net.lags, op_act[a->op_id], occ, 0, 0);
            chain(net.lags, occ, successor, 0, 0);
        }
    }

    for (const auto& op : p.ops)
        if (op.end == latency) chain(net.lags, op_act[op.op_id], je, 0, 0);

    return net;
}

namespace {

// rigid offsets of every activity from the dummy start, via the equality lags
Result<std::vector<Slots>> rigid_offsets(const ActivityNetwork& frag, int start_id) {
    using R = Result<std::vector<Slots>>;
    std::vector<Slots> offset(frag.activities.size(), -1);
    offset[static_cast<size_t>(start_id)] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& lag : frag.lags) {
            if (lag.min_lag != lag.max_lag) continue;
            const auto f = static_cast<size_t>(lag.from);
            const auto t = static_cast<size_t>(lag.to);
            if (offset[f] < 0) continue;
            const Slots want = offset[f] + frag.activities[f].duration + lag.min_lag;
            if (offset[t] < 0) {
                offset[t] = want;
                changed = true;
            } else if (offset[t] != want) {
                return R::fail("lag-inconsistent",
                               "rigid lags disagree at activity " + std::to_string(lag.to));
            }
        }
    }
    for (size_t i = 0; i < offset.size(); ++i)
        if (offset[i] < 0)
            return R::fail("lag-unreachable",
                           "activity " + std::to_string(i) + " is not rigidly placed");
    return offset;
}

}  // namespace

ActivityNetwork condense_fpr(const ActivityNetwork& fragment) {
    Slots span = 0;
    std::set<QubitRef> used;
    auto offsets = rigid_offsets(fragment, 0);
    const auto& off = offsets.value();
    for (const auto& a : fragment.activities) {
        span = std::max(span, off[static_cast<size_t>(a.id)] + a.duration);
        used.insert(a.resources.begin(), a.resources.end());
    }

    ActivityNetwork net;
    net.t_slot_ms = fragment.t_slot_ms;
    net.horizon = span;
    Activity js{0, ActivityKind::dummy_start, 0, {}, "", -1, ""};
    Activity ja{1, ActivityKind::condensed, span,
                std::vector<QubitRef>(used.begin(), used.end()), "", -1, ""};
    Activity je{2, ActivityKind::dummy_end, 0, {}, "", -1, ""};
    net.activities = {js, ja, je};
    net.lags = {{0, 1, 0, 0}, {1, 2, 0, 0}};
    return net;
}

Result<ActivityNetwork> build_full_aon(const std::vector<DemandProtocol>& pairs,
                                       const RcpspOptions& opts) {
    ActivityNetwork net;
    net.t_slot_ms = opts.t_slot_ms;

    std::vector<pts::PeriodicTask> tasks;
    for (const auto& dp : pairs) {
        auto task = pts::to_task(dp.demand, dp.protocol, opts.t_slot_ms);
        if (!task.ok()) return Error{task.error()};
        tasks.push_back(task.take());
    }

    Slots h = 1;
    if (!pairs.empty()) {
        auto hp = pts::hyperperiod(tasks, opts.hyperperiod_cap);
        if (!hp.ok()) return Error{hp.error()};
        h = hp.value();
    }
    net.horizon = h;

    Activity global_start{0, ActivityKind::dummy_start, 0, {}, "", -1, ""};
    net.activities.push_back(global_start);

    for (size_t i = 0; i < pairs.size(); ++i) {
        auto frag = build_aon(pairs[i].protocol, opts.t_slot_ms);
        if (!frag.ok()) return Error{frag.error()};
        ActivityNetwork fragment = opts.style == FragmentStyle::condensed
                                       ? condense_fpr(frag.value())
                                       : frag.take();

        const Slots period = tasks[i].period;
        const Slots span = tasks[i].wcet;
        const Slots instances = h / period;
        for (Slots l = 0; l < instances; ++l) {
            const int base = static_cast<int>(net.activities.size());
            for (const auto& a : fragment.activities) {
                Activity copy = a;
                copy.id = base + a.id;
                copy.demand_id = pairs[i].demand.id;
                copy.instance = static_cast<int>(l);
                if (a.kind == ActivityKind::dummy_start) copy.kind = ActivityKind::instance_start;
                if (a.kind == ActivityKind::dummy_end) copy.kind = ActivityKind::instance_end;
                net.activities.push_back(copy);
            }
            for (const auto& lag : fragment.lags)
                net.lags.push_back({base + lag.from, base + lag.to, lag.min_lag, lag.max_lag});

            // the l-th instance executes within its period [lT, (l+1)T]
            chain(net.lags, 0, base, l * period, (l + 1) * period - span);

            InstanceInfo info;
            info.demand_id = pairs[i].demand.id;
            info.instance = static_cast<int>(l);
            info.period = period;
            info.release = l * period;
            info.deadline = (l + 1) * period;
            info.span = span;
            info.start_activity = base;
            net.instances.push_back(info);
        }
    }

    Activity global_end{static_cast<int>(net.activities.size()), ActivityKind::dummy_end, 0, {},
                        "", -1, ""};
    net.activities.push_back(global_end);
    for (const auto& info : net.instances) {
        // instance dummy end id: last activity of the cloned fragment block
        int end_id = -1;
        for (int id = info.start_activity; id < static_cast<int>(net.activities.size()); ++id) {
            const auto& a = net.activities[static_cast<size_t>(id)];
            if (a.kind == ActivityKind::instance_end && a.demand_id == info.demand_id &&
                a.instance == info.instance) {
                end_id = id;
                break;
            }
        }
        if (end_id >= 0) chain(net.lags, end_id, global_end.id, 0, h);
    }
    return net;
}

Result<ActivityNetwork> add_jitter_lags(ActivityNetwork net,
                                        const std::vector<DemandProtocol>& pairs) {
    using R = Result<ActivityNetwork>;
    for (const auto& dp : pairs) {
        if (!dp.demand.j_max_s2) continue;
        const Slots width =
            slots_floor(std::sqrt(*dp.demand.j_max_s2) * 1000.0 / net.t_slot_ms);
        InstanceInfo* prev = nullptr;
        for (auto& info : net.instances) {
            if (info.demand_id != dp.demand.id) continue;
            info.jitter_halfwidth = width;
            if (info.period + width < info.span)
                return R::fail("jitter-window-empty",
                               dp.demand.id + ": jitter bound leaves no room for the protocol");
            if (prev)
                chain(net.lags, prev->start_activity, info.start_activity,
                      info.period - width, info.period + width);
            prev = &info;
        }
    }
    return net;
}

namespace {

struct BusyMap {
    // per qubit: interval start -> end, non-overlapping
    std::map<QubitRef, std::map<Slots, Slots>> busy;

    // first conflicting interval end for [s, e) on q, or nullopt when free
    std::optional<Slots> conflict(const QubitRef& q, Slots s, Slots e) const {
        auto it = busy.find(q);
        if (it == busy.end()) return std::nullopt;
        const auto& intervals = it->second;
        auto next = intervals.upper_bound(s);
        if (next != intervals.begin()) {
            auto prev = std::prev(next);
            if (prev->second > s) return prev->second;
        }
        if (next != intervals.end() && next->first < e) return next->second;
        return std::nullopt;
    }

    void occupy(const QubitRef& q, Slots s, Slots e) { busy[q][s] = e; }
};

}  // namespace

Result<NetworkSchedule> schedule_aon(const ActivityNetwork& net,
                                     const std::vector<DemandProtocol>& pairs) {
    using R = Result<NetworkSchedule>;
    NetworkSchedule out;
    out.t_slot_ms = net.t_slot_ms;
    out.length = std::max<Slots>(1, net.horizon);

    // rigid internal offsets: propagate equality lags within each instance
    std::vector<Slots> offset(net.activities.size(), -1);
    for (const auto& info : net.instances)
        offset[static_cast<size_t>(info.start_activity)] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& lag : net.lags) {
            if (lag.min_lag != lag.max_lag) continue;
            const auto f = static_cast<size_t>(lag.from);
            const auto t = static_cast<size_t>(lag.to);
            const auto& af = net.activities[f];
            const auto& at = net.activities[t];
            // only lags inside one instance pin rigid offsets
            if (af.instance < 0 || at.instance < 0) continue;
            if (af.demand_id != at.demand_id || af.instance != at.instance) continue;
            if (offset[f] < 0) continue;
            const Slots want = offset[f] + net.activities[f].duration + lag.min_lag;
            if (offset[t] < 0) {
                offset[t] = want;
                changed = true;
            } else if (offset[t] != want) {
                return R::fail("lag-inconsistent", "instance fragment is not rigid");
            }
        }
    }

    // group resource-bearing activities by instance
    std::map<std::pair<std::string, int>, std::vector<size_t>> members;
    for (size_t i = 0; i < net.activities.size(); ++i) {
        const auto& a = net.activities[i];
        if (a.instance < 0 || a.duration == 0 || a.resources.empty()) continue;
        if (offset[i] < 0)
            return R::fail("lag-unreachable", "activity " + std::to_string(a.id) +
                                                  " is not rigidly offset from its instance start");
        members[{a.demand_id, a.instance}].push_back(i);
    }

    // EDF over instances: (deadline, demand, instance)
    std::vector<const InstanceInfo*> order;
    for (const auto& info : net.instances) order.push_back(&info);
    std::sort(order.begin(), order.end(), [](const InstanceInfo* a, const InstanceInfo* b) {
        return std::make_tuple(a->deadline, a->demand_id, a->instance) <
               std::make_tuple(b->deadline, b->demand_id, b->instance);
    });

    BusyMap busy;
    std::map<std::string, std::pair<int, Slots>> anchor;  // demand -> (instance, start)

    for (const InstanceInfo* info : order) {
        Slots lo = info->release;
        Slots hi = info->deadline - info->span;
        if (info->jitter_halfwidth) {
            auto it = anchor.find(info->demand_id);
            if (it != anchor.end()) {
                const Slots expected =
                    it->second.second +
                    static_cast<Slots>(info->instance - it->second.first) * info->period;
                lo = std::max(lo, expected - *info->jitter_halfwidth);
                hi = std::min(hi, expected + *info->jitter_halfwidth);
            }
        }

        const auto& acts = members[{info->demand_id, info->instance}];
        std::optional<Slots> placed;
        Slots t = lo;
        while (t <= hi) {
            Slots bump = t;
            for (size_t idx : acts) {
                const auto& a = net.activities[idx];
                const Slots s = t + offset[idx];
                const Slots e = s + a.duration;
                for (const auto& q : a.resources) {
                    if (auto c = busy.conflict(q, s, e)) {
                        bump = std::max(bump, *c - offset[idx]);
                    }
                }
            }
            if (bump == t) {
                placed = t;
                break;
            }
            t = bump;
        }

        if (!placed) {
            out.unscheduled.push_back({info->demand_id, info->instance});
            continue;
        }
        for (size_t idx : acts) {
            const auto& a = net.activities[idx];
            const Slots s = *placed + offset[idx];
            for (const auto& q : a.resources) busy.occupy(q, s, s + a.duration);
        }
        out.entries[{info->demand_id, info->instance}] = *placed;
        anchor[info->demand_id] = {info->instance, *placed};
    }

    std::sort(out.unscheduled.begin(), out.unscheduled.end());
    derive_op_slots(out, pairs);
    return out;
}

std::string dump_aon(const ActivityNetwork& net) {
    auto kind_name = [](ActivityKind k) {
        switch (k) {
            case ActivityKind::dummy_start: return "dummy_start";
            case ActivityKind::dummy_end: return "dummy_end";
            case ActivityKind::instance_start: return "instance_start";
            case ActivityKind::instance_end: return "instance_end";
            case ActivityKind::op: return "op";
            case ActivityKind::occupation: return "occupation";
            case ActivityKind::condensed: return "condensed";
        }
        return "?";
    };
    std::string out = "horizon " + std::to_string(net.horizon) + " slots\n";
    for (const auto& a : net.activities) {
        out += "activity " + std::to_string(a.id) + " " + kind_name(a.kind) + " p=" +
               std::to_string(a.duration);
        if (!a.demand_id.empty())
            out += " " + a.demand_id + "#" + std::to_string(a.instance);
        if (!a.op_id.empty()) out += " " + a.op_id;
        for (const auto& q : a.resources) out += " " + to_string(q);
        out += "\n";
    }
    for (const auto& lag : net.lags)
        out += "lag " + std::to_string(lag.from) + "->" + std::to_string(lag.to) + " [" +
               std::to_string(lag.min_lag) + "," + std::to_string(lag.max_lag) + "]\n";
    for (const auto& info : net.instances)
        out += "instance " + info.demand_id + "#" + std::to_string(info.instance) + " window [" +
               std::to_string(info.release) + "," + std::to_string(info.deadline) + ") span " +
               std::to_string(info.span) + "\n";
    return out;
}

Result<NetworkSchedule> schedule_rcpsp(const std::vector<DemandProtocol>& pairs,
                                       const RcpspOptions& opts) {
    auto net = build_full_aon(pairs, opts);
    if (!net.ok()) return Error{net.error()};
    if (opts.jitter_constrained) {
        auto with_lags = add_jitter_lags(net.take(), pairs);
        if (!with_lags.ok()) return Error{with_lags.error()};
        return schedule_aon(with_lags.value(), pairs);
    }
    return schedule_aon(net.value(), pairs);
}

}  // namespace qns::rcpsp
