#include "qns/validate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace qns::validate {

namespace {

enum class Use { exec, hold };

struct QubitUse {
    Slots start = 0;
    Slots end = 0;
    Use use = Use::exec;
    InstanceKey key;
    std::string op_id;
};

std::string describe(const QubitRef& q, const QubitUse& u) {
    std::ostringstream os;
    os << to_string(q) << " by " << u.key.demand_id << "#" << u.key.instance << "/" << u.op_id
       << (u.use == Use::exec ? " (op)" : " (held link)") << " in [" << u.start << "," << u.end
       << ")";
    return os.str();
}

}  // namespace

std::vector<Violation> check_schedule(const NetworkSchedule& s,
                                      const std::vector<DemandProtocol>& pairs) {
    std::vector<Violation> v;
    std::map<std::string, const RepeaterProtocol*> by_demand;
    for (const auto& dp : pairs) by_demand[dp.demand.id] = &dp.protocol;

    std::map<QubitRef, std::vector<QubitUse>> uses;

    for (const auto& [key, start] : s.entries) {
        auto found = by_demand.find(key.demand_id);
        if (found == by_demand.end()) {
            v.push_back({"unknown-demand", key.demand_id});
            continue;
        }
        const RepeaterProtocol& p = *found->second;
        const Slots latency = protocol_latency(p);

        // constraint 1: relative offsets follow M
        auto win_it = s.op_slots.find(key);
        const auto* windows = win_it == s.op_slots.end() ? nullptr : &win_it->second;
        for (const auto& op : p.ops) {
            const OpWindow expect{start + op.start, start + op.end};
            if (!windows || !windows->count(op.op_id)) {
                v.push_back({"constraint-1", key.demand_id + "#" + std::to_string(key.instance) +
                                                 "/" + op.op_id + " has no derived window"});
            } else if (windows->at(op.op_id) != expect) {
                v.push_back({"constraint-1",
                             key.demand_id + "#" + std::to_string(key.instance) + "/" + op.op_id +
                                 " does not respect the relative offset mapping"});
            }
            if (start + op.end > s.length)
                v.push_back({"schedule-length",
                             key.demand_id + "#" + std::to_string(key.instance) + "/" + op.op_id +
                                 " runs past the cyclic schedule end"});
        }

        // collect exec windows, then hold intervals: a stored link keeps its
        // qubit from the storing op's end until the next op that uses the
        // qubit starts (the delivered link holds to the instance end)
        std::map<QubitRef, std::vector<const ProtocolOp*>> use_lists;
        for (const auto& op : p.ops) {
            for (const auto& q : op.qubits()) {
                uses[q].push_back({start + op.start, start + op.end, Use::exec, key, op.op_id});
                use_lists[q].push_back(&op);
            }
        }
        for (auto& [q, list] : use_lists) {
            std::stable_sort(list.begin(), list.end(), [](const ProtocolOp* a,
                                                          const ProtocolOp* b) {
                return a->start < b->start;
            });
            for (size_t i = 0; i < list.size(); ++i) {
                const ProtocolOp* op = list[i];
                if (std::find(op->produces.begin(), op->produces.end(), q) ==
                    op->produces.end())
                    continue;
                const Slots until = i + 1 < list.size() ? list[i + 1]->start : latency;
                if (op->end < until)
                    uses[q].push_back(
                        {start + op->end, start + until, Use::hold, key, op->op_id});
            }
        }
    }

    for (auto& [qubit, list] : uses) {
        std::sort(list.begin(), list.end(), [](const QubitUse& a, const QubitUse& b) {
            return std::tie(a.start, a.end, a.key, a.op_id) <
                   std::tie(b.start, b.end, b.key, b.op_id);
        });
        for (size_t i = 0; i < list.size(); ++i) {
            for (size_t j = i + 1; j < list.size(); ++j) {
                const auto& a = list[i];
                const auto& b = list[j];
                if (b.start >= a.end) break;
                if (a.key == b.key) continue;  // intra-instance layout is the protocol's own
                const bool both_exec = a.use == Use::exec && b.use == Use::exec;
                v.push_back({both_exec ? "constraint-2" : "constraint-3",
                             describe(qubit, a) + " vs " + describe(qubit, b)});
            }
        }
    }
    return v;
}

double throughput(const NetworkSchedule& s, const Demand& d, double success_probability) {
    int count = 0;
    for (const auto& [key, start] : s.entries)
        if (key.demand_id == d.id) ++count;
    if (s.length <= 0) return 0.0;
    const double cycle_s = static_cast<double>(s.length) * s.t_slot_ms / 1000.0;
    return success_probability * static_cast<double>(count) / cycle_s;
}

std::optional<double> jitter(const NetworkSchedule& s, const Demand& d) {
    std::vector<Slots> starts;
    for (const auto& [key, start] : s.entries)
        if (key.demand_id == d.id) starts.push_back(start);
    if (starts.empty()) return std::nullopt;
    std::sort(starts.begin(), starts.end());

    // deliveries repeat cyclically: gaps include the wrap from the last start
    // of one cycle to the first start of the next
    const double t_slot_s = s.t_slot_ms / 1000.0;
    std::vector<double> gaps;
    for (size_t i = 0; i + 1 < starts.size(); ++i)
        gaps.push_back(static_cast<double>(starts[i + 1] - starts[i]) * t_slot_s);
    gaps.push_back(static_cast<double>(starts.front() + s.length - starts.back()) * t_slot_s);

    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    return var / static_cast<double>(gaps.size());
}

ScheduleReport report(const NetworkSchedule& s, const std::vector<DemandProtocol>& pairs,
                      bool scale_by_success) {
    ScheduleReport rep;
    rep.violations = check_schedule(s, pairs);
    for (const auto& dp : pairs) {
        DemandMetrics m;
        const double scale = scale_by_success ? dp.protocol.success_probability : 1.0;
        m.achieved_rate = throughput(s, dp.demand, scale);
        m.jitter_s2 = jitter(s, dp.demand);
        m.fidelity_ok = dp.protocol.worst_case_fidelity + 1e-12 >= dp.demand.f_min;
        for (const auto& [key, start] : s.entries)
            if (key.demand_id == dp.demand.id) ++m.instances_scheduled;
        for (const auto& key : s.unscheduled)
            if (key.demand_id == dp.demand.id) ++m.instances_dropped;
        const bool rate_ok = m.achieved_rate + 1e-9 >= dp.demand.r_min;
        const bool jitter_ok =
            !dp.demand.j_max_s2 || (m.jitter_s2 && *m.jitter_s2 <= *dp.demand.j_max_s2 + 1e-12);
        m.satisfied = rate_ok && m.fidelity_ok && jitter_ok;
        rep.network_throughput += m.achieved_rate;
        rep.per_demand[dp.demand.id] = m;
    }
    return rep;
}

Result<TaskWitness> brute_force_tasks(const std::vector<pts::PeriodicTask>& tasks, Slots h) {
    using R = Result<TaskWitness>;
    if (tasks.size() > kOracleMaxTasks)
        return R::fail("oracle-too-large", "brute force is limited to 3 tasks");
    if (h > kOracleMaxHyperperiod)
        return R::fail("oracle-too-large", "brute force is limited to 24 slots");
    for (const auto& t : tasks)
        if (t.period <= 0 || h % t.period != 0)
            return R::fail("bad-task-set", t.task_id + ": period must divide the hyperperiod");

    struct Inst {
        size_t task;
        int index;
        Slots release, deadline;
    };
    std::vector<Inst> inst;
    for (size_t i = 0; i < tasks.size(); ++i)
        for (Slots j = 0; j < h / tasks[i].period; ++j)
            inst.push_back({i, static_cast<int>(j), j * tasks[i].period,
                            (j + 1) * tasks[i].period});

    std::vector<Slots> start(inst.size(), -1);
    std::vector<bool> done(inst.size(), false);

    // depth-first over work-conserving dispatch decisions: whenever the
    // machine is free and instances are pending, one of them must run
    std::function<bool(Slots, size_t)> search = [&](Slots now, size_t remaining) -> bool {
        if (remaining == 0) return true;
        std::vector<size_t> pending;
        Slots next_release = std::numeric_limits<Slots>::max();
        for (size_t i = 0; i < inst.size(); ++i) {
            if (done[i]) continue;
            if (inst[i].release <= now) pending.push_back(i);
            else next_release = std::min(next_release, inst[i].release);
        }
        if (pending.empty()) return search(next_release, remaining);
        for (size_t i : pending) {
            const Slots finish = now + tasks[inst[i].task].wcet;
            if (finish > inst[i].deadline) return false;  // a pending instance can no longer meet its deadline
        }
        for (size_t i : pending) {
            done[i] = true;
            start[i] = now;
            if (search(now + tasks[inst[i].task].wcet, remaining - 1)) return true;
            done[i] = false;
            start[i] = -1;
        }
        return false;
    };

    TaskWitness w;
    w.feasible = search(0, inst.size());
    if (w.feasible)
        for (size_t i = 0; i < inst.size(); ++i)
            w.starts[{tasks[inst[i].task].task_id, inst[i].index}] = start[i];
    return w;
}

Result<AonWitness> brute_force_aon(const rcpsp::ActivityNetwork& net) {
    using R = Result<AonWitness>;
    size_t real = 0;
    for (const auto& a : net.activities)
        if (a.duration > 0 && !a.resources.empty()) ++real;
    if (real > kOracleMaxActivities)
        return R::fail("oracle-too-large", "brute force is limited to 12 activities");
    if (net.horizon > kOracleMaxHyperperiod)
        return R::fail("oracle-too-large", "brute force is limited to 24 slots");

    // rigid offsets from each instance start
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
            if (af.instance < 0 || at.instance < 0) continue;
            if (af.demand_id != at.demand_id || af.instance != at.instance) continue;
            if (offset[f] < 0 || offset[t] >= 0) continue;
            offset[t] = offset[f] + af.duration + lag.min_lag;
            changed = true;
        }
    }

    const size_t n = net.instances.size();
    std::vector<Slots> chosen(n, -1);
    std::map<std::string, std::vector<size_t>> by_demand;
    for (size_t i = 0; i < n; ++i) by_demand[net.instances[i].demand_id].push_back(i);

    auto feasible_now = [&](size_t upto) -> bool {
        // unit capacity per qubit across all placed activities
        std::map<QubitRef, std::vector<std::pair<Slots, Slots>>> busy;
        for (size_t i = 0; i <= upto; ++i) {
            const auto& info = net.instances[i];
            for (size_t a = 0; a < net.activities.size(); ++a) {
                const auto& act = net.activities[a];
                if (act.demand_id != info.demand_id || act.instance != info.instance) continue;
                if (act.duration == 0 || act.resources.empty()) continue;
                const Slots s = chosen[i] + offset[a];
                const Slots e = s + act.duration;
                for (const auto& q : act.resources) {
                    for (const auto& [bs, be] : busy[q])
                        if (s < be && bs < e) return false;
                    busy[q].push_back({s, e});
                }
            }
        }
        return true;
    };

    std::function<bool(size_t)> search = [&](size_t i) -> bool {
        if (i == n) return true;
        const auto& info = net.instances[i];
        Slots lo = info.release;
        Slots hi = info.deadline - info.span;
        if (info.jitter_halfwidth) {
            // previous instance of the same demand is placed earlier in order
            for (size_t j = 0; j < i; ++j) {
                const auto& other = net.instances[j];
                if (other.demand_id == info.demand_id &&
                    other.instance == info.instance - 1) {
                    lo = std::max(lo, chosen[j] + info.period - *info.jitter_halfwidth);
                    hi = std::min(hi, chosen[j] + info.period + *info.jitter_halfwidth);
                }
            }
        }
        for (Slots t = lo; t <= hi; ++t) {
            chosen[i] = t;
            if (feasible_now(i) && search(i + 1)) return true;
        }
        chosen[i] = -1;
        return false;
    };

    AonWitness w;
    w.feasible = search(0);
    if (w.feasible)
        for (size_t i = 0; i < n; ++i)
            w.starts[{net.instances[i].demand_id, net.instances[i].instance}] = chosen[i];
    return w;
}

}  // namespace qns::validate
