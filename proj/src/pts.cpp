#include "qns/pts.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace qns::pts {

Result<PeriodicTask> to_task(const Demand& d, const RepeaterProtocol& p, double t_slot_ms) {
    using R = Result<PeriodicTask>;
    if (t_slot_ms * d.r_min >= 1000.0)
        return R::fail("rate-unsupportable",
                       d.id + ": t_slot * R_min must be below 1 for a periodic schedule");
    PeriodicTask task;
    task.task_id = d.id;
    task.phase = 0;
    task.wcet = protocol_latency(p);
    task.period = slots_floor(1000.0 / (t_slot_ms * d.r_min));
    if (task.wcet > task.period)
        return R::fail("latency-exceeds-period",
                       d.id + ": protocol latency " + std::to_string(task.wcet) +
                           " slots exceeds period " + std::to_string(task.period));
    if (d.j_max_s2) {
        const Slots w = slots_floor(std::sqrt(*d.j_max_s2) * 1000.0 / t_slot_ms);
        task.lambda = w;
        task.eta = w;
    }
    return task;
}

Result<Slots> hyperperiod(const std::vector<PeriodicTask>& tasks, Slots cap) {
    using R = Result<Slots>;
    if (tasks.empty()) return R::fail("empty-task-set", "hyperperiod of no tasks");
    Slots h = 1;
    for (const auto& t : tasks) {
        h = std::lcm(h, t.period);
        if (h > cap)
            return R::fail("schedule-too-long",
                           "hyperperiod exceeds the cap of " + std::to_string(cap) + " slots");
    }
    return h;
}

std::vector<std::vector<size_t>> decompose_disjoint(const std::vector<DemandProtocol>& pairs) {
    const size_t n = pairs.size();
    std::vector<size_t> parent(n);
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::map<QubitRef, size_t> owner;
    for (size_t i = 0; i < n; ++i) {
        for (const auto& q : pairs[i].protocol.qubit_set()) {
            auto [it, inserted] = owner.emplace(q, i);
            if (!inserted) parent[find(i)] = find(it->second);
        }
    }
    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<size_t>> out;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

struct Instance {
    size_t task = 0;
    int index = 0;
    Slots release = 0;
    Slots deadline = 0;
    bool done = false;
};

TaskSchedule run_np_edf(const std::vector<PeriodicTask>& tasks, Slots h, bool jitter_windows) {
    TaskSchedule sched;
    sched.hyperperiod = h;
    for (const auto& t : tasks) sched.starts[t.task_id] = {};

    std::vector<Instance> instances;
    for (size_t i = 0; i < tasks.size(); ++i) {
        const Slots count = h / tasks[i].period;
        for (Slots j = 0; j < count; ++j)
            instances.push_back({i, static_cast<int>(j), j * tasks[i].period,
                                 (j + 1) * tasks[i].period, false});
    }

    // anchor for jitter windows: last scheduled start of each task plus the
    // periods elapsed since (dropped instances keep the periodic grid)
    std::vector<std::optional<Slots>> last_start(tasks.size());
    std::vector<int> last_index(tasks.size(), 0);

    auto window = [&](const Instance& inst) -> std::pair<Slots, Slots> {
        const PeriodicTask& t = tasks[inst.task];
        Slots lo = inst.release;
        Slots hi = inst.deadline - t.wcet;
        if (jitter_windows && t.lambda && last_start[inst.task]) {
            const Slots anchor = *last_start[inst.task] +
                                 static_cast<Slots>(inst.index - last_index[inst.task]) * t.period;
            lo = std::max(lo, anchor - *t.lambda);
            hi = std::min(hi, anchor + *t.eta);
        }
        return {lo, hi};
    };

    Slots now = 0;
    size_t remaining = instances.size();
    while (remaining > 0) {
        // drop instances whose latest feasible start has passed
        for (auto& inst : instances) {
            if (inst.done) continue;
            if (window(inst).second < now) {
                inst.done = true;
                --remaining;
                sched.unscheduled.insert({tasks[inst.task].task_id, inst.index});
            }
        }
        if (remaining == 0) break;

        // earliest-deadline released instance whose window is open; ties by
        // smaller execution time, then demand id, then instance index
        const auto key = [&](const Instance& x) {
            return std::make_tuple(x.deadline, tasks[x.task].wcet, tasks[x.task].task_id,
                                   x.index);
        };
        Instance* best = nullptr;
        for (auto& inst : instances) {
            if (inst.done) continue;
            const auto [lo, hi] = window(inst);
            if (lo > now || hi < now) continue;
            if (!best || key(inst) < key(*best)) best = &inst;
        }

        if (!best) {
            // idle until the next window opens
            Slots next = std::numeric_limits<Slots>::max();
            for (const auto& inst : instances) {
                if (inst.done) continue;
                const auto [lo, hi] = window(inst);
                if (hi < now) continue;
                next = std::min(next, std::max(lo, now + 1));
            }
            if (next == std::numeric_limits<Slots>::max()) break;
            now = next;
            continue;
        }

        sched.starts[tasks[best->task].task_id].push_back(now);
        last_start[best->task] = now;
        last_index[best->task] = best->index;
        best->done = true;
        --remaining;
        now += tasks[best->task].wcet;
    }
    return sched;
}

}  // namespace

TaskSchedule np_edf(const std::vector<PeriodicTask>& tasks, Slots h) {
    return run_np_edf(tasks, h, false);
}

TaskSchedule np_edf_jitter(const std::vector<PeriodicTask>& tasks, Slots h) {
    return run_np_edf(tasks, h, true);
}

Result<NetworkSchedule> schedule_pts(const std::vector<DemandProtocol>& pairs,
                                     const PtsOptions& opts) {
    NetworkSchedule out;
    out.t_slot_ms = opts.t_slot_ms;
    if (pairs.empty()) {
        out.length = 1;
        return out;
    }

    std::vector<PeriodicTask> tasks;
    tasks.reserve(pairs.size());
    for (const auto& dp : pairs) {
        auto task = to_task(dp.demand, dp.protocol, opts.t_slot_ms);
        if (!task.ok()) return Error{task.error()};
        tasks.push_back(task.take());
    }
    auto h = hyperperiod(tasks, opts.hyperperiod_cap);
    if (!h.ok()) return Error{h.error()};
    out.length = h.value();

    for (const auto& component : decompose_disjoint(pairs)) {
        std::vector<PeriodicTask> subset;
        for (size_t idx : component) subset.push_back(tasks[idx]);
        const TaskSchedule sub = opts.jitter_constrained ? np_edf_jitter(subset, out.length)
                                                         : np_edf(subset, out.length);
        for (size_t idx : component) {
            const auto& id = tasks[idx].task_id;
            const Slots period = tasks[idx].period;
            // recover instance indices: scheduled starts fill the released
            // slots not present in the unscheduled set
            std::set<int> dropped;
            for (const auto& [task_id, j] : sub.unscheduled)
                if (task_id == id) dropped.insert(j);
            const Slots count = out.length / period;
            size_t next_start = 0;
            for (int j = 0; j < count; ++j) {
                if (dropped.count(j)) {
                    out.unscheduled.push_back({id, j});
                } else {
                    out.entries[{id, j}] = sub.starts.at(id)[next_start++];
                }
            }
        }
    }
    derive_op_slots(out, pairs);
    return out;
}

}  // namespace qns::pts
