#include "qns/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qns/pts.hpp"
#include "qns/rcpsp.hpp"
#include "qns/validate.hpp"

namespace qns::bench {

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : state_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

std::uint64_t Rng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return static_cast<std::size_t>(x % n);
}

std::string to_string(SchedulerKind k) {
    switch (k) {
        case SchedulerKind::pts_np_edf: return "pts-np-edf";
        case SchedulerKind::rcpsp_np_edf: return "rcpsp-np-edf";
        case SchedulerKind::rcpsp_np_fpr: return "rcpsp-np-fpr";
    }
    return "?";
}

std::optional<SchedulerKind> scheduler_from_string(const std::string& name) {
    if (name == "pts-np-edf") return SchedulerKind::pts_np_edf;
    if (name == "rcpsp-np-edf") return SchedulerKind::rcpsp_np_edf;
    if (name == "rcpsp-np-fpr") return SchedulerKind::rcpsp_np_fpr;
    return std::nullopt;
}

std::vector<Demand> generate_demands(const Topology& t, const std::vector<double>& rate_menu,
                                     double load_target, double fidelity, Rng& rng) {
    const auto ends = t.end_nodes();
    if (ends.size() < 2) throw std::invalid_argument("topology needs at least two end nodes");
    if (rate_menu.empty()) throw std::invalid_argument("empty rate menu");

    std::vector<Demand> out;
    double offered = 0.0;
    int seq = 0;
    while (offered < load_target) {
        const std::size_t a = rng.below(ends.size());
        std::size_t b = rng.below(ends.size() - 1);
        if (b >= a) ++b;
        Demand d;
        d.id = "d" + std::to_string(++seq);
        d.src = ends[a];
        d.dst = ends[b];
        d.f_min = fidelity;
        d.r_min = rate_menu[rng.below(rate_menu.size())];
        out.push_back(d);
        offered += d.r_min;
    }
    return out;
}

namespace {

Result<NetworkSchedule> run_scheduler(SchedulerKind kind,
                                      const std::vector<DemandProtocol>& pairs,
                                      const ExperimentConfig& cfg) {
    switch (kind) {
        case SchedulerKind::pts_np_edf: {
            pts::PtsOptions o;
            o.t_slot_ms = cfg.t_slot_ms;
            o.jitter_constrained = cfg.jitter_constrained;
            o.hyperperiod_cap = cfg.hyperperiod_cap;
            return pts::schedule_pts(pairs, o);
        }
        case SchedulerKind::rcpsp_np_edf:
        case SchedulerKind::rcpsp_np_fpr: {
            rcpsp::RcpspOptions o;
            o.t_slot_ms = cfg.t_slot_ms;
            o.style = kind == SchedulerKind::rcpsp_np_fpr ? rcpsp::FragmentStyle::condensed
                                                          : rcpsp::FragmentStyle::full;
            o.jitter_constrained = cfg.jitter_constrained;
            o.hyperperiod_cap = cfg.hyperperiod_cap;
            return rcpsp::schedule_rcpsp(pairs, o);
        }
    }
    return Result<NetworkSchedule>::fail("unknown-scheduler", "unreachable");
}

struct Cell {
    std::size_t fidelity_index;
    std::size_t load_index;
    int repetition;
    std::uint64_t stream;
};

void run_cell(const ExperimentConfig& cfg, const Topology& topo, const Cell& cell,
              std::vector<ResultRow>& rows, RepetitionSummary& summary) {
    const double fidelity = cfg.fidelity_levels[cell.fidelity_index];
    const double load = cfg.load_targets[cell.load_index];
    Rng rng(cfg.seed, cell.stream);
    auto demands = generate_demands(topo, cfg.rate_menu, load, fidelity, rng);

    select::SelectConfig sel = cfg.select;
    sel.t_slot_ms = cfg.t_slot_ms;

    std::vector<DemandProtocol> pairs;
    int excluded = 0;
    for (const auto& d : demands) {
        auto r = select::route(topo, d);
        if (!r.ok()) {
            ++excluded;
            continue;
        }
        auto p = select::esss(r.value(), d.f_min, topo, sel);
        if (!p.ok()) {
            ++excluded;
            continue;
        }
        auto task = pts::to_task(d, p.value(), cfg.t_slot_ms);
        if (!task.ok()) {
            ++excluded;
            continue;
        }
        pairs.push_back({d, p.take()});
    }

    auto scheduled = run_scheduler(cfg.scheduler, pairs, cfg);
    if (!scheduled.ok())
        throw std::logic_error("scheduler failed on a feasible pair set: " +
                               scheduled.error().code + ": " + scheduled.error().message);
    const NetworkSchedule& schedule = scheduled.value();
    auto rep = validate::report(schedule, pairs);
    if (!rep.violations.empty())
        throw std::logic_error("emitted schedule violates " + rep.violations.front().code + ": " +
                               rep.violations.front().detail);

    summary.fidelity = fidelity;
    summary.load = load;
    summary.repetition = cell.repetition;
    summary.network_throughput = rep.network_throughput;
    summary.demands_offered = static_cast<int>(demands.size());
    summary.demands_excluded = excluded;

    for (const auto& dp : pairs) {
        const auto& m = rep.per_demand.at(dp.demand.id);
        ResultRow row;
        row.scheduler = to_string(cfg.scheduler);
        row.fidelity = fidelity;
        row.load = load;
        row.repetition = cell.repetition;
        row.demand_id = dp.demand.id;
        row.r_min = dp.demand.r_min;
        row.achieved_rate = m.achieved_rate;
        row.jitter_s2 = m.jitter_s2;
        row.satisfied = m.satisfied;
        row.network_throughput = rep.network_throughput;
        rows.push_back(row);
        if (m.satisfied) ++summary.demands_satisfied;
        if (m.jitter_s2) {
            summary.mean_jitter_s2 += *m.jitter_s2;
            ++summary.jitter_samples;
        }
    }
    if (summary.jitter_samples > 0)
        summary.mean_jitter_s2 /= static_cast<double>(summary.jitter_samples);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Topology& topo) {
    std::vector<Cell> cells;
    std::uint64_t stream = 0;
    for (std::size_t fi = 0; fi < cfg.fidelity_levels.size(); ++fi)
        for (std::size_t li = 0; li < cfg.load_targets.size(); ++li)
            for (int rep = 0; rep < cfg.repetitions; ++rep)
                cells.push_back({fi, li, rep, stream++});

    std::vector<std::vector<ResultRow>> cell_rows(cells.size());
    std::vector<RepetitionSummary> summaries(cells.size());

    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            run_cell(cfg, topo, cells[i], cell_rows[i], summaries[i]);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::future<void>> futures;
        for (int w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&]() {
                for (std::size_t i = cursor.fetch_add(1); i < cells.size();
                     i = cursor.fetch_add(1))
                    run_cell(cfg, topo, cells[i], cell_rows[i], summaries[i]);
            }));
        }
        for (auto& f : futures) f.get();
    }

    ExperimentResult result;
    result.repetitions = std::move(summaries);
    for (auto& rows : cell_rows)
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    return result;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << "scheduler,fidelity,load,repetition,demand_id,r_min,achieved_rate,jitter,satisfied,"
          "network_throughput\n";
    for (const auto& r : rows) {
        os << r.scheduler << ',' << format_double(r.fidelity) << ',' << format_double(r.load)
           << ',' << r.repetition << ',' << r.demand_id << ',' << format_double(r.r_min) << ','
           << format_double(r.achieved_rate) << ','
           << (r.jitter_s2 ? format_double(*r.jitter_s2) : std::string()) << ','
           << (r.satisfied ? "true" : "false") << ',' << format_double(r.network_throughput)
           << '\n';
    }
    return os.str();
}

std::string summary_to_csv(const ExperimentConfig& cfg,
                           const std::vector<RepetitionSummary>& summaries) {
    // aggregate over repetitions per (fidelity, load)
    struct Agg {
        std::vector<double> throughputs;
        std::vector<double> jitters;
        int offered = 0;
        int excluded = 0;
        int satisfied = 0;
    };
    std::map<std::pair<double, double>, Agg> groups;
    for (const auto& s : summaries) {
        auto& g = groups[{s.fidelity, s.load}];
        g.throughputs.push_back(s.network_throughput);
        if (s.jitter_samples > 0) g.jitters.push_back(s.mean_jitter_s2);
        g.offered += s.demands_offered;
        g.excluded += s.demands_excluded;
        g.satisfied += s.demands_satisfied;
    }

    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double m = 0.0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double acc = 0.0;
        for (double x : v) acc += (x - m) * (x - m);
        return std::sqrt(acc / static_cast<double>(v.size() - 1));
    };
    auto quantile = [](std::vector<double> v, double q) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        const double idx = q * static_cast<double>(v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double frac = idx - static_cast<double>(lo);
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };

    std::ostringstream os;
    os << "scheduler,fidelity,load,repetitions,mean_throughput,std_throughput,q10_throughput,"
          "q50_throughput,q90_throughput,mean_jitter,std_jitter,demands_offered,"
          "demands_excluded,demands_satisfied\n";
    for (const auto& [key, g] : groups) {
        os << to_string(cfg.scheduler) << ',' << format_double(key.first) << ','
           << format_double(key.second) << ',' << g.throughputs.size() << ','
           << format_double(mean(g.throughputs)) << ',' << format_double(stddev(g.throughputs))
           << ',' << format_double(quantile(g.throughputs, 0.1)) << ','
           << format_double(quantile(g.throughputs, 0.5)) << ','
           << format_double(quantile(g.throughputs, 0.9)) << ','
           << format_double(mean(g.jitters)) << ',' << format_double(stddev(g.jitters)) << ','
           << g.offered << ',' << g.excluded << ',' << g.satisfied << '\n';
    }
    return os.str();
}

}  // namespace qns::bench
