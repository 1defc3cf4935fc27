#include "qns/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>

namespace qns::fidelity {

namespace {

void require_unit(double f, const char* what) {
    if (std::isnan(f) || f < 0.0 || f > 1.0)
        throw std::domain_error(std::string(what) + " outside [0, 1]");
}

double bisect_pre_swap(double f_target) {
    double lo = 0.25, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (swap_fidelity(mid, mid) < f_target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

DecayModel DecayModel::identity() {
    return DecayModel{[](double f, double) { return f; }};
}

DecayModel DecayModel::exponential(double rate_per_s) {
    return DecayModel{[rate_per_s](double f, double storage_s) {
        return 0.25 + (f - 0.25) * std::exp(-rate_per_s * storage_s);
    }};
}

SuccessModel SuccessModel::deterministic() {
    SuccessModel m;
    m.link_success = [](double, Slots) { return 1.0; };
    m.swap_success = 1.0;
    m.distill_success = [](double, double) { return 1.0; };
    return m;
}

double swap_fidelity(double f1, double f2) {
    require_unit(f1, "swap fidelity input");
    require_unit(f2, "swap fidelity input");
    return f1 * f2 + (1.0 - f1) * (1.0 - f2) / 3.0;
}

double distill_fidelity(double f1, double f2) {
    require_unit(f1, "distill fidelity input");
    require_unit(f2, "distill fidelity input");
    const double a = (1.0 - f1) / 3.0;
    const double b = (1.0 - f2) / 3.0;
    const double num = f1 * f2 + a * b;
    const double den = f1 * f2 + f1 * b + f2 * a + 5.0 * a * b;
    if (den <= 0.0) throw std::logic_error("distillation denominator not positive");
    return num / den;
}

double required_pre_swap_fidelity(double f_target) {
    if (std::isnan(f_target) || f_target <= 0.25 || f_target > 1.0)
        throw std::domain_error("pre-swap target outside (0.25, 1]");
    const double disc = 12.0 * f_target - 3.0;
    if (disc < 1e-12) return bisect_pre_swap(f_target);
    return std::min(1.0, (1.0 + std::sqrt(disc)) / 4.0);
}

std::vector<double> pump_sequence(double f_base, int rounds) {
    if (std::isnan(f_base) || f_base <= 0.25 || f_base > 1.0)
        throw std::domain_error("pump base fidelity outside (0.25, 1]");
    if (rounds < 1) throw std::invalid_argument("pump_sequence needs rounds >= 1");
    std::vector<double> seq;
    seq.reserve(static_cast<size_t>(rounds));
    double f = f_base;
    seq.push_back(f);
    for (int k = 1; k < rounds; ++k) {
        f = distill_fidelity(f, f_base);
        seq.push_back(f);
    }
    return seq;
}

double nested_pump_fidelity(double f_base, int depth) {
    if (std::isnan(f_base) || f_base <= 0.25 || f_base > 1.0)
        throw std::domain_error("nested pump base fidelity outside (0.25, 1]");
    if (depth < 0) throw std::invalid_argument("nested_pump_fidelity needs depth >= 0");
    double f = f_base;
    for (int d = 0; d < depth; ++d) f = distill_fidelity(f, f);
    return f;
}

namespace {

struct NodeEval {
    double fidelity = 1.0;
    Slots available = 0;  // slot from which the link exists (worst case)
};

// per-op fidelity/availability in topological (ops vector) order
std::map<std::string, NodeEval> evaluate(const RepeaterProtocol& p, const DecayModel& decay,
                                         double t_slot_ms) {
    std::map<std::string, std::vector<std::string>> inputs;
    for (const auto& [from, to] : p.edges) inputs[to].push_back(from);

    const double t_slot_s = t_slot_ms / 1000.0;
    std::map<std::string, NodeEval> eval;
    for (const auto& op : p.ops) {
        NodeEval e;
        if (op.kind == OpKind::link) {
            if (!op.link_fidelity) throw std::invalid_argument("link op without fidelity: " + op.op_id);
            e.fidelity = *op.link_fidelity;
            e.available = op.start;
        } else {
            const auto& in = inputs[op.op_id];
            if (in.size() != 2)
                throw std::invalid_argument(op.op_id + ": swap/distill needs exactly two inputs");
            double f[2];
            for (int k = 0; k < 2; ++k) {
                auto it = eval.find(in[k]);
                if (it == eval.end())
                    throw std::invalid_argument("ops not in topological order at " + op.op_id);
                const Slots held = std::max<Slots>(0, op.start - it->second.available);
                f[k] = decay.decay(it->second.fidelity, static_cast<double>(held) * t_slot_s);
            }
            e.fidelity = op.kind == OpKind::swap ? swap_fidelity(f[0], f[1])
                                                 : distill_fidelity(f[0], f[1]);
            e.available = op.end;
        }
        eval[op.op_id] = e;
    }
    return eval;
}

std::string find_sink(const RepeaterProtocol& p) {
    std::map<std::string, int> outdegree;
    for (const auto& op : p.ops) outdegree[op.op_id] = 0;
    for (const auto& [from, to] : p.edges) {
        (void)to;
        outdegree[from]++;
    }
    std::string sink;
    for (const auto& op : p.ops) {
        if (outdegree[op.op_id] == 0) {
            if (!sink.empty())
                throw std::invalid_argument("protocol has more than one sink output");
            sink = op.op_id;
        }
    }
    if (sink.empty()) throw std::invalid_argument("protocol has no sink");
    return sink;
}

}  // namespace

double end_to_end_worst_case(const RepeaterProtocol& p, const DecayModel& decay,
                             double t_slot_ms) {
    if (p.ops.empty()) throw std::invalid_argument("protocol has no operations");
    const std::string sink = find_sink(p);
    auto eval = evaluate(p, decay, t_slot_ms);
    return eval.at(sink).fidelity;
}

std::string trace_fidelity(const RepeaterProtocol& p, const DecayModel& decay,
                           double t_slot_ms) {
    auto eval = evaluate(p, decay, t_slot_ms);
    std::string out;
    for (const auto& op : p.ops) {
        const auto& e = eval.at(op.op_id);
        char line[96];
        std::snprintf(line, sizeof line, "%-8s %-7s F=%.6f from slot %lld\n", op.op_id.c_str(),
                      to_string(op.kind).c_str(), e.fidelity,
                      static_cast<long long>(e.available));
        out += line;
    }
    return out;
}

double success_probability(const RepeaterProtocol& p, const SuccessModel& m) {
    std::map<std::string, std::vector<std::string>> inputs;
    for (const auto& [from, to] : p.edges) inputs[to].push_back(from);
    // input fidelities for the distillation model come from the worst-case
    // traversal with perfect memory
    auto eval = evaluate(p, DecayModel::identity(), 10.0);

    double prob = 1.0;
    for (const auto& op : p.ops) {
        switch (op.kind) {
            case OpKind::link:
                prob *= m.link_success ? m.link_success(op.link_fidelity.value_or(1.0), op.duration())
                                       : 1.0;
                break;
            case OpKind::swap:
                prob *= m.swap_success;
                break;
            case OpKind::distill: {
                const auto& in = inputs[op.op_id];
                double f1 = in.size() > 0 ? eval.at(in[0]).fidelity : 1.0;
                double f2 = in.size() > 1 ? eval.at(in[1]).fidelity : 1.0;
                prob *= m.distill_success ? m.distill_success(f1, f2) : 1.0;
                break;
            }
        }
    }
    return prob;
}

}  // namespace qns::fidelity
