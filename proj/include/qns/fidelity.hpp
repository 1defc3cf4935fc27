#pragma once

#include <functional>
#include <vector>

#include "qns/model.hpp"

namespace qns::fidelity {

// Memory decay while a link is stored between operations. The default is the
// identity model (perfect memory); an exponential model is provided for use
// with hardware that has finite coherence times.
struct DecayModel {
    std::function<double(double fidelity, double storage_s)> decay;

    static DecayModel identity();
    // F(t) relaxes towards the separable 0.25 floor at the given rate
    static DecayModel exponential(double rate_per_s);
};

// Per-operation success probabilities; the defaults make every operation
// deterministic (unit probability links/distillation, deterministic swaps).
struct SuccessModel {
    std::function<double(double link_fidelity, Slots allocated_slots)> link_success;
    double swap_success = 1.0;
    std::function<double(double f1, double f2)> distill_success;

    static SuccessModel deterministic();
};

// Werner fidelity after entanglement swapping: F1*F2 + (1-F1)(1-F2)/3.
double swap_fidelity(double f1, double f2);

// Werner fidelity after two-to-one entanglement distillation.
double distill_fidelity(double f1, double f2);

// Unique F' in (0.25, 1] with swap_fidelity(F', F') == f_target, i.e. the
// positive root of 4F'^2 - 2F' + (1 - 3 f_target) = 0.
double required_pre_swap_fidelity(double f_target);

// [F_1, ..., F_rounds] with F_1 = f_base, F_{k+1} = distill(F_k, f_base):
// repeated pumping of a held link with fresh base links.
std::vector<double> pump_sequence(double f_base, int rounds);

// G_0 = f_base, G_{d+1} = distill(G_d, G_d); returns G_depth.
double nested_pump_fidelity(double f_base, int depth);

// Worst-case end-to-end fidelity of a protocol DAG: links exist from the
// start of their operation, decay accrues until the consuming op starts,
// swap/distill nodes combine their two inputs. Throws std::invalid_argument
// on protocols without a unique sink.
double end_to_end_worst_case(const RepeaterProtocol& p, const DecayModel& decay,
                             double t_slot_ms = 10.0);

// Product over ops of the per-op success probability.
double success_probability(const RepeaterProtocol& p, const SuccessModel& m);

// Debug dump: one line per op with its worst-case output fidelity and the
// slot from which that output exists.
std::string trace_fidelity(const RepeaterProtocol& p, const DecayModel& decay,
                           double t_slot_ms = 10.0);

}  // namespace qns::fidelity
