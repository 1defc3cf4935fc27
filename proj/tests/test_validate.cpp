#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qns/pts.hpp"
#include "qns/rcpsp.hpp"
#include "qns/validate.hpp"
#include "support/fixtures.hpp"

using namespace qns;
using namespace qns::validate;

namespace {

std::vector<DemandProtocol> two_pair_fixture(double r1 = 20.0, double r2 = 20.0) {
    return {{Demand{"d1", "A", "C", 0.55, r1, std::nullopt}, fixtures::worked_example_protocol()},
            {Demand{"d2", "C", "D", 0.55, r2, std::nullopt},
             fixtures::neighbour_link_protocol()}};
}

NetworkSchedule make_schedule(const std::vector<DemandProtocol>& pairs, Slots length,
                              std::map<InstanceKey, Slots> entries) {
    NetworkSchedule s;
    s.t_slot_ms = 10.0;
    s.length = length;
    s.entries = std::move(entries);
    derive_op_slots(s, pairs);
    return s;
}

bool has_violation(const std::vector<Violation>& v, const std::string& code) {
    for (const auto& item : v)
        if (item.code == code) return true;
    return false;
}

}  // namespace

TEST_CASE("the valid placement passes all three constraints") {
    const auto pairs = two_pair_fixture();
    // chain protocol at slot 0, neighbour link concurrently at slot 0
    const auto s = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 0}});
    CHECK(check_schedule(s, pairs).empty());
}

TEST_CASE("overlapping qubit use between instances is constraint 2") {
    const auto pairs = two_pair_fixture();
    // the neighbour link at slot 2 collides with L2's use of C-comm
    const auto s = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 2}});
    const auto v = check_schedule(s, pairs);
    CHECK(has_violation(v, "constraint-2"));
}

TEST_CASE("touching a stored link is constraint 3") {
    // a foreign single-op protocol grabbing B-storage at slot 3 while it
    // holds the first link for the swap
    auto foreign = fixtures::neighbour_link_protocol();
    foreign.ops[0].nodes = {"B", "D"};
    foreign.ops[0].consumes = {fixtures::storage("B"), fixtures::comm("D")};
    foreign.ops[0].produces = foreign.ops[0].consumes;
    std::vector<DemandProtocol> pairs = {
        {Demand{"d1", "A", "C", 0.55, 16.0, std::nullopt}, fixtures::worked_example_protocol()},
        {Demand{"d2", "B", "D", 0.55, 16.0, std::nullopt}, foreign}};
    const auto s = make_schedule(pairs, 6, {{{"d1", 0}, 0}, {{"d2", 0}, 3}});
    const auto v = check_schedule(s, pairs);
    CHECK(has_violation(v, "constraint-3"));
    CHECK(!has_violation(v, "constraint-2"));
}

TEST_CASE("derived windows must match the offset map") {
    const auto pairs = two_pair_fixture();
    auto s = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 0}});
    s.op_slots[{"d1", 0}]["L2"].start += 1;
    CHECK(has_violation(check_schedule(s, pairs), "constraint-1"));
}

TEST_CASE("instances may not run past the cyclic end") {
    const auto pairs = two_pair_fixture();
    const auto s = make_schedule(pairs, 5, {{{"d1", 0}, 1}, {{"d2", 0}, 0}});
    CHECK(has_violation(check_schedule(s, pairs), "schedule-length"));
}

TEST_CASE("throughput counts instances per cyclic repetition") {
    const auto pairs = two_pair_fixture();
    const auto s = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 0}});
    CHECK(throughput(s, pairs[0].demand) == doctest::Approx(20.0));
    // serialized six-slot variant delivers 16.67
    const auto slow = make_schedule(two_pair_fixture(16, 16), 6,
                                    {{{"d1", 0}, 0}, {{"d2", 0}, 5}});
    CHECK(throughput(slow, pairs[0].demand) == doctest::Approx(100.0 / 6.0));
    // no instances, no throughput
    const auto empty = make_schedule(pairs, 5, {{{"d2", 0}, 0}});
    CHECK(throughput(empty, pairs[0].demand) == doctest::Approx(0.0));
    // success probability scales the delivered rate
    CHECK(throughput(s, pairs[0].demand, 0.5) == doctest::Approx(10.0));
}

TEST_CASE("jitter is the population variance of cyclic gaps") {
    const auto pairs = two_pair_fixture(4.0, 4.0);
    // periodic: starts 0 and 10 in a 20-slot cycle -> gaps 100ms, 100ms
    const auto periodic = make_schedule(pairs, 20, {{{"d2", 0}, 0}, {{"d2", 1}, 10}});
    CHECK(*jitter(periodic, pairs[1].demand) == doctest::Approx(0.0));

    // alternating 40ms / 60ms gaps -> variance 1e-4 s^2
    const auto skewed = make_schedule(pairs, 10, {{{"d2", 0}, 0}, {{"d2", 1}, 4}});
    CHECK(*jitter(skewed, pairs[1].demand) == doctest::Approx(1e-4).epsilon(1e-9));

    // a lone delivery has a single gap: zero variance
    const auto lone = make_schedule(pairs, 20, {{{"d2", 0}, 3}});
    CHECK(*jitter(lone, pairs[1].demand) == doctest::Approx(0.0));

    CHECK(!jitter(lone, pairs[0].demand));
}

TEST_CASE("reports combine rate, jitter and fidelity per demand") {
    auto pairs = two_pair_fixture();
    pairs[0].demand.f_min = 0.9;  // the 0.7792 protocol misses this target
    const auto s = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 0}});
    const auto rep = report(s, pairs);
    CHECK(rep.violations.empty());
    CHECK(!rep.per_demand.at("d1").fidelity_ok);
    CHECK(!rep.per_demand.at("d1").satisfied);
    CHECK(rep.per_demand.at("d2").satisfied);
    CHECK(rep.network_throughput == doctest::Approx(40.0));
    CHECK(rep.per_demand.at("d1").instances_scheduled == 1);
    CHECK(rep.per_demand.at("d1").instances_dropped == 0);
}

TEST_CASE("the task brute force matches hand-checked feasibility") {
    using pts::PeriodicTask;
    auto task = [](const std::string& id, Slots c, Slots t) {
        PeriodicTask out;
        out.task_id = id;
        out.wcet = c;
        out.period = t;
        return out;
    };

    auto fig8 = brute_force_tasks({task("P1", 5, 6), task("P2", 1, 6)}, 6);
    REQUIRE(fig8.ok());
    CHECK(fig8.value().feasible);
    // the witness is one of the two valid schedules
    const auto& starts = fig8.value().starts;
    const Slots p1 = starts.at({"P1", 0});
    const Slots p2 = starts.at({"P2", 0});
    const bool first = p1 == 0 && p2 == 5;
    const bool second = p2 == 0 && p1 == 1;
    CHECK((first || second));

    auto overfull = brute_force_tasks({task("A", 4, 6), task("B", 4, 6)}, 6);
    REQUIRE(overfull.ok());
    CHECK(!overfull.value().feasible);

    auto empty = brute_force_tasks({}, 6);
    REQUIRE(empty.ok());
    CHECK(empty.value().feasible);
    CHECK(empty.value().starts.empty());

    auto too_big = brute_force_tasks(
        {task("a", 1, 4), task("b", 1, 4), task("c", 1, 4), task("d", 1, 4)}, 4);
    REQUIRE(!too_big.ok());
    CHECK(too_big.error().code == "oracle-too-large");
}

TEST_CASE("perturbing a tight schedule is caught by some constraint") {
    const auto pairs = two_pair_fixture();
    const auto valid = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 0}});
    REQUIRE(check_schedule(valid, pairs).empty());

    // +1 pushes the chain protocol past the cycle end
    const auto late = make_schedule(pairs, 5, {{{"d1", 0}, 1}, {{"d2", 0}, 0}});
    CHECK(!check_schedule(late, pairs).empty());

    // moving the neighbour link into L2's window trips the qubit exclusivity
    const auto clash = make_schedule(pairs, 5, {{{"d1", 0}, 0}, {{"d2", 0}, 3}});
    CHECK(!check_schedule(clash, pairs).empty());
}

TEST_CASE("validator accepts every schedule the heuristics emit") {
    // randomized agreement across both schedulers on the two-pair fixture
    // family with varying rates
    const std::vector<double> rates = {16.0, 20.0, 12.5, 8.0};
    for (double r1 : rates) {
        for (double r2 : rates) {
            auto pairs = two_pair_fixture(r1, r2);
            auto serialized = pts::schedule_pts(pairs, pts::PtsOptions{});
            REQUIRE(serialized.ok());
            CHECK(check_schedule(serialized.value(), pairs).empty());

            for (const bool condensed : {false, true}) {
                rcpsp::RcpspOptions opts;
                opts.style = condensed ? rcpsp::FragmentStyle::condensed
                                       : rcpsp::FragmentStyle::full;
                auto packed = rcpsp::schedule_rcpsp(pairs, opts);
                REQUIRE(packed.ok());
                CHECK(check_schedule(packed.value(), pairs).empty());
            }
        }
    }
}
