#include "orchestrator.hpp"

#include <cmath>
#include <vector>

#include "channel.hpp"
#include "doctest.h"
#include "energy.hpp"
#include "errors.hpp"
#include "scheduling.hpp"
#include "test_support.hpp"
#include "trajectory.hpp"

using namespace irsuav;
using irsuav::testing::reference_scenario;
using irsuav::testing::small_scenario;

TEST_CASE("the alternating refinement converges on the reference scenario") {
    Scenario sc = reference_scenario();
    RunResult rr = alternating_optimize(sc);

    CHECK(rr.report.converged);
    REQUIRE(rr.report.iterations.size() >= 2);
    CHECK(static_cast<int>(rr.report.iterations.size()) <=
          sc.max_outer_iters);
    for (size_t i = 1; i < rr.report.iterations.size(); ++i)
        CHECK(rr.report.iterations[i].kappa <=
              rr.report.iterations[i - 1].kappa + 1e-7);

    // every round keeps the demands covered with margin to spare
    for (const auto& it : rr.report.iterations) {
        CHECK(it.chi >= 1.0 - 1e-6);
        CHECK(it.pi >= 1.0 - 1e-3);
        CHECK(it.trajectory_iters >= 1);
        CHECK(it.reflection_iters >= 1);
    }

    CHECK(rr.report.kappa_relaxed <= rr.report.iterations.front().kappa);
    CHECK(rr.state.kappa == rr.report.kappa_rounded);
    CHECK(rr.state.schedule.rounded());
    CHECK(spend_bound(sc, rr.state.schedule) ==
          doctest::Approx(rr.report.kappa_rounded).epsilon(1e-12));

    // the audit sees a feasible point: only the block rounding may leave a
    // visible (and reported) shortfall on the demand rows
    const ConstraintAudit& audit = rr.report.final_audit;
    double rounding_slack = rr.report.rounding.worst() + 1e-6;
    CHECK(audit.harvest <= rounding_slack);
    CHECK(audit.rate <= rounding_slack);
    CHECK(audit.spend <= 1e-9);
    CHECK(audit.sharing <= 1e-9);
    CHECK(audit.share_box <= 1e-9);
    CHECK(audit.phase_range <= 1e-9);
    CHECK(audit.amplitude_box <= 1e-9);
    CHECK(audit.endpoints <= 1e-6);
    CHECK(audit.position_update <= 1e-6);
    CHECK(audit.accel <= 1e-6);
    CHECK(audit.speed <= 1e-6);
    for (double z : audit.no_fly) CHECK(z <= 1e-6);

    SUBCASE("a second run reproduces every number") {
        RunResult again = alternating_optimize(sc);
        REQUIRE(again.report.iterations.size() ==
                rr.report.iterations.size());
        for (size_t i = 0; i < rr.report.iterations.size(); ++i) {
            CHECK(again.report.iterations[i].kappa ==
                  rr.report.iterations[i].kappa);
            CHECK(again.report.iterations[i].chi ==
                  rr.report.iterations[i].chi);
            CHECK(again.report.iterations[i].pi ==
                  rr.report.iterations[i].pi);
        }
        CHECK(again.report.kappa_rounded == rr.report.kappa_rounded);
        for (size_t n = 0; n < rr.state.kin.pos.size(); ++n)
            CHECK((again.state.kin.pos[n] - rr.state.kin.pos[n]).norm() ==
                  0.0);
        for (int n = 0; n < sc.num_slots; ++n)
            CHECK(again.state.rho_bar[n] == rr.state.rho_bar[n]);
    }
}

TEST_CASE("an idle scenario settles at zero spend") {
    Scenario sc = small_scenario();
    sc.min_rate = {0.0};
    sc.harvest_target = {0.0};

    RunResult rr = alternating_optimize(sc);
    CHECK(rr.report.converged);
    CHECK(rr.report.iterations.size() == 2);
    for (const auto& it : rr.report.iterations) CHECK(it.kappa == 0.0);
    CHECK(rr.state.kappa == 0.0);
    CHECK(rr.report.kappa_relaxed == 0.0);
    for (int n = 0; n < sc.num_slots; ++n)
        CHECK(rr.state.schedule.effective(n, 0) == 0.0);
    CHECK(rr.report.final_audit.worst() <= 1e-6);
}

TEST_CASE("one extra round changes nothing at convergence") {
    Scenario sc = reference_scenario();
    RunResult rr = alternating_optimize(sc);
    REQUIRE(rr.report.converged);

    LargeScaleState ls = compute_large_scale(rr.state.kin, sc);
    ScheduleTerms terms = schedule_terms(sc, ls, rr.state.rho_bar);
    SchedulingResult again = solve_scheduling(sc, terms);
    CHECK(again.kappa ==
          doctest::Approx(rr.report.kappa_relaxed).epsilon(1e-12));

    TrajectoryRun traj =
        sca_trajectory(rr.state.kin, again.schedule, rr.state.rho_bar, sc);
    LargeScaleState moved = compute_large_scale(traj.iterate.kin, sc);
    ReflectionRun refl =
        sca_reflection(rr.state.rho_bar, again.schedule, moved, sc);
    ScheduleTerms terms2 =
        schedule_terms(sc, moved, refl.iterate.rho_bar);
    double kappa_extra = solve_scheduling(sc, terms2).kappa;

    CHECK(std::abs(kappa_extra - rr.report.kappa_relaxed) <=
          2.0 * sc.eps_outer * rr.report.kappa_relaxed + 1e-12);
}

TEST_CASE("stage failures carry the round and stage") {
    Scenario sc = reference_scenario();
    sc.min_rate = {1e6, 1e6, 1e6};
    CHECK_THROWS_WITH_AS(alternating_optimize(sc),
                         doctest::Contains("outer iteration 0, scheduling"),
                         Error);
}

TEST_CASE("the audit flags missing service and understated spend") {
    Scenario sc = reference_scenario();
    Kinematics kin = straight_line_kinematics(sc);

    DecisionState idle;
    idle.schedule.num_slots = sc.num_slots;
    idle.schedule.num_users = sc.num_users();
    idle.schedule.s.assign(
        static_cast<size_t>(sc.num_slots) * sc.num_users(), 0.0);
    idle.kin = kin;
    idle.rho_bar.assign(sc.num_slots, 0.5);
    idle.kappa = 0.0;

    ConstraintAudit a = evaluate_state(idle, sc);
    // nobody transmits: the full demand is missing, everything else is clean
    CHECK(a.rate == doctest::Approx(1.0));
    CHECK(a.harvest == doctest::Approx(1.0));
    CHECK(a.spend == 0.0);
    CHECK(a.sharing == 0.0);
    CHECK(a.endpoints <= 1e-9);
    CHECK(a.accel == 0.0);

    SUBCASE("halving kappa doubles the spend ratio") {
        RunResult rr = alternating_optimize(sc);
        DecisionState cheat = rr.state;
        cheat.kappa *= 0.5;
        ConstraintAudit b = evaluate_state(cheat, sc);
        CHECK(b.spend == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("a single scheduled slot spends exactly its slot energy") {
    Scenario sc = small_scenario();
    sc.num_slots = 1;
    Schedule sch;
    sch.num_slots = 1;
    sch.num_users = 1;
    sch.s = {1.0};
    CHECK(spend_bound(sc, sch) ==
          doctest::Approx(slot_energy(sc, 0)).epsilon(1e-12));

    DecisionState st;
    st.schedule = sch;
    st.kin.pos = {Vec3(100, 45, 10), Vec3(100, 45, 10)};
    st.kin.vel = {Vec3::Zero()};
    st.rho_bar = {0.5};
    st.kappa = slot_energy(sc, 0);
    ConstraintAudit a = evaluate_state(st, sc);
    CHECK(a.spend == 0.0);
}

TEST_CASE("a broken scenario is rejected up front") {
    Scenario sc = reference_scenario();
    sc.num_slots = 0;
    CHECK_THROWS_AS(alternating_optimize(sc), Error);
}
