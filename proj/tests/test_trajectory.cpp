#include "trajectory.hpp"

#include <cmath>
#include <variant>
#include <vector>

#include "channel.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "scheduling.hpp"
#include "test_support.hpp"

using namespace irsuav;
using irsuav::testing::reference_scenario;
using irsuav::testing::small_scenario;

namespace {

// Largest violation over bounds, rows, and cone blocks at a candidate point.
double max_violation(const conic::Program& p, const std::vector<double>& x) {
    double v = 0.0;
    const auto& b = p.bounds();
    for (size_t i = 0; i < b.size(); ++i) {
        v = std::max(v, b[i].lb - x[i]);
        v = std::max(v, x[i] - b[i].ub);
    }
    for (const auto& row : p.eq_rows())
        v = std::max(v, std::abs(row.e.eval(x) - row.rhs));
    for (const auto& row : p.le_rows())
        v = std::max(v, row.e.eval(x) - row.rhs);
    for (const auto& cone : p.cones()) {
        if (const auto* s = std::get_if<conic::SocBlock>(&cone)) {
            double nrm = 0.0;
            for (size_t i = 1; i < s->rows.size(); ++i) {
                double t = s->rows[i].eval(x);
                nrm += t * t;
            }
            v = std::max(v, std::sqrt(nrm) - s->rows[0].eval(x));
        } else {
            const auto& r = std::get<conic::RsocBlock>(cone);
            double a = r.a.eval(x), bb = r.b.eval(x), ss = 0.0;
            for (const auto& e : r.xs) {
                double t = e.eval(x);
                ss += t * t;
            }
            v = std::max(v, ss - 2.0 * a * bb);
            v = std::max(v, -a);
            v = std::max(v, -bb);
        }
    }
    return v;
}

// Assignment that reproduces the expansion trajectory inside the subproblem:
// every link variable at its unit scale and the true margin in chi.
std::vector<double> expansion_point(const TrajectoryLayout& lay,
                                    const Scenario& sc, const Kinematics& kin,
                                    const Schedule& sch,
                                    const std::vector<double>& rho,
                                    int num_vars) {
    std::vector<double> x(static_cast<size_t>(num_vars), 0.0);
    for (int n = 1; n <= lay.num_slots; ++n)
        for (int d = 0; d < 3; ++d) x[lay.q_var(n, d)] = kin.pos[n][d];
    for (int n = 0; n < lay.num_slots; ++n)
        for (int d = 0; d < 3; ++d) x[lay.v_var(n, d)] = kin.vel[n][d];
    for (int n = 0; n < lay.num_slots; ++n) {
        if (lay.u_var[n] >= 0) x[lay.u_var[n]] = 1.0;
        for (int k = 0; k < lay.num_users; ++k) {
            size_t i = static_cast<size_t>(n) * lay.num_users + k;
            if (lay.r_var[i] < 0) continue;
            x[lay.r_var[i]] = 1.0;
            x[lay.t_var[i]] = 1.0;
        }
    }
    double margin = rate_margin(sc, sch, rho, kin);
    x[lay.chi_var] = std::isfinite(margin) ? margin : 0.0;
    return x;
}

Schedule relaxed_schedule(const Scenario& sc, const Kinematics& kin,
                          const std::vector<double>& rho) {
    LargeScaleState ls = compute_large_scale(kin, sc);
    return solve_scheduling(sc, schedule_terms(sc, ls, rho)).schedule;
}

}  // namespace

TEST_CASE("expansion trajectory satisfies every subproblem row") {
    Scenario sc = reference_scenario();
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, kin, rho);

    TrajectoryLayout lay;
    conic::Program p = build_trajectory_subproblem(kin, sch, rho, sc, &lay);
    std::vector<double> x =
        expansion_point(lay, sc, kin, sch, rho, p.num_vars());
    CHECK(max_violation(p, x) <= 1e-9);

    // the unit scales are the true pathlosses along the expansion trajectory
    LargeScaleState ls = compute_large_scale(kin, sc);
    for (int n = 0; n < sc.num_slots; ++n) {
        if (lay.u_var[n] < 0) continue;
        CHECK(lay.u_scale[n] ==
              doctest::Approx(ls.at(n, 0).beta_bu).epsilon(1e-12));
    }

    SUBCASE("the margin of the start point is the relaxed rate slack") {
        // the schedule satisfies each rate demand with equality or better
        CHECK(rate_margin(sc, sch, rho, kin) >= 1.0 - 1e-6);
    }

    SUBCASE("pushing chi above the start margin breaks a rate row") {
        x[lay.chi_var] += 1e-3;
        CHECK(max_violation(p, x) > 1e-4);
    }
}

TEST_CASE("one subproblem solve improves the margin and keeps slacks true") {
    Scenario sc = reference_scenario();
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, kin, rho);
    double margin0 = rate_margin(sc, sch, rho, kin);

    TrajectoryLayout lay;
    conic::Program p = build_trajectory_subproblem(kin, sch, rho, sc, &lay);
    conic::SolveResult res = conic::solve(p);
    REQUIRE(res.status == conic::SolveStatus::Optimal);

    double chi = res.x[lay.chi_var];
    CHECK(chi >= margin0 - 1e-6);

    // rebuild the moved trajectory and compare the slacks with the true
    // pathlosses there; the tangent bounds keep u and r below the truth
    Kinematics moved;
    moved.pos.assign(static_cast<size_t>(sc.num_slots) + 1, Vec3::Zero());
    moved.vel.assign(sc.num_slots, Vec3::Zero());
    moved.pos[0] = sc.start_pos;
    for (int n = 1; n <= sc.num_slots; ++n)
        for (int d = 0; d < 3; ++d) moved.pos[n][d] = res.x[lay.q_var(n, d)];
    for (int n = 0; n < sc.num_slots; ++n)
        for (int d = 0; d < 3; ++d) moved.vel[n][d] = res.x[lay.v_var(n, d)];
    LargeScaleState ls = compute_large_scale(moved, sc);
    for (int n = 0; n < sc.num_slots; ++n) {
        if (lay.u_var[n] >= 0)
            CHECK(res.x[lay.u_var[n]] * lay.u_scale[n] <=
                  ls.at(n, 0).beta_bu * (1.0 + 1e-4));
        for (int k = 0; k < sc.num_users(); ++k) {
            size_t i = static_cast<size_t>(n) * sc.num_users() + k;
            if (lay.r_var[i] < 0) continue;
            CHECK(res.x[lay.r_var[i]] * lay.r_scale[i] <=
                  ls.at(n, k).beta_ku * (1.0 + 1e-4));
            double t = res.x[lay.t_var[i]];
            CHECK(t * t <= res.x[lay.u_var[n]] * res.x[lay.r_var[i]] *
                               (1.0 + 1e-6) +
                           1e-8);
        }
    }
}

TEST_CASE("trajectory refinement converges on the reference run") {
    Scenario sc = reference_scenario();
    Kinematics init = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, init, rho);
    double margin0 = rate_margin(sc, sch, rho, init);

    TrajectoryRun run = sca_trajectory(init, sch, rho, sc);
    CHECK(run.converged);
    CHECK(static_cast<int>(run.trace.size()) <= sc.max_inner_iters);
    for (size_t i = 1; i < run.trace.size(); ++i)
        CHECK(run.trace[i] >= run.trace[i - 1] - 1e-5);
    CHECK(run.trace.front() >= margin0 - 1e-5);

    CHECK(check_kinematics(sc, run.iterate.kin).empty());
    CHECK(rate_margin(sc, sch, rho, run.iterate.kin) >= margin0 - 1e-6);

    SUBCASE("the run is deterministic") {
        TrajectoryRun again = sca_trajectory(init, sch, rho, sc);
        REQUIRE(again.trace.size() == run.trace.size());
        for (size_t i = 0; i < run.trace.size(); ++i)
            CHECK(again.trace[i] == run.trace[i]);
        for (size_t n = 0; n < run.iterate.kin.pos.size(); ++n)
            CHECK((again.iterate.kin.pos[n] - run.iterate.kin.pos[n]).norm() ==
                  0.0);
    }
}

TEST_CASE("a slack inner tolerance stops after a single solve") {
    Scenario sc = reference_scenario();
    sc.eps_inner = 1e6;
    Kinematics init = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, init, rho);

    TrajectoryRun run = sca_trajectory(init, sch, rho, sc);
    CHECK(run.converged);
    CHECK(run.trace.size() == 1);
}

TEST_CASE("a no-fly sphere blocks the descent toward a user") {
    Scenario sc = reference_scenario();
    sc.no_fly.push_back({Vec3(120, 40, 5), 3.0});
    Kinematics init = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, init, rho);

    TrajectoryRun run = sca_trajectory(init, sch, rho, sc);
    CHECK(run.converged);
    CHECK(check_kinematics(sc, run.iterate.kin).empty());
    for (const auto& pos : run.iterate.kin.pos)
        for (const auto& z : sc.no_fly)
            CHECK((pos - z.center).norm() >= z.radius - 1e-6);
}

TEST_CASE("degenerate expansion points are rejected") {
    Scenario sc = reference_scenario();
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);

    SUBCASE("scheduled user on the path") {
        sc.users[0] = kin.pos[30];  // slot 29 flies through the user
        Schedule sch;
        sch.num_slots = sc.num_slots;
        sch.num_users = sc.num_users();
        sch.s.assign(static_cast<size_t>(sc.num_slots) * sc.num_users(), 0.0);
        sch.s[29 * 3 + 0] = 1.0;
        CHECK_THROWS_WITH_AS(build_trajectory_subproblem(kin, sch, rho, sc),
                             doctest::Contains("user 0"),
                             Error);
    }

    SUBCASE("base station on the path") {
        sc.bs_pos = kin.pos[30];
        Schedule sch;
        sch.num_slots = sc.num_slots;
        sch.num_users = sc.num_users();
        sch.s.assign(static_cast<size_t>(sc.num_slots) * sc.num_users(), 0.0);
        sch.s[29 * 3 + 1] = 0.5;
        try {
            build_trajectory_subproblem(kin, sch, rho, sc);
            FAIL("expected a degenerate-expansion error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateExpansion);
        }
    }
}

TEST_CASE("shape mismatches and bad starts are rejected") {
    Scenario sc = reference_scenario();
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, kin, rho);

    std::vector<double> short_rho(sc.num_slots - 1, 0.5);
    CHECK_THROWS_AS(build_trajectory_subproblem(kin, sch, short_rho, sc),
                    Error);

    Kinematics wrong = kin;
    wrong.pos.pop_back();
    CHECK_THROWS_AS(build_trajectory_subproblem(wrong, sch, rho, sc), Error);

    Kinematics teleport = kin;
    teleport.pos[10] += Vec3(50, 0, 0);
    try {
        sca_trajectory(teleport, sch, rho, sc);
        FAIL("expected a bad-parameter error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadParameter);
    }
}

TEST_CASE("harvest rows ride the link slack of the energy mode") {
    Scenario sc = reference_scenario();
    sc.harvest_target = {3e-8, 4e-8, 5e-8};
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, kin, rho);

    auto harvest_vars = [&](EhMode mode) {
        sc.eh_mode = mode;
        TrajectoryLayout lay;
        conic::Program p = build_trajectory_subproblem(kin, sch, rho, sc, &lay);
        // the harvest rows are the normalized ge rows, one per user in order
        std::vector<std::vector<int>> rows;
        for (const auto& row : p.le_rows()) {
            if (row.rhs != -1.0) continue;
            std::vector<int> vars;
            for (const auto& t : row.e.terms) vars.push_back(t.var);
            rows.push_back(std::move(vars));
        }
        REQUIRE(rows.size() == 3);
        REQUIRE(!rows[1].empty());
        return std::pair{rows[1], lay};
    };

    auto [paper_vars, paper_lay] = harvest_vars(EhMode::PaperLiteral);
    for (int v : paper_vars) {
        bool is_u = false;
        for (int n = 0; n < sc.num_slots; ++n) is_u |= paper_lay.u_var[n] == v;
        CHECK(is_u);
    }

    auto [fixed_vars, fixed_lay] = harvest_vars(EhMode::Corrected);
    for (int v : fixed_vars) {
        bool is_r = false;
        for (size_t i = 0; i < fixed_lay.r_var.size(); ++i)
            is_r |= fixed_lay.r_var[i] == v;
        CHECK(is_r);
    }
}

TEST_CASE("no rate demand pins the margin at zero") {
    Scenario sc = reference_scenario();
    sc.min_rate = {0.0, 0.0, 0.0};
    Kinematics init = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch = relaxed_schedule(sc, init, rho);

    TrajectoryRun run = sca_trajectory(init, sch, rho, sc);
    CHECK(run.converged);
    CHECK(run.trace.size() == 1);
    CHECK(std::abs(run.iterate.chi) <= 1e-6);
    CHECK(check_kinematics(sc, run.iterate.kin).empty());
}
