#include "orchestrator.hpp"

#include "energy.hpp"
#include "errors.hpp"
#include "phase.hpp"
#include "rate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

namespace irsuav {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Forward a stage failure with the round and stage prepended.
template <typename F>
auto run_stage(const char* stage, int outer, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        std::ostringstream msg;
        msg << "outer iteration " << outer << ", " << stage << ": "
            << e.what();
        throw Error(e.code(), msg.str());
    }
}

}  // namespace

double spend_bound(const Scenario& sc, const Schedule& sch) {
    double kappa = 0.0;
    for (int k = 0; k < sch.num_users; ++k) {
        double spend = 0.0;
        for (int n = 0; n < sch.num_slots; ++n)
            spend += sch.effective(n, k) * slot_energy(sc, k);
        kappa = std::max(kappa, spend);
    }
    return kappa;
}

PhaseSchedule align_phases(const Scenario& sc, const Schedule& sch,
                           const LargeScaleState& ls) {
    PhaseSchedule ps;
    ps.phases.assign(sch.num_slots, {});
    for (int n = 0; n < sch.num_slots; ++n) {
        ps.phases[n].resize(sch.num_users);
        for (int k = 0; k < sch.num_users; ++k)
            if (sch.effective(n, k) > 0.0)
                ps.phases[n][k] = optimal_phases(sc, ls.at(n, k));
    }
    return ps;
}

ConstraintAudit evaluate_state(const DecisionState& st, const Scenario& sc) {
    const int N = sc.num_slots;
    const int K = sc.num_users();
    if (st.schedule.num_slots != N || st.schedule.num_users != K ||
        static_cast<int>(st.rho_bar.size()) != N ||
        static_cast<int>(st.kin.pos.size()) != N + 1 ||
        static_cast<int>(st.kin.vel.size()) != N)
        throw Error(ErrorCode::BadParameter,
                    "state does not match the scenario shape");

    ConstraintAudit a;
    LargeScaleState ls = compute_large_scale(st.kin, sc);
    const std::vector<double> targets = harvest_targets(sc);

    for (int k = 0; k < K; ++k) {
        double spend = 0.0, harvested = 0.0, rate = 0.0;
        double g = snr_gain(sc, k);
        for (int n = 0; n < N; ++n) {
            double s = st.schedule.effective(n, k);
            spend += s * slot_energy(sc, k);
            if (s <= 0.0) continue;
            const LinkState& lk = ls.at(n, k);
            harvested += avg_harvest_bound(sc.eh_mode, sc.eh.eta, s,
                                           sc.tx_power[k], st.rho_bar[n],
                                           sc.panel_nx, sc.panel_ny,
                                           lk.beta_bu, lk.beta_ku);
            double t0 = std::sqrt(lk.beta_bu * lk.beta_ku);
            rate += gamma_bar(psi(sc, k, st.rho_bar[n], lk.beta_kb),
                              lk.beta_kb, s, g, t0);
        }
        a.spend = std::max(
            a.spend, (spend - st.kappa) / std::max(st.kappa, 1e-12));
        if (targets[k] > 0.0)
            a.harvest =
                std::max(a.harvest, (targets[k] - harvested) / targets[k]);
        if (sc.min_rate[k] > 0.0)
            a.rate =
                std::max(a.rate, (sc.min_rate[k] - rate) / sc.min_rate[k]);
    }
    a.spend = std::max(a.spend, 0.0);
    a.harvest = std::max(a.harvest, 0.0);
    a.rate = std::max(a.rate, 0.0);

    for (int n = 0; n < N; ++n) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            double s = st.schedule.effective(n, k);
            total += s;
            a.share_box = std::max({a.share_box, -s, s - 1.0});
        }
        a.sharing = std::max(a.sharing, total - 1.0);
        a.amplitude_box =
            std::max({a.amplitude_box, -st.rho_bar[n], st.rho_bar[n] - 1.0});
    }
    a.sharing = std::max(a.sharing, 0.0);
    a.share_box = std::max(a.share_box, 0.0);
    a.amplitude_box = std::max(a.amplitude_box, 0.0);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (const auto& slot : st.phases.phases)
        for (const auto& user : slot)
            for (double phi : user)
                a.phase_range =
                    std::max({a.phase_range, -phi / two_pi,
                              (phi - two_pi) / two_pi});
    a.phase_range = std::max(a.phase_range, 0.0);

    const double dt = sc.slot_duration;
    a.endpoints = std::max((st.kin.pos.front() - sc.start_pos).norm(),
                           (st.kin.pos.back() - sc.end_pos).norm());
    for (int n = 0; n < N; ++n)
        a.position_update =
            std::max(a.position_update,
                     (st.kin.pos[n + 1] - st.kin.pos[n] - dt * st.kin.vel[n])
                         .norm());
    for (int n = 0; n + 1 < N; ++n)
        a.accel = std::max(
            a.accel, ((st.kin.vel[n + 1] - st.kin.vel[n]).norm() / dt -
                      sc.a_max) /
                         sc.a_max);
    for (int n = 0; n < N; ++n)
        a.speed = std::max(
            a.speed, (st.kin.vel[n].norm() - sc.v_max) / sc.v_max);
    a.accel = std::max(a.accel, 0.0);
    a.speed = std::max(a.speed, 0.0);

    a.no_fly.assign(sc.no_fly.size(), 0.0);
    for (size_t z = 0; z < sc.no_fly.size(); ++z) {
        for (int n = 1; n <= N; ++n) {
            double d = (st.kin.pos[n] - sc.no_fly[z].center).norm();
            a.no_fly[z] = std::max(
                a.no_fly[z], (sc.no_fly[z].radius - d) / sc.no_fly[z].radius);
        }
        a.no_fly[z] = std::max(a.no_fly[z], 0.0);
    }
    return a;
}

double ConstraintAudit::worst() const {
    double w = std::max({spend, harvest, rate, sharing, share_box,
                         phase_range, amplitude_box, endpoints,
                         position_update, accel, speed});
    for (double z : no_fly) w = std::max(w, z);
    return w;
}

RunResult alternating_optimize(const Scenario& sc) {
    std::string issue = sc.validate();
    if (!issue.empty()) throw Error(ErrorCode::BadParameter, issue);

    RunResult rr;
    Kinematics kin = straight_line_kinematics(sc);
    std::vector<double> rho(sc.num_slots, 0.5);
    Schedule sch;
    double kappa_prev = 0.0;
    bool have_prev = false;
    int rounds = 0;

    for (int outer = 0; outer < sc.max_outer_iters; ++outer) {
        OuterIteration rec;
        auto t0 = std::chrono::steady_clock::now();

        LargeScaleState ls = compute_large_scale(kin, sc);
        ScheduleTerms terms = schedule_terms(sc, ls, rho);
        SchedulingResult sres = run_stage("scheduling", outer, [&] {
            return solve_scheduling(sc, terms);
        });
        sch = sres.schedule;
        rec.kappa = sres.kappa;
        rec.seconds_scheduling = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        rr.state.phases = align_phases(sc, sch, ls);
        rec.seconds_phases = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        TrajectoryRun traj = run_stage("trajectory", outer, [&] {
            return sca_trajectory(kin, sch, rho, sc);
        });
        kin = traj.iterate.kin;
        rec.chi = traj.iterate.chi;
        rec.trajectory_iters = static_cast<int>(traj.trace.size());
        rec.seconds_trajectory = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        LargeScaleState moved = compute_large_scale(kin, sc);
        ReflectionRun refl = run_stage("reflection", outer, [&] {
            return sca_reflection(rho, sch, moved, sc);
        });
        rho = refl.iterate.rho_bar;
        rec.pi = refl.iterate.pi;
        rec.reflection_iters = static_cast<int>(refl.trace.size());
        rec.seconds_reflection = seconds_since(t0);

        rr.report.iterations.push_back(rec);
        rounds = outer + 1;

        if (have_prev) {
            // the previous schedule stays feasible under the improved
            // geometry, so the re-solved spend bound can only drop (module
            // solver noise)
            double tol = 10.0 * (1e-8 + 1e-8 * std::abs(kappa_prev));
            if (rec.kappa > kappa_prev + tol) {
                std::ostringstream msg;
                msg << "spend bound rose from " << kappa_prev << " to "
                    << rec.kappa << " at outer iteration " << outer;
                throw Error(ErrorCode::NonMonotone, msg.str());
            }
            if (std::abs(rec.kappa - kappa_prev) <=
                sc.eps_outer * std::max(std::abs(kappa_prev), 1e-12)) {
                rr.report.converged = true;
                break;
            }
        }
        kappa_prev = rec.kappa;
        have_prev = true;
    }

    // one rounding pass at the end: re-solve at the final geometry, round to
    // blocks, and keep whatever shortfall remains visible
    LargeScaleState ls = compute_large_scale(kin, sc);
    ScheduleTerms terms = schedule_terms(sc, ls, rho);
    RoundedScheduling rs = run_stage("rounding", rounds, [&] {
        return solve_and_round(sc, terms);
    });
    rr.report.kappa_relaxed = rs.relaxed.kappa;
    rr.report.kappa_rounded = rs.audit.kappa;
    rr.report.rounding = rs.audit;

    rr.state.schedule = rs.rounded;
    rr.state.kin = std::move(kin);
    rr.state.rho_bar = std::move(rho);
    rr.state.phases = align_phases(sc, rr.state.schedule, ls);
    rr.state.kappa = rs.audit.kappa;
    rr.report.final_audit = evaluate_state(rr.state, sc);
    return rr;
}

}  // namespace irsuav
