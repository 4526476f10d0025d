#include "trajectory.hpp"

#include "energy.hpp"
#include "errors.hpp"
#include "rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace irsuav {

namespace {

using conic::LinExpr;
using conic::Program;

// Shares below this stay at their expansion-point contribution instead of
// getting slack variables. Relaxed interior-point schedules carry share dust
// around 1e-7 whose flat slack directions stall the conic solver; real
// shares sit at 0.1 and above, so the gap is wide.
constexpr double kMeaningfulShare = 1e-4;
constexpr double kMinNodeDist = 1e-3;

struct SlotActivity {
    std::vector<char> slot_busy;              // any meaningful share
    std::vector<char> pair_active;            // [slot * K + user]
    std::vector<char> pair_frozen;            // positive but negligible share
};

SlotActivity activity(const Schedule& sch) {
    SlotActivity a;
    a.slot_busy.assign(sch.num_slots, 0);
    a.pair_active.assign(
        static_cast<size_t>(sch.num_slots) * sch.num_users, 0);
    a.pair_frozen.assign(
        static_cast<size_t>(sch.num_slots) * sch.num_users, 0);
    for (int n = 0; n < sch.num_slots; ++n)
        for (int k = 0; k < sch.num_users; ++k) {
            double s = sch.effective(n, k);
            size_t i = static_cast<size_t>(n) * sch.num_users + k;
            if (s > kMeaningfulShare) {
                a.slot_busy[n] = 1;
                a.pair_active[i] = 1;
            } else if (s > 0.0) {
                a.pair_frozen[i] = 1;
            }
        }
    return a;
}

void check_shapes(const Kinematics& prev, const Schedule& sch,
                  const std::vector<double>& rho_bar, const Scenario& sc) {
    const int n = sc.num_slots;
    if (static_cast<int>(prev.pos.size()) != n + 1 ||
        static_cast<int>(prev.vel.size()) != n)
        throw Error(ErrorCode::BadParameter,
                    "kinematics do not match the scenario horizon");
    if (sch.num_slots != n || sch.num_users != sc.num_users())
        throw Error(ErrorCode::BadParameter,
                    "schedule does not match the scenario");
    if (static_cast<int>(rho_bar.size()) != n)
        throw Error(ErrorCode::BadParameter,
                    "need one reflection amplitude per slot");
}

// Tangent of the pathloss beta0 * w^(-alpha/2) in the squared distance w at
// w0. The function is convex in w, so beta >= c_const - c_lin * w globally.
struct PathlossTangent {
    double c_const = 0.0;
    double c_lin = 0.0;
};

PathlossTangent pathloss_tangent(double beta0, double alpha, double w0) {
    PathlossTangent t;
    double value = beta0 * std::pow(w0, -alpha / 2.0);
    t.c_lin = alpha / 2.0 * value / w0;
    t.c_const = value + t.c_lin * w0;
    return t;
}

// squared distance of prev position (slot n uses pos[n+1]) to a node
double sq_dist(const Kinematics& prev, int slot, const Vec3& node) {
    return (prev.pos[slot + 1] - node).squaredNorm();
}

}  // namespace

conic::Program build_trajectory_subproblem(const Kinematics& prev,
                                           const Schedule& sch,
                                           const std::vector<double>& rho_bar,
                                           const Scenario& sc,
                                           TrajectoryLayout* layout) {
    check_shapes(prev, sch, rho_bar, sc);
    const int N = sc.num_slots;
    const int K = sc.num_users();
    const double dt = sc.slot_duration;
    const SlotActivity act = activity(sch);

    for (int n = 0; n < N; ++n) {
        if (!act.slot_busy[n]) continue;
        if (sq_dist(prev, n, sc.bs_pos) < kMinNodeDist * kMinNodeDist)
            throw Error(ErrorCode::DegenerateExpansion,
                        "expansion point sits on the BS at slot " +
                            std::to_string(n));
        for (int k = 0; k < K; ++k)
            if (act.pair_active[static_cast<size_t>(n) * K + k] &&
                sq_dist(prev, n, sc.users[k]) < kMinNodeDist * kMinNodeDist)
                throw Error(ErrorCode::DegenerateExpansion,
                            "expansion point sits on user " +
                                std::to_string(k) + " at slot " +
                                std::to_string(n));
    }

    LargeScaleState ls = compute_large_scale(prev, sc);

    TrajectoryLayout lay;
    lay.num_slots = N;
    lay.num_users = K;
    lay.u_var.assign(N, -1);
    lay.r_var.assign(static_cast<size_t>(N) * K, -1);
    lay.t_var.assign(static_cast<size_t>(N) * K, -1);
    lay.u_scale.assign(N, 0.0);
    lay.r_scale.assign(static_cast<size_t>(N) * K, 0.0);
    lay.t_scale.assign(static_cast<size_t>(N) * K, 0.0);
    for (int n = 0; n < N; ++n) {
        if (act.slot_busy[n]) lay.u_scale[n] = ls.at(n, 0).beta_bu;
        for (int k = 0; k < K; ++k) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i]) continue;
            lay.r_scale[i] = ls.at(n, k).beta_ku;
            lay.t_scale[i] = std::sqrt(lay.u_scale[n] * lay.r_scale[i]);
        }
    }

    Program p;
    for (int n = 1; n <= N; ++n) {
        p.add_var();                       // x
        p.add_var();                       // y
        p.add_var(sc.h_min, sc.h_max);     // z
    }
    for (int n = 0; n < N; ++n)
        for (int d = 0; d < 3; ++d) p.add_var();
    const double inf = std::numeric_limits<double>::infinity();
    for (int n = 0; n < N; ++n)
        if (act.slot_busy[n]) lay.u_var[n] = p.add_var(0.0, inf);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i]) continue;
            lay.r_var[i] = p.add_var(0.0, inf);
            lay.t_var[i] = p.add_var(0.0, inf);
        }
    lay.chi_var = p.add_var();
    p.maximize(LinExpr::of(lay.chi_var));

    // position update rows; slot 0 leaves the fixed start
    for (int d = 0; d < 3; ++d) {
        LinExpr e = LinExpr::of(lay.q_var(1, d));
        e.add(lay.v_var(0, d), -dt);
        p.add_eq(e, sc.start_pos[d]);
    }
    for (int n = 2; n <= N; ++n)
        for (int d = 0; d < 3; ++d) {
            LinExpr e = LinExpr::of(lay.q_var(n, d));
            e.add(lay.q_var(n - 1, d), -1.0);
            e.add(lay.v_var(n - 1, d), -dt);
            p.add_eq(e, 0.0);
        }
    for (int d = 0; d < 3; ++d)
        p.add_eq(LinExpr::of(lay.q_var(N, d)), sc.end_pos[d]);

    for (int n = 0; n < N; ++n) {
        std::vector<LinExpr> rows(4);
        rows[0] = LinExpr(sc.v_max);
        for (int d = 0; d < 3; ++d) rows[1 + d] = LinExpr::of(lay.v_var(n, d));
        p.add_soc(std::move(rows));
    }
    for (int n = 0; n + 1 < N; ++n) {
        std::vector<LinExpr> rows(4);
        rows[0] = LinExpr(sc.a_max * dt);
        for (int d = 0; d < 3; ++d) {
            rows[1 + d] = LinExpr::of(lay.v_var(n + 1, d));
            rows[1 + d].add(lay.v_var(n, d), -1.0);
        }
        p.add_soc(std::move(rows));
    }

    // no-fly spheres, linearized at prev: grad' q >= rhs keeps q outside
    for (const NoFlyZone& zone : sc.no_fly) {
        for (int n = 1; n <= N; ++n) {
            Vec3 d = prev.pos[n] - zone.center;
            double rhs = zone.radius * zone.radius - d.squaredNorm() +
                         2.0 * d.dot(prev.pos[n]);
            LinExpr e;
            for (int c = 0; c < 3; ++c) e.add(lay.q_var(n, c), 2.0 * d[c]);
            p.add_ge(e, rhs);
        }
    }

    // u and r sit under the pathloss tangents of their links; rows are
    // divided by the prev pathloss so the cone blocks stay near unit scale
    for (int n = 0; n < N; ++n) {
        if (!act.slot_busy[n]) continue;
        PathlossTangent tan = pathloss_tangent(sc.beta0(), sc.alpha_bu,
                                               sq_dist(prev, n, sc.bs_pos));
        double root = std::sqrt(tan.c_lin / lay.u_scale[n]);
        std::vector<LinExpr> squares(3);
        for (int d = 0; d < 3; ++d) {
            squares[d] = LinExpr::of(lay.q_var(n + 1, d), root);
            squares[d].constant = -root * sc.bs_pos[d];
        }
        LinExpr bound(tan.c_const / lay.u_scale[n]);
        bound.add(lay.u_var[n], -1.0);
        p.add_quadratic_le(std::move(squares), std::move(bound));
    }
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i]) continue;
            PathlossTangent tan =
                pathloss_tangent(sc.beta0(), sc.alpha_ku[k],
                                 sq_dist(prev, n, sc.users[k]));
            double root = std::sqrt(tan.c_lin / lay.r_scale[i]);
            std::vector<LinExpr> squares(3);
            for (int d = 0; d < 3; ++d) {
                squares[d] = LinExpr::of(lay.q_var(n + 1, d), root);
                squares[d].constant = -root * sc.users[k][d];
            }
            LinExpr bound(tan.c_const / lay.r_scale[i]);
            bound.add(lay.r_var[i], -1.0);
            p.add_quadratic_le(std::move(squares), std::move(bound));

            // u_hat * r_hat >= t_hat^2 matches u * r >= t^2 exactly because
            // the t scale is the geometric mean of the other two
            LinExpr xs = LinExpr::of(lay.t_var[i], std::sqrt(2.0));
            p.add_rsoc(LinExpr::of(lay.u_var[n]), LinExpr::of(lay.r_var[i]),
                       {xs});
        }

    // harvest rows in the mode's link slack, normalized by the target;
    // negligible shares contribute their value at prev as a constant
    const std::vector<double> targets = harvest_targets(sc);
    for (int k = 0; k < K; ++k) {
        if (targets[k] <= 0.0) continue;
        LinExpr e;
        for (int n = 0; n < N; ++n) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i] && !act.pair_frozen[i]) continue;
            const LinkState& st = ls.at(n, k);
            if (act.pair_frozen[i]) {
                e.constant += avg_harvest_bound(sc.eh_mode, sc.eh.eta,
                                                sch.effective(n, k),
                                                sc.tx_power[k], rho_bar[n],
                                                sc.panel_nx, sc.panel_ny,
                                                st.beta_bu, st.beta_ku) /
                              targets[k];
                continue;
            }
            double coef = avg_harvest_bound(
                sc.eh_mode, sc.eh.eta, sch.effective(n, k), sc.tx_power[k],
                rho_bar[n], sc.panel_nx, sc.panel_ny, 1.0, 1.0);
            bool paper = sc.eh_mode == EhMode::PaperLiteral;
            int slack = paper ? lay.u_var[n] : lay.r_var[i];
            double scale = paper ? lay.u_scale[n] : lay.r_scale[i];
            e.add(slack, coef * scale / targets[k]);
        }
        p.add_ge(e, 1.0);
    }

    // rate rows: slot rate linearized in t at its value under prev
    bool any_rate_row = false;
    for (int k = 0; k < K; ++k) {
        if (sc.min_rate[k] <= 0.0) continue;
        any_rate_row = true;
        LinExpr e;
        double g = snr_gain(sc, k);
        for (int n = 0; n < N; ++n) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i] && !act.pair_frozen[i]) continue;
            const LinkState& st = ls.at(n, k);
            double share = sch.effective(n, k);
            double t0 = std::sqrt(st.beta_bu * st.beta_ku);
            PsiCoefficients ps = psi(sc, k, rho_bar[n], st.beta_kb);
            double val = gamma_bar(ps, st.beta_kb, share, g, t0);
            if (act.pair_frozen[i]) {
                e.constant += val / sc.min_rate[k];
                continue;
            }
            double slope = gamma_bar_derivative(ps, st.beta_kb, share, g, t0);
            e.add(lay.t_var[i], slope * t0 / sc.min_rate[k]);
            e.constant += (val - slope * t0) / sc.min_rate[k];
        }
        e.add(lay.chi_var, -1.0);
        p.add_ge(e, 0.0);
    }
    // with no rate demand the margin is pinned so the objective stays bounded
    if (!any_rate_row) p.add_le(LinExpr::of(lay.chi_var), 0.0);

    if (layout) *layout = lay;
    return p;
}

namespace {

TrajectoryIterate extract(const TrajectoryLayout& lay, const Scenario& sc,
                          const std::vector<double>& x) {
    TrajectoryIterate it;
    const int N = lay.num_slots, K = lay.num_users;
    it.kin.pos.resize(N + 1);
    it.kin.vel.resize(N);
    it.kin.pos[0] = sc.start_pos;
    for (int n = 1; n <= N; ++n)
        for (int d = 0; d < 3; ++d) it.kin.pos[n][d] = x[lay.q_var(n, d)];
    for (int n = 0; n < N; ++n)
        for (int d = 0; d < 3; ++d) it.kin.vel[n][d] = x[lay.v_var(n, d)];
    it.u.assign(N, 0.0);
    it.r.assign(static_cast<size_t>(N) * K, 0.0);
    it.t.assign(static_cast<size_t>(N) * K, 0.0);
    for (int n = 0; n < N; ++n)
        if (lay.u_var[n] >= 0) it.u[n] = x[lay.u_var[n]] * lay.u_scale[n];
    for (size_t i = 0; i < lay.r_var.size(); ++i) {
        if (lay.r_var[i] >= 0) it.r[i] = x[lay.r_var[i]] * lay.r_scale[i];
        if (lay.t_var[i] >= 0) it.t[i] = x[lay.t_var[i]] * lay.t_scale[i];
    }
    it.chi = x[lay.chi_var];
    return it;
}

}  // namespace

TrajectoryRun sca_trajectory(const Kinematics& init, const Schedule& sch,
                             const std::vector<double>& rho_bar,
                             const Scenario& sc) {
    if (!check_kinematics(sc, init).empty())
        throw Error(ErrorCode::BadParameter,
                    "initial trajectory violates the kinematic constraints");

    conic::SolveSettings settings;
    // Late iterates sit on a degenerate optimal face (only one user binds
    // the margin) where the dual residual floors near the static KKT
    // regularization. 1e-7 clears that floor and is still four orders
    // tighter than the outer stop.
    settings.feas_tol = 1e-7;
    settings.abs_gap_tol = 1e-7;
    settings.rel_gap_tol = 1e-7;
    TrajectoryRun run;
    Kinematics prev = init;
    // The surrogate objective equals the true margin at the expansion point,
    // so the margin of `init` anchors the first convergence check.
    double last_chi = rate_margin(sc, sch, rho_bar, init);
    if (!std::isfinite(last_chi)) last_chi = 0.0;  // no rate demand anywhere
    for (int iter = 0; iter < sc.max_inner_iters; ++iter) {
        TrajectoryLayout lay;
        Program p = build_trajectory_subproblem(prev, sch, rho_bar, sc, &lay);
        conic::SolveResult res = conic::solve(p, settings);
        if (res.status == conic::SolveStatus::Infeasible)
            throw Error(ErrorCode::SubproblemInfeasible,
                        "trajectory subproblem infeasible at iteration " +
                            std::to_string(iter));
        if (res.status != conic::SolveStatus::Optimal)
            throw Error(ErrorCode::NumericalFailure,
                        "trajectory solve stalled at iteration " +
                            std::to_string(iter) + ": " + res.detail);
        TrajectoryIterate it = extract(lay, sc, res.x);
        if (iter > 0) {
            double slack = 10.0 * (settings.abs_gap_tol +
                                   settings.rel_gap_tol * std::abs(last_chi));
            if (it.chi < last_chi - slack) {
                std::ostringstream msg;
                msg << "rate margin fell from " << last_chi << " to "
                    << it.chi << " at iteration " << iter;
                throw Error(ErrorCode::NonMonotone, msg.str());
            }
        }
        double diff = std::abs(it.chi - last_chi);
        last_chi = it.chi;
        run.iterate = std::move(it);
        run.trace.push_back(last_chi);
        prev = run.iterate.kin;
        if (diff <= sc.eps_inner) {
            run.converged = true;
            break;
        }
    }
    return run;
}

double rate_margin(const Scenario& sc, const Schedule& sch,
                   const std::vector<double>& rho_bar, const Kinematics& kin) {
    LargeScaleState ls = compute_large_scale(kin, sc);
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sc.num_users(); ++k) {
        if (sc.min_rate[k] <= 0.0) continue;
        double g = snr_gain(sc, k);
        double total = 0.0;
        for (int n = 0; n < sc.num_slots; ++n) {
            const LinkState& st = ls.at(n, k);
            double t0 = std::sqrt(st.beta_bu * st.beta_ku);
            total += gamma_bar(psi(sc, k, rho_bar[n], st.beta_kb), st.beta_kb,
                               sch.effective(n, k), g, t0);
        }
        margin = std::min(margin, total / sc.min_rate[k]);
    }
    return margin;
}

}  // namespace irsuav
