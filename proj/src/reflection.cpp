#include "reflection.hpp"

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

// Same threshold as the trajectory step: shares below it keep their
// expansion-point contribution as a constant instead of a variable row.
constexpr double kMeaningfulShare = 1e-4;

struct SlotActivity {
    std::vector<char> slot_busy;    // any meaningful share
    std::vector<char> pair_active;  // [slot * K + user]
    std::vector<char> pair_frozen;  // positive but negligible share
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

void check_shapes(const std::vector<double>& rho, const Schedule& sch,
                  const LargeScaleState& ls, const Scenario& sc) {
    const int n = sc.num_slots;
    if (static_cast<int>(rho.size()) != n)
        throw Error(ErrorCode::BadParameter,
                    "need one reflection amplitude per slot");
    for (double r : rho)
        if (!(r >= 0.0 && r <= 1.0))
            throw Error(ErrorCode::BadParameter,
                        "reflection amplitudes must lie in [0, 1]");
    if (sch.num_slots != n || sch.num_users != sc.num_users())
        throw Error(ErrorCode::BadParameter,
                    "schedule does not match the scenario");
    if (ls.num_slots != n || ls.num_users != sc.num_users())
        throw Error(ErrorCode::BadParameter,
                    "link state does not match the scenario");
}

// The slot SNR argument is an exact quadratic in the amplitude:
//   a * rho^2 + b * rho + c,
// with a, b recovered from the mixing coefficients at full amplitude. The
// tangent of share * log2(1 + g * arg) then has a closed-form slope.
struct RateTangent {
    double value = 0.0;  // slot rate at the expansion amplitude
    double slope = 0.0;  // d(rate)/d(rho) there
    double a = 0.0, b = 0.0, c = 0.0;
};

RateTangent rate_tangent(const Scenario& sc, int k, const LinkState& st,
                         double share, double g, double r0) {
    RateTangent t;
    double t0 = std::sqrt(st.beta_bu * st.beta_ku);
    PsiCoefficients full = psi(sc, k, 1.0, st.beta_kb);
    t.a = (full.psi1 + full.psi2) * t0 * t0;
    t.b = full.psi3 * t0;
    t.c = full.psi4 * st.beta_kb;
    double arg = (t.a * r0 + t.b) * r0 + t.c;
    t.value = share * std::log2(1.0 + g * arg);
    t.slope = share * g * (2.0 * t.a * r0 + t.b) /
              ((1.0 + g * arg) * std::log(2.0));
    return t;
}

// Grid scan of the slot rate's curvature in the amplitude. The share is a
// positive factor and drops out of the sign, so the scan runs at share 1.
// A positive second difference beyond float noise means the tangent is not
// an outer approximation and the pair needs the lifted fallback.
bool rate_concave_in_rho(double a, double b, double c, double g) {
    constexpr int kGrid = 33;
    constexpr double kCurvTol = 1e-12;
    double f[kGrid];
    for (int i = 0; i < kGrid; ++i) {
        double r = i / double(kGrid - 1);
        f[i] = std::log2(1.0 + g * ((a * r + b) * r + c));
    }
    for (int i = 1; i + 1 < kGrid; ++i)
        if (f[i - 1] - 2.0 * f[i] + f[i + 1] > kCurvTol) return false;
    return true;
}

}  // namespace

conic::Program build_reflection_subproblem(const std::vector<double>& prev_rho,
                                           const Schedule& sch,
                                           const LargeScaleState& ls,
                                           const Scenario& sc,
                                           ReflectionLayout* layout,
                                           int* fallback_pairs) {
    check_shapes(prev_rho, sch, ls, sc);
    const int N = sc.num_slots;
    const int K = sc.num_users();
    const SlotActivity act = activity(sch);

    ReflectionLayout lay;
    lay.num_slots = N;
    lay.rho_var.assign(N, -1);
    lay.w_var.assign(N, -1);

    Program p;
    for (int n = 0; n < N; ++n) {
        if (!act.slot_busy[n]) continue;
        lay.rho_var[n] = p.add_var(0.0, 1.0);
        lay.w_var[n] = p.add_var(0.0, 1.0);
    }
    lay.pi_var = p.add_var();

    // The pull on w is only a tie-break: slots whose harvest rows are slack
    // would otherwise sit anywhere between rho^2 and 1.
    LinExpr obj = LinExpr::of(lay.pi_var);
    for (int n = 0; n < N; ++n)
        if (lay.w_var[n] >= 0) obj.add(lay.w_var[n], -1e-8);
    p.maximize(obj);

    for (int n = 0; n < N; ++n)
        if (lay.w_var[n] >= 0)
            p.add_quadratic_le({LinExpr::of(lay.rho_var[n])},
                               LinExpr::of(lay.w_var[n]));

    // harvest rows: the bound factors as (value at rho 0) * (1 - rho^2), so
    // substituting w for rho^2 keeps the row exact once w sits on its cone
    const std::vector<double> targets = harvest_targets(sc);
    bool any_target = false;
    for (int k = 0; k < K; ++k) {
        if (targets[k] <= 0.0) continue;
        any_target = true;
        LinExpr e;
        for (int n = 0; n < N; ++n) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i] && !act.pair_frozen[i]) continue;
            const LinkState& st = ls.at(n, k);
            if (act.pair_frozen[i]) {
                e.constant += avg_harvest_bound(sc.eh_mode, sc.eh.eta,
                                                sch.effective(n, k),
                                                sc.tx_power[k], prev_rho[n],
                                                sc.panel_nx, sc.panel_ny,
                                                st.beta_bu, st.beta_ku) /
                              targets[k];
                continue;
            }
            double coef = avg_harvest_bound(sc.eh_mode, sc.eh.eta,
                                            sch.effective(n, k),
                                            sc.tx_power[k], 0.0, sc.panel_nx,
                                            sc.panel_ny, st.beta_bu,
                                            st.beta_ku) /
                          targets[k];
            e.constant += coef;
            e.add(lay.w_var[n], -coef);
        }
        e.add(lay.pi_var, -1.0);
        p.add_ge(e, 0.0);
    }
    // with no harvest demand the objective would be unbounded
    if (!any_target) p.add_le(LinExpr::of(lay.pi_var), 0.0);

    // rate rows, linearized in the amplitude around prev_rho
    int fb = 0;
    for (int k = 0; k < K; ++k) {
        if (sc.min_rate[k] <= 0.0) continue;
        LinExpr e;
        double g = snr_gain(sc, k);
        for (int n = 0; n < N; ++n) {
            size_t i = static_cast<size_t>(n) * K + k;
            if (!act.pair_active[i] && !act.pair_frozen[i]) continue;
            const LinkState& st = ls.at(n, k);
            RateTangent t = rate_tangent(sc, k, st, sch.effective(n, k), g,
                                         prev_rho[n]);
            if (act.pair_frozen[i]) {
                e.constant += t.value / sc.min_rate[k];
                continue;
            }
            if (rate_concave_in_rho(t.a, t.b, t.c, g)) {
                e.add(lay.rho_var[n], t.slope / sc.min_rate[k]);
                e.constant += (t.value - t.slope * prev_rho[n]) /
                              sc.min_rate[k];
                continue;
            }
            // Lifted fallback: swap rho^2 for an auxiliary pinned to its
            // tangent, then take the plane of the rate in (aux, rho). The
            // row stays exact at the expansion point.
            ++fb;
            double r0 = prev_rho[n];
            int z = p.add_var();
            LinExpr lift = LinExpr::of(z);
            lift.add(lay.rho_var[n], -2.0 * r0);
            p.add_eq(lift, -r0 * r0);
            double arg = (t.a * r0 + t.b) * r0 + t.c;
            double dz = sch.effective(n, k) * g * t.a /
                        ((1.0 + g * arg) * std::log(2.0));
            double dr = sch.effective(n, k) * g * t.b /
                        ((1.0 + g * arg) * std::log(2.0));
            e.add(z, dz / sc.min_rate[k]);
            e.add(lay.rho_var[n], dr / sc.min_rate[k]);
            e.constant += (t.value - dz * r0 * r0 - dr * r0) /
                          sc.min_rate[k];
        }
        p.add_ge(e, 1.0);
    }

    if (fallback_pairs) *fallback_pairs = fb;
    if (layout) *layout = lay;
    return p;
}

namespace {

// Largest value the linearized rate row of user k can reach over the box.
// Every slope is nonnegative, so the maximum sits at full amplitude.
double rate_reach(const Scenario& sc, const Schedule& sch,
                  const LargeScaleState& ls,
                  const std::vector<double>& prev_rho, int k) {
    double g = snr_gain(sc, k);
    double total = 0.0;
    for (int n = 0; n < sc.num_slots; ++n) {
        double share = sch.effective(n, k);
        if (share <= 0.0) continue;
        RateTangent t =
            rate_tangent(sc, k, ls.at(n, k), share, g, prev_rho[n]);
        total += t.value;
        if (share > kMeaningfulShare) total += t.slope * (1.0 - prev_rho[n]);
    }
    return total / sc.min_rate[k];
}

}  // namespace

ReflectionRun sca_reflection(const std::vector<double>& init_rho,
                             const Schedule& sch, const LargeScaleState& ls,
                             const Scenario& sc) {
    check_shapes(init_rho, sch, ls, sc);

    ReflectionRun run;
    const std::vector<double> targets = harvest_targets(sc);
    if (std::none_of(targets.begin(), targets.end(),
                     [](double t) { return t > 0.0; })) {
        run.iterate.rho_bar = init_rho;
        run.iterate.pi = 0.0;
        run.trace.push_back(0.0);
        run.converged = true;
        return run;
    }

    conic::SolveSettings settings;
    // Same floor as the trajectory step: on a degenerate optimal face the
    // dual residual bottoms out near the static KKT regularization.
    settings.feas_tol = 1e-7;
    settings.abs_gap_tol = 1e-7;
    settings.rel_gap_tol = 1e-7;

    std::vector<double> prev = init_rho;
    // The subproblem is exact on the harvest side at the expansion point, so
    // the margin of `init_rho` anchors the first convergence check.
    double last_pi = harvest_margin(sc, sch, ls, init_rho);
    for (int iter = 0; iter < sc.max_inner_iters; ++iter) {
        ReflectionLayout lay;
        int fb = 0;
        Program p = build_reflection_subproblem(prev, sch, ls, sc, &lay, &fb);
        run.fallback_pairs = fb;
        conic::SolveResult res = conic::solve(p, settings);
        if (res.status == conic::SolveStatus::Infeasible) {
            int worst = -1;
            double reach = std::numeric_limits<double>::infinity();
            for (int k = 0; k < sc.num_users(); ++k) {
                if (sc.min_rate[k] <= 0.0) continue;
                double r = rate_reach(sc, sch, ls, prev, k);
                if (r < reach) {
                    reach = r;
                    worst = k;
                }
            }
            std::ostringstream msg;
            msg << "reflection subproblem infeasible at iteration " << iter;
            if (worst >= 0)
                msg << ": user " << worst << " reaches at most " << reach
                    << " of its rate demand";
            throw Error(ErrorCode::SubproblemInfeasible, msg.str());
        }
        if (res.status != conic::SolveStatus::Optimal)
            throw Error(ErrorCode::NumericalFailure,
                        "reflection solve stalled at iteration " +
                            std::to_string(iter) + ": " + res.detail);
        ReflectionIterate it;
        it.rho_bar = prev;
        for (int n = 0; n < sc.num_slots; ++n)
            if (lay.rho_var[n] >= 0)
                // the solver can overshoot the box by its feasibility tol
                it.rho_bar[n] = std::clamp(res.x[lay.rho_var[n]], 0.0, 1.0);
        it.pi = res.x[lay.pi_var];
        if (iter > 0) {
            // Re-tangenting the concave rate can cut the previous point off
            // by the curvature debt of the last move, which grows with the
            // square of the step; a start far from the fixed point pays back
            // up to a convergence step or two. Real regressions are orders
            // of magnitude larger.
            double slack = 2.0 * sc.eps_inner +
                           10.0 * (settings.abs_gap_tol +
                                   settings.rel_gap_tol * std::abs(last_pi));
            if (it.pi < last_pi - slack) {
                std::ostringstream msg;
                msg << "harvest margin fell from " << last_pi << " to "
                    << it.pi << " at iteration " << iter;
                throw Error(ErrorCode::NonMonotone, msg.str());
            }
        }
        double diff = std::abs(it.pi - last_pi);
        last_pi = it.pi;
        run.iterate = std::move(it);
        run.trace.push_back(last_pi);
        prev = run.iterate.rho_bar;
        if (diff <= sc.eps_inner) {
            run.converged = true;
            break;
        }
    }
    return run;
}

double harvest_margin(const Scenario& sc, const Schedule& sch,
                      const LargeScaleState& ls,
                      const std::vector<double>& rho_bar) {
    const std::vector<double> targets = harvest_targets(sc);
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sc.num_users(); ++k) {
        if (targets[k] <= 0.0) continue;
        double total = 0.0;
        for (int n = 0; n < sc.num_slots; ++n) {
            double share = sch.effective(n, k);
            if (share <= 0.0) continue;
            const LinkState& st = ls.at(n, k);
            total += avg_harvest_bound(sc.eh_mode, sc.eh.eta, share,
                                       sc.tx_power[k], rho_bar[n],
                                       sc.panel_nx, sc.panel_ny, st.beta_bu,
                                       st.beta_ku);
        }
        margin = std::min(margin, total / targets[k]);
    }
    return margin;
}

}  // namespace irsuav
