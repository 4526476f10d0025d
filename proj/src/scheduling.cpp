#include "scheduling.hpp"

#include "energy.hpp"
#include "errors.hpp"
#include "rate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace irsuav {

namespace {

size_t cell(int slot, int user, int num_users) {
    return static_cast<size_t>(slot) * num_users + user;
}

void check_terms(const Scenario& sc, const ScheduleTerms& terms) {
    if (terms.num_users != sc.num_users())
        throw Error(ErrorCode::BadParameter,
                    "schedule terms built for a different user count");
    size_t want =
        static_cast<size_t>(terms.num_slots) * terms.num_users;
    if (terms.num_slots <= 0 || terms.rate.size() != want ||
        terms.harvest.size() != want)
        throw Error(ErrorCode::BadParameter, "schedule terms have wrong shape");
}

Schedule extract_schedule(const Scenario& sc, const ScheduleTerms& terms,
                          const std::vector<double>& x) {
    Schedule out;
    out.num_slots = terms.num_slots;
    out.num_users = terms.num_users;
    out.blocks_per_slot = sc.blocks_per_slot;
    out.s.resize(static_cast<size_t>(terms.num_slots) * terms.num_users);
    for (size_t i = 0; i < out.s.size(); ++i)
        out.s[i] = std::clamp(x[i], 0.0, 1.0);
    return out;
}

// Full-allocation reachability report used when the program is infeasible.
std::string infeasibility_report(const Scenario& sc,
                                 const ScheduleTerms& terms) {
    const std::vector<double> targets = harvest_targets(sc);
    std::ostringstream msg;
    msg << "scheduling demands cannot be met at the current trajectory";
    bool blamed = false;
    for (int k = 0; k < terms.num_users; ++k) {
        double best_h = 0, best_r = 0;
        for (int n = 0; n < terms.num_slots; ++n) {
            best_h += terms.harvest_at(n, k);
            best_r += terms.rate_at(n, k);
        }
        if (best_h < targets[k] * (1 - 1e-9)) {
            msg << "; user " << k << " harvests at most " << best_h
                << " J of the " << targets[k] << " J required";
            blamed = true;
        }
        if (best_r < sc.min_rate[k] * (1 - 1e-9)) {
            msg << "; user " << k << " reaches at most " << best_r
                << " of the " << sc.min_rate[k] << " bits/s/Hz required";
            blamed = true;
        }
    }
    if (!blamed)
        msg << "; every demand is reachable alone but they conflict across "
               "the per-slot sharing cap";
    return msg.str();
}

// Per-user floors on the horizon total, used by the rounding repair pass.
struct TotalFloor {
    int user = 0;
    double total = 0.0;
};

void add_floors(conic::Program& p, const ScheduleTerms& terms,
                const std::vector<TotalFloor>& floors) {
    for (const TotalFloor& f : floors) {
        conic::LinExpr e;
        for (int n = 0; n < terms.num_slots; ++n)
            e.add(static_cast<int>(cell(n, f.user, terms.num_users)), 1.0);
        p.add_ge(e, f.total);
    }
}

// The spend-minimizing objective leaves a wide optimal face whenever some
// users sit below the worst spend; the barrier method then centers on that
// face and smears their shares thinly across the horizon, which block
// rounding inflates. A second solve pins kappa at its optimum and minimizes
// the total share, nudged slightly toward the high-rate slots so the
// minimizer is a unique concentrated vertex even where the total alone is
// still degenerate (e.g. a repair floor fixing a user's total exactly).
SchedulingResult solve_lexicographic(const Scenario& sc,
                                     const ScheduleTerms& terms,
                                     const std::vector<TotalFloor>& floors) {
    const int kappa_var = terms.num_slots * terms.num_users;

    conic::Program p1 = scheduling_program(sc, terms);
    add_floors(p1, terms, floors);
    conic::SolveResult r1 = conic::solve(p1);
    if (r1.status == conic::SolveStatus::Infeasible)
        throw Error(ErrorCode::SubproblemInfeasible,
                    infeasibility_report(sc, terms));
    if (r1.status != conic::SolveStatus::Optimal)
        throw Error(ErrorCode::NumericalFailure,
                    "scheduling solve stalled: " + r1.detail);

    SchedulingResult out;
    out.kappa = r1.x[kappa_var];
    out.stats = std::move(r1);

    double rate_max = 0.0;
    for (double r : terms.rate) rate_max = std::max(rate_max, r);
    conic::Program p2 = scheduling_program(sc, terms);
    add_floors(p2, terms, floors);
    p2.set_upper(kappa_var,
                 out.kappa + std::max(1e-8, 1e-6 * std::abs(out.kappa)));
    conic::LinExpr total;
    for (int n = 0; n < terms.num_slots; ++n)
        for (int k = 0; k < terms.num_users; ++k) {
            double nudge = rate_max > 0
                               ? 1e-4 * terms.rate_at(n, k) / rate_max
                               : 0.0;
            total.add(static_cast<int>(cell(n, k, terms.num_users)),
                      nudge - 1.0);
        }
    p2.maximize(total);
    conic::SolveResult r2 = conic::solve(p2);
    if (r2.status == conic::SolveStatus::Optimal) {
        out.schedule = extract_schedule(sc, terms, r2.x);
        out.stats.detail += "; tie-break solve: " +
                            std::to_string(r2.iterations) + " iterations";
    } else {
        out.schedule = extract_schedule(sc, terms, out.stats.x);
        out.stats.detail += "; tie-break solve failed (" + r2.detail +
                            "), centered shares kept";
    }
    return out;
}

}  // namespace

ScheduleTerms schedule_terms(const Scenario& sc, const LargeScaleState& ls,
                             const std::vector<double>& rho_bar) {
    if (ls.num_slots != sc.num_slots || ls.num_users != sc.num_users())
        throw Error(ErrorCode::BadParameter,
                    "link state does not match the scenario");
    if (static_cast<int>(rho_bar.size()) != sc.num_slots)
        throw Error(ErrorCode::BadParameter,
                    "need one reflection amplitude per slot");
    ScheduleTerms t;
    t.num_slots = sc.num_slots;
    t.num_users = sc.num_users();
    t.rate.resize(static_cast<size_t>(t.num_slots) * t.num_users);
    t.harvest.resize(t.rate.size());
    for (int n = 0; n < t.num_slots; ++n) {
        for (int k = 0; k < t.num_users; ++k) {
            const LinkState& st = ls.at(n, k);
            double tbar = std::sqrt(st.beta_bu * st.beta_ku);
            PsiCoefficients ps = psi(sc, k, rho_bar[n], st.beta_kb);
            t.rate[cell(n, k, t.num_users)] =
                gamma_bar(ps, st.beta_kb, 1.0, snr_gain(sc, k), tbar);
            t.harvest[cell(n, k, t.num_users)] = avg_harvest_bound(
                sc.eh_mode, sc.eh.eta, 1.0, sc.tx_power[k], rho_bar[n],
                sc.panel_nx, sc.panel_ny, st.beta_bu, st.beta_ku);
        }
    }
    return t;
}

std::vector<double> harvest_targets(const Scenario& sc) {
    int k = sc.num_users();
    if (!sc.harvest_target.empty()) {
        if (static_cast<int>(sc.harvest_target.size()) != k)
            throw Error(ErrorCode::BadParameter,
                        "harvest targets do not match the user count");
        return sc.harvest_target;
    }
    double e_min = panel_activation_energy(sc.panel_nx, sc.panel_ny, sc.eh);
    if (e_min <= 0.0) return std::vector<double>(k, 0.0);
    return std::vector<double>(k, min_input_threshold(e_min, sc.eh));
}

double slot_energy(const Scenario& sc, int user) {
    return sc.slot_duration * sc.tx_power[user];
}

conic::Program scheduling_program(const Scenario& sc,
                                  const ScheduleTerms& terms) {
    check_terms(sc, terms);
    const int N = terms.num_slots, K = terms.num_users;
    const std::vector<double> targets = harvest_targets(sc);

    conic::Program p;
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) p.add_var(0.0, 1.0);
    int kappa = p.add_var(0.0, std::numeric_limits<double>::infinity());
    p.maximize(conic::LinExpr::of(kappa, -1.0));

    for (int k = 0; k < K; ++k) {
        conic::LinExpr spend;
        double e_k = slot_energy(sc, k);
        for (int n = 0; n < N; ++n)
            spend.add(static_cast<int>(cell(n, k, K)), e_k);
        spend.add(kappa, -1.0);
        p.add_le(spend, 0.0);
    }
    for (int k = 0; k < K; ++k) {
        conic::LinExpr harvest;
        for (int n = 0; n < N; ++n)
            harvest.add(static_cast<int>(cell(n, k, K)),
                        terms.harvest_at(n, k));
        p.add_ge(harvest, targets[k]);
    }
    for (int k = 0; k < K; ++k) {
        conic::LinExpr rate;
        for (int n = 0; n < N; ++n)
            rate.add(static_cast<int>(cell(n, k, K)), terms.rate_at(n, k));
        p.add_ge(rate, sc.min_rate[k]);
    }
    for (int n = 0; n < N; ++n) {
        conic::LinExpr share;
        for (int k = 0; k < K; ++k)
            share.add(static_cast<int>(cell(n, k, K)), 1.0);
        p.add_le(share, 1.0);
    }
    return p;
}

SchedulingResult solve_scheduling(const Scenario& sc,
                                  const ScheduleTerms& terms) {
    return solve_lexicographic(sc, terms, {});
}

Schedule round_schedule(const Schedule& relaxed, int blocks_per_slot) {
    if (blocks_per_slot < 1)
        throw Error(ErrorCode::BadParameter,
                    "need at least one block per slot");
    const int L = blocks_per_slot;
    const int N = relaxed.num_slots, K = relaxed.num_users;
    Schedule out = relaxed;
    out.blocks_per_slot = L;
    out.blocks.assign(relaxed.s.size(), 0);

    std::vector<int> want(K);
    std::vector<int> order(K);
    for (int n = 0; n < N; ++n) {
        long total = 0;
        for (int k = 0; k < K; ++k) {
            double scaled = L * relaxed.at(n, k);
            want[k] = static_cast<int>(
                std::clamp<long>(std::lround(scaled), 0, L));
            total += want[k];
        }
        if (total <= L) {
            for (int k = 0; k < K; ++k)
                out.blocks[cell(n, k, K)] = want[k];
            continue;
        }
        // Over budget: serve quotas in largest-remainder order, ties to the
        // lower user index, capping the tail by the budget left.
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            double fa = L * relaxed.at(n, a);
            double fb = L * relaxed.at(n, b);
            return fa - std::floor(fa) > fb - std::floor(fb);
        });
        int left = L;
        for (int k : order) {
            int take = std::min(want[k], left);
            out.blocks[cell(n, k, K)] = take;
            left -= take;
        }
    }
    return out;
}

namespace {

// Post-repair polish: while some user's rounded harvest or rate still falls
// more than 1% short, grant one extra block at a time on the slot that buys
// the most of whatever that user lacks, within the per-slot budget. Rounding
// drops at most a fraction of a block per occupied slot, so this terminates
// after a handful of grants (hard-capped by the total budget left).
void topup_rounding(const Scenario& sc, const ScheduleTerms& terms,
                    Schedule& sch) {
    const int N = terms.num_slots, K = terms.num_users;
    const int L = sch.blocks_per_slot;
    const std::vector<double> targets = harvest_targets(sc);
    std::vector<int> leftover(N, L);
    int budget = 0;
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) leftover[n] -= sch.blocks_at(n, k);
        budget += leftover[n];
    }
    std::vector<double> got_h(K), got_r(K);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
            got_h[k] += sch.effective(n, k) * terms.harvest_at(n, k);
            got_r[k] += sch.effective(n, k) * terms.rate_at(n, k);
        }

    while (budget > 0) {
        int user = -1;
        double worst = 0.01;
        for (int k = 0; k < K; ++k) {
            double d = 0;
            if (targets[k] > 0)
                d = std::max(d, (targets[k] - got_h[k]) / targets[k]);
            if (sc.min_rate[k] > 0)
                d = std::max(d, (sc.min_rate[k] - got_r[k]) / sc.min_rate[k]);
            if (d > worst) {
                worst = d;
                user = k;
            }
        }
        if (user < 0) break;
        bool need_h = targets[user] > 0 &&
                      (targets[user] - got_h[user]) / targets[user] > 0.01;
        bool need_r = sc.min_rate[user] > 0 &&
                      (sc.min_rate[user] - got_r[user]) / sc.min_rate[user] >
                          0.01;
        int best = -1;
        double score = 0;
        for (int n = 0; n < N; ++n) {
            if (leftover[n] <= 0 || sch.blocks_at(n, user) >= L) continue;
            double v = 0;
            if (need_h) v += terms.harvest_at(n, user) / targets[user];
            if (need_r) v += terms.rate_at(n, user) / sc.min_rate[user];
            if (v > score) {
                score = v;
                best = n;
            }
        }
        if (best < 0 || score <= 0) break;
        sch.blocks[static_cast<size_t>(best) * K + user] += 1;
        leftover[best] -= 1;
        budget -= 1;
        got_h[user] += terms.harvest_at(best, user) / L;
        got_r[user] += terms.rate_at(best, user) / L;
    }
}

}  // namespace

double ScheduleAudit::worst() const {
    double w = 0;
    for (double v : harvest_shortfall) w = std::max(w, v);
    for (double v : rate_shortfall) w = std::max(w, v);
    return w;
}

ScheduleAudit audit_schedule(const Scenario& sc, const ScheduleTerms& terms,
                             const Schedule& sch) {
    check_terms(sc, terms);
    const std::vector<double> targets = harvest_targets(sc);
    ScheduleAudit a;
    a.harvest_shortfall.assign(terms.num_users, 0.0);
    a.rate_shortfall.assign(terms.num_users, 0.0);
    for (int k = 0; k < terms.num_users; ++k) {
        double got_h = 0, got_r = 0, spend = 0;
        for (int n = 0; n < terms.num_slots; ++n) {
            double s = sch.effective(n, k);
            got_h += s * terms.harvest_at(n, k);
            got_r += s * terms.rate_at(n, k);
            spend += s * slot_energy(sc, k);
        }
        if (targets[k] > 0)
            a.harvest_shortfall[k] =
                std::max(0.0, (targets[k] - got_h) / targets[k]);
        if (sc.min_rate[k] > 0)
            a.rate_shortfall[k] =
                std::max(0.0, (sc.min_rate[k] - got_r) / sc.min_rate[k]);
        a.kappa = std::max(a.kappa, spend);
    }
    return a;
}

RoundedScheduling solve_and_round(const Scenario& sc,
                                  const ScheduleTerms& terms) {
    RoundedScheduling out;
    out.relaxed = solve_scheduling(sc, terms);
    out.rounded = round_schedule(out.relaxed.schedule, sc.blocks_per_slot);
    out.audit = audit_schedule(sc, terms, out.rounded);
    if (out.audit.worst() <= 0.01) return out;

    // One repair pass: floor each shorted user's horizon total at the next
    // whole block above its relaxed total, so the re-rounded allocation
    // cannot lose that mass again.
    const int N = terms.num_slots, K = terms.num_users;
    const int L = sc.blocks_per_slot;
    std::vector<TotalFloor> floors;
    for (int k = 0; k < K; ++k) {
        if (out.audit.harvest_shortfall[k] <= 0.01 &&
            out.audit.rate_shortfall[k] <= 0.01)
            continue;
        double total = 0;
        for (int n = 0; n < N; ++n) total += out.relaxed.schedule.at(n, k);
        double floor_total = std::ceil(total * L - 1e-9) / L;
        floors.push_back({k, std::min(floor_total, static_cast<double>(N))});
    }
    try {
        out.relaxed = solve_lexicographic(sc, terms, floors);
    } catch (const Error&) {
        out.audit.note = "repair re-solve failed; keeping the first rounding";
        return out;
    }
    out.rounded = round_schedule(out.relaxed.schedule, sc.blocks_per_slot);
    topup_rounding(sc, terms, out.rounded);
    out.audit = audit_schedule(sc, terms, out.rounded);
    out.audit.repaired = true;
    if (out.audit.worst() > 0.01)
        out.audit.note = "shortfall above 1% remains after the repair pass";
    return out;
}

std::string schedule_csv(const Schedule& sch) {
    std::ostringstream os;
    os << "slot";
    for (int k = 0; k < sch.num_users; ++k) os << ",user" << k;
    os << "\n";
    char buf[32];
    for (int n = 0; n < sch.num_slots; ++n) {
        os << n;
        for (int k = 0; k < sch.num_users; ++k) {
            if (sch.rounded()) {
                os << "," << sch.blocks_at(n, k);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", sch.at(n, k));
                os << "," << buf;
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace irsuav
