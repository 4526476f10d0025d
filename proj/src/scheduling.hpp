#pragma once

#include "channel.hpp"
#include "conic/solver.hpp"
#include "scenario.hpp"

#include <string>
#include <vector>

namespace irsuav {

// Per-slot time shares. `s` holds the relaxed fractions in [0,1]; after
// rounding, `blocks` holds integer fading-block counts out of
// blocks_per_slot with the same [slot * num_users + user] layout.
struct Schedule {
    int num_slots = 0;
    int num_users = 0;
    int blocks_per_slot = 1;
    std::vector<double> s;
    std::vector<int> blocks;

    double at(int slot, int user) const {
        return s[static_cast<size_t>(slot) * num_users + user];
    }
    int blocks_at(int slot, int user) const {
        return blocks[static_cast<size_t>(slot) * num_users + user];
    }
    bool rounded() const { return !blocks.empty(); }

    // Fraction implied by the block counts; falls back to the relaxed value
    // when the schedule has not been rounded.
    double effective(int slot, int user) const {
        if (blocks.empty()) return at(slot, user);
        return blocks_at(slot, user) / static_cast<double>(blocks_per_slot);
    }
};

// Coefficients of a fully allocated slot (share = 1) at the current
// trajectory and reflection amplitudes:
//   rate:    rate-bound contribution of the slot, bits/s/Hz
//   harvest: harvested-energy bound contribution, J
struct ScheduleTerms {
    int num_slots = 0;
    int num_users = 0;
    std::vector<double> rate;     // [slot * num_users + user]
    std::vector<double> harvest;  // [slot * num_users + user]

    double rate_at(int slot, int user) const {
        return rate[static_cast<size_t>(slot) * num_users + user];
    }
    double harvest_at(int slot, int user) const {
        return harvest[static_cast<size_t>(slot) * num_users + user];
    }
};

ScheduleTerms schedule_terms(const Scenario& sc, const LargeScaleState& ls,
                             const std::vector<double>& rho_bar);

// Per-user harvest requirement e_k in joules: the configured targets when
// present, otherwise the minimum average input that keeps the harvesting
// circuit's output at the panel's own consumption (zero when the per-element
// power is zero).
std::vector<double> harvest_targets(const Scenario& sc);

// Transmit energy of a fully allocated slot for one user, J.
double slot_energy(const Scenario& sc, int user);

// The allocation program: variables s_k[n] in [0, 1] laid out slot-major
// (slot * K + user) followed by the spend bound kappa; maximizes -kappa
// subject to per-user spend rows (sum_n s E_k <= kappa), harvest rows
// (sum_n s * harvest >= e_k), rate rows (sum_n s * rate >= R_min,k) and the
// per-slot sharing cap (sum_k s <= 1).
conic::Program scheduling_program(const Scenario& sc,
                                  const ScheduleTerms& terms);

struct SchedulingResult {
    Schedule schedule;          // relaxed shares
    double kappa = 0.0;         // max per-user transmit energy, J
    conic::SolveResult stats;
};

// Solves the allocation program, then re-solves with kappa pinned at its
// optimum and the total share minimized. The second pass is a deterministic
// tie-break over the (often wide) optimal face: it concentrates each user on
// its best slots, which keeps block rounding cheap. Throws
// SubproblemInfeasible with a per-user reachability report when the demands
// cannot be met, NumericalFailure if the solve stalls.
SchedulingResult solve_scheduling(const Scenario& sc,
                                  const ScheduleTerms& terms);

// Nearest-integer block counts N = round(L*s) per slot. When a slot's counts
// exceed the block budget L, users take their quota in largest-remainder
// order (ties to the lower user index) and the tail is capped by whatever
// budget remains, so sum_k N <= L always holds.
Schedule round_schedule(const Schedule& relaxed, int blocks_per_slot);

// Shortfall of a rounded schedule against the harvest and rate requirements,
// both relative to the requirement (zero where nothing is required).
struct ScheduleAudit {
    std::vector<double> harvest_shortfall;  // per user
    std::vector<double> rate_shortfall;     // per user
    double kappa = 0.0;       // spend bound of the audited schedule
    bool repaired = false;    // a repair re-solve was applied
    std::string note;

    double worst() const;
};

ScheduleAudit audit_schedule(const Scenario& sc, const ScheduleTerms& terms,
                             const Schedule& sch);

// solve + round, with at most one repair pass: if any user's rounded harvest
// or rate falls more than 1% short, the program is re-solved with that
// user's horizon total floored at the next whole block and rounded again.
// Any remaining shortfall stays visible in the audit.
struct RoundedScheduling {
    SchedulingResult relaxed;
    Schedule rounded;
    ScheduleAudit audit;
};

RoundedScheduling solve_and_round(const Scenario& sc,
                                  const ScheduleTerms& terms);

// slot x user matrix of block counts (or relaxed shares when not rounded).
std::string schedule_csv(const Schedule& sch);

}  // namespace irsuav
