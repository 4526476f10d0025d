#pragma once

#include "channel.hpp"
#include "reflection.hpp"
#include "scenario.hpp"
#include "scheduling.hpp"
#include "trajectory.hpp"

#include <vector>

namespace irsuav {

// Element phases per (slot, user) pair that carries schedule share, aligned
// to the direct link for the slot geometry. Pairs without share stay empty.
struct PhaseSchedule {
    std::vector<std::vector<std::vector<double>>> phases;  // [slot][user]
};

// One implementable operating point: who transmits when, where the platform
// flies, how the surface splits its power, the aligned element phases, and
// the spend bound kappa the point achieves (max over users of scheduled
// transmit energy, J).
struct DecisionState {
    Schedule schedule;
    Kinematics kin;
    std::vector<double> rho_bar;
    PhaseSchedule phases;
    double kappa = 0.0;
};

// Worst violation of each service constraint at a state, recomputed from the
// closed forms alone (no solver artifacts). Demand rows are relative to the
// demand, box rows are plain excess, kinematic rows relative to their cap
// (position residuals in meters). Positive means violated.
struct ConstraintAudit {
    double spend = 0.0;            // user energy above kappa, /kappa
    double harvest = 0.0;          // missing harvested energy, /target
    double rate = 0.0;             // missing rate, /demand
    double sharing = 0.0;          // slot share sum above one
    double share_box = 0.0;        // share outside [0, 1]
    double phase_range = 0.0;      // element phase outside [0, 2pi], /2pi
    double amplitude_box = 0.0;    // reflection amplitude outside [0, 1]
    double endpoints = 0.0;        // start/end displacement, m
    double position_update = 0.0;  // update-equation residual, m
    double accel = 0.0;            // acceleration excess, /a_max
    double speed = 0.0;            // speed excess, /v_max
    std::vector<double> no_fly;    // per zone: intrusion depth, /radius

    double worst() const;
};

// kappa implied by a schedule: max over users of the scheduled transmit
// energy. Works on relaxed shares and rounded blocks alike.
double spend_bound(const Scenario& sc, const Schedule& sch);

// Recomputes every constraint of the full problem at the state. Pure audit:
// never throws on violations, just reports them.
ConstraintAudit evaluate_state(const DecisionState& st, const Scenario& sc);

// Aligned phases for every pair with positive share at the given geometry.
PhaseSchedule align_phases(const Scenario& sc, const Schedule& sch,
                           const LargeScaleState& ls);

struct OuterIteration {
    double kappa = 0.0;  // spend bound of this round's schedule, J
    double chi = 0.0;    // rate margin after the trajectory step
    double pi = 0.0;     // harvest margin after the reflection step
    int trajectory_iters = 0;
    int reflection_iters = 0;
    double seconds_scheduling = 0.0;
    double seconds_trajectory = 0.0;
    double seconds_reflection = 0.0;
    double seconds_phases = 0.0;
};

struct RunReport {
    std::vector<OuterIteration> iterations;
    bool converged = false;
    double kappa_relaxed = 0.0;  // final relaxed-schedule spend bound, J
    double kappa_rounded = 0.0;  // after block rounding, J
    ScheduleAudit rounding;      // shortfalls introduced by rounding
    ConstraintAudit final_audit;
};

struct RunResult {
    DecisionState state;
    RunReport report;
};

// The alternating refinement: each round recomputes the slot terms at the
// current geometry, re-solves the allocation, then runs the trajectory and
// reflection refinements. Stops when the spend bound settles to eps_outer
// (relative) or max_outer_iters rounds. The schedule is rounded to blocks
// once, at the end, and the returned state carries the rounded schedule; the
// report keeps both spend bounds and a full constraint audit.
// Throws BadParameter for an invalid scenario, NonMonotone if the spend
// bound rises beyond solver noise between rounds, and forwards stage errors
// with the round and stage prepended.
RunResult alternating_optimize(const Scenario& sc);

}  // namespace irsuav
