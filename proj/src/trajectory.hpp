#pragma once

#include "channel.hpp"
#include "conic/solver.hpp"
#include "scenario.hpp"
#include "scheduling.hpp"

#include <vector>

namespace irsuav {

// One accepted point of the trajectory refinement: positions/velocities plus
// the link-gain slacks of the convex subproblem. u approximates the
// panel-BS gain per slot, r and t the per-user gain and the cascade
// geometric mean ([slot * K + user], zeros where the user is idle). chi is
// the weighted rate margin: min over demanding users of (sum_n share *
// rate bound) / required rate, so chi >= 1 means every rate demand holds.
struct TrajectoryIterate {
    Kinematics kin;
    std::vector<double> u;
    std::vector<double> r;
    std::vector<double> t;
    double chi = 0.0;
};

// Variable indices of the subproblem, for solution extraction and tests.
// Layout: q[1..N] coords, v[0..N-1] coords, u per busy slot, then (r, t)
// per scheduled (slot, user) pair in slot-major order, chi last. The link
// variables are dimensionless: each is measured in units of the matching
// pathloss at the expansion trajectory (value 1 reproduces that point),
// which keeps the cone blocks near unit scale. The scales convert back.
struct TrajectoryLayout {
    int num_slots = 0;
    int num_users = 0;
    std::vector<int> u_var;  // per slot, -1 when idle
    std::vector<int> r_var;  // [slot * K + user], -1 when unscheduled
    std::vector<int> t_var;
    int chi_var = -1;
    std::vector<double> u_scale;  // pathloss at prev, zero where idle
    std::vector<double> r_scale;
    std::vector<double> t_scale;

    int q_var(int n, int d) const { return (n - 1) * 3 + d; }  // n in 1..N
    int v_var(int n, int d) const { return num_slots * 3 + n * 3 + d; }
};

// Convex subproblem around `prev`: maximize chi subject to the kinematic
// rows (endpoint, position update, speed, acceleration, altitude bounds),
// no-fly rows linearized at prev, concave tangent bounds tying u and r to
// the true pathloss of q (they lower-bound it globally, so any feasible
// point keeps u <= gain), the cone u*r >= t^2, the harvest rows in the
// link slack of the configured eh mode, and the per-user rate rows with the
// slot rate linearized in t around its value at prev. Throws
// DegenerateExpansion if prev passes within 1e-3 m of the BS or a scheduled
// user. Shares are read through Schedule::effective; shares at or below
// 1e-4 keep their expansion-point contribution as a row constant instead of
// slack variables (interior-point share dust otherwise adds flat directions
// that stall the solve).
conic::Program build_trajectory_subproblem(const Kinematics& prev,
                                           const Schedule& sch,
                                           const std::vector<double>& rho_bar,
                                           const Scenario& sc,
                                           TrajectoryLayout* layout = nullptr);

struct TrajectoryRun {
    TrajectoryIterate iterate;
    std::vector<double> trace;  // chi per accepted iteration
    bool converged = false;     // |chi_i - chi_{i-1}| <= eps_inner reached
};

// Iterates build + solve from `init` until the chi improvement drops to
// sc.eps_inner or sc.max_inner_iters is hit. Throws BadParameter when init
// fails check_kinematics, SubproblemInfeasible / NumericalFailure with the
// iteration index when a solve fails, and NonMonotone if chi decreases by
// more than ten times the solver gap tolerance.
TrajectoryRun sca_trajectory(const Kinematics& init, const Schedule& sch,
                             const std::vector<double>& rho_bar,
                             const Scenario& sc);

// True weighted rate margin of a trajectory: min over users with a rate
// demand of (sum_n share * slot rate bound) / min_rate, evaluated with the
// closed-form slot rate (no linearization).
double rate_margin(const Scenario& sc, const Schedule& sch,
                   const std::vector<double>& rho_bar, const Kinematics& kin);

}  // namespace irsuav
