#pragma once

#include "channel.hpp"
#include "conic/solver.hpp"
#include "scenario.hpp"
#include "scheduling.hpp"

#include <vector>

namespace irsuav {

// One accepted point of the reflection refinement: a per-slot amplitude in
// [0,1] and the objective Pi, the minimum over demanding users of
// (sum_n harvested energy) / target. Slots without a meaningful share keep
// their input amplitude.
struct ReflectionIterate {
    std::vector<double> rho_bar;
    double pi = 0.0;
};

// Variable indices of the subproblem. Only slots with a meaningful share
// get an amplitude variable plus the squared-amplitude slack w >= rho^2;
// pi is last.
struct ReflectionLayout {
    int num_slots = 0;
    std::vector<int> rho_var;  // per slot, -1 when idle
    std::vector<int> w_var;
    int pi_var = -1;
};

// Convex subproblem around prev_rho: maximize pi subject to
//  - per-user harvest rows: sum_n share * power * (1 - w[n]) * gain terms,
//    normalized by the user's target, at least pi (exact concave lowering
//    through w >= rho^2, so no approximation on the harvest side);
//  - per-user rate rows with the slot rate linearized in rho at prev_rho
//    (analytic derivative through the SNR polynomial), normalized by the
//    rate demand;
//  - box bounds rho in [0,1].
// The objective carries a -1e-8 * sum(w) pull so amplitudes on slots with
// no binding pressure settle at the harvest-greedy end instead of an
// arbitrary interior point.
// The rate linearization is trusted only after a per-instance concavity
// scan of the slot rate in rho; where the scan fails the builder swaps in
// a linearized rho^2 auxiliary for that pair and reports it (see
// ReflectionRun::fallback_pairs).
conic::Program build_reflection_subproblem(const std::vector<double>& prev_rho,
                                           const Schedule& sch,
                                           const LargeScaleState& ls,
                                           const Scenario& sc,
                                           ReflectionLayout* layout = nullptr,
                                           int* fallback_pairs = nullptr);

struct ReflectionRun {
    ReflectionIterate iterate;
    std::vector<double> trace;  // pi per accepted iteration
    bool converged = false;
    int fallback_pairs = 0;  // pairs where the concavity scan failed
};

// Iterates build + solve from init_rho until the pi improvement drops to
// sc.eps_inner or sc.max_inner_iters is hit. The margin of init_rho anchors
// the first convergence check. Throws BadParameter when init_rho leaves
// [0,1] or has the wrong length, SubproblemInfeasible / NumericalFailure
// with the iteration index when a solve fails, and NonMonotone if pi
// decreases by more than twice the inner tolerance plus solver noise (the
// re-tangented rate rows can cut the previous amplitudes off by the
// curvature debt of the last move, so exact monotonicity is not enforced).
// When no user has a harvest target the input is already optimal and is
// returned as is with pi = 0.
ReflectionRun sca_reflection(const std::vector<double>& init_rho,
                             const Schedule& sch, const LargeScaleState& ls,
                             const Scenario& sc);

// True weighted harvest margin: min over users with a positive target of
// (sum_n closed-form average harvest) / target. Infinity when no user has
// a target.
double harvest_margin(const Scenario& sc, const Schedule& sch,
                      const LargeScaleState& ls,
                      const std::vector<double>& rho_bar);

}  // namespace irsuav
