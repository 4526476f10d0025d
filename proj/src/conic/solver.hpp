#pragma once

#include "conic/program.hpp"

#include <string>
#include <vector>

namespace irsuav::conic {

enum class SolveStatus {
    Optimal,          // full-tolerance KKT point found
    Infeasible,       // primal infeasibility certificate
    IterationLimit,
    NumericalFailure, // also covers dual infeasibility (unbounded objective)
};

const char* status_name(SolveStatus s);

struct SolveSettings {
    double feas_tol = 1e-8;      // primal/dual residual tolerance
    double abs_gap_tol = 1e-8;
    double rel_gap_tol = 1e-8;
    int max_iters = 100;

    // Interior-point internals
    double static_reg = 7e-8;    // KKT regularization
    int refine_iters = 9;        // max iterative-refinement rounds per solve
    double refine_stop_ratio = 6.0;
    double linsys_acc = 1e-14;
    double step_back = 0.99;
    double step_min = 1e-6;
    double step_max = 0.999;
    double sigma_min = 1e-4;
    double sigma_max = 1.0;
    double safeguard = 500.0;    // restore best iterate if pres grows this much
    int equil_iters = 3;

    // Reduced tolerances used only to classify stalled exits in the detail
    // string; they never produce an Optimal status.
    double feas_tol_reduced = 1e-4;
    double abs_gap_tol_reduced = 5e-5;
    double rel_gap_tol_reduced = 5e-5;
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;       // values of the program variables
    double objective = 0.0;      // maximize sense, includes objective constant
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double duality_gap = 0.0;    // absolute embedded gap s'z
    double rel_gap = 0.0;
    int iterations = 0;
    std::string detail;
};

// Deterministic: identical program and settings give bitwise-identical primal
// values. Single-threaded. The optional warm-start point is validated for
// shape only; the homogeneous embedding re-initializes from problem data.
SolveResult solve(const Program& p, const SolveSettings& settings = {});
SolveResult solve(const Program& p, const std::vector<double>& warm_start,
                  const SolveSettings& settings = {});

}  // namespace irsuav::conic
