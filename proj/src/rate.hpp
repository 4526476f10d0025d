#pragma once

#include <vector>

#include "channel.hpp"
#include "scenario.hpp"

namespace irsuav {

// Coefficients of the average-rate SNR polynomial in the cascade pathloss
// variable t = sqrt(beta_bu * beta_ku):
//   snr(t) = g * ((psi1 + psi2) t^2 + psi3 t + psi4 * beta_kb)
// with g = P_k / sigma^2. psi1 is the aligned LoS*LoS power, psi2 collects
// the fading cross-variances, psi3 the direct/cascade beat, psi4 the direct
// LoS share.
struct PsiCoefficients {
    double psi1 = 0, psi2 = 0, psi3 = 0, psi4 = 0;
};

PsiCoefficients psi(const Scenario& sc, int user, double rho_bar,
                    double beta_kb);

double snr_gain(const Scenario& sc, int user);  // P_k / sigma^2

// Average rate of user k in a slot fraction s (bits/s/Hz).
double gamma_bar(const PsiCoefficients& p, double beta_kb, double s, double g,
                 double t);

double gamma_bar_derivative(const PsiCoefficients& p, double beta_kb, double s,
                            double g, double t);

// First-order expansion of gamma_bar around t_prev. Equals gamma_bar at the
// expansion point; wherever gamma_bar is concave in t the tangent lies above
// it (a supergradient), which keeps the iterative scheme anchored exactly.
double psi_linearized(const PsiCoefficients& p, double beta_kb, double s,
                      double g, double t, double t_prev);

// Squared magnitude of the combined LoS amplitude under aligned phases.
double b_squared_optimal(const Scenario& sc, const LinkState& st, int user,
                         double rho_bar);

// Jensen upper bound on the average rate at the given reflection phases,
// including the direct-link fading term.
double rate_bound(const Scenario& sc, const LinkState& st, int user,
                  double rho_bar, double s, const std::vector<double>& phases);

// Same bound at aligned (optimal) phases, via the closed-form |b|^2.
double rate_bound(const Scenario& sc, const LinkState& st, int user,
                  double rho_bar, double s);

}  // namespace irsuav
