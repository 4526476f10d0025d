#include "rate.hpp"

#include <cmath>
#include <complex>

#include "errors.hpp"
#include "phase.hpp"

namespace irsuav {

PsiCoefficients psi(const Scenario& sc, int user, double rho_bar,
                    double beta_kb) {
    if (user < 0 || user >= sc.num_users())
        throw Error(ErrorCode::BadParameter, "psi: user index out of range");
    if (rho_bar < 0.0 || rho_bar > 1.0)
        throw Error(ErrorCode::BadParameter, "psi: rho_bar outside [0, 1]");
    const double mx = sc.panel_nx, my = sc.panel_ny;
    const double kbu = sc.k_bu;
    const double kku = sc.k_ku[user];
    const double kkb = sc.k_kb[user];
    const double den_u = (kku + 1.0) * (kbu + 1.0);
    const double r2 = rho_bar * rho_bar;
    PsiCoefficients p;
    p.psi1 = kku * kbu * mx * mx * my * my * r2 / den_u;
    p.psi2 = r2 * (kku + kbu + 1.0) * mx * my / den_u;
    p.psi3 = 2.0 * mx * my * rho_bar *
             std::sqrt(kkb * kku * kbu * beta_kb / ((kkb + 1.0) * den_u));
    p.psi4 = kkb / (kkb + 1.0);
    return p;
}

double snr_gain(const Scenario& sc, int user) {
    if (user < 0 || user >= sc.num_users())
        throw Error(ErrorCode::BadParameter, "snr_gain: user index out of range");
    return sc.tx_power[user] / sc.noise_power_w();
}

double gamma_bar(const PsiCoefficients& p, double beta_kb, double s, double g,
                 double t) {
    const double arg =
        (p.psi1 + p.psi2) * t * t + p.psi3 * t + p.psi4 * beta_kb;
    return s * std::log2(1.0 + g * arg);
}

double gamma_bar_derivative(const PsiCoefficients& p, double beta_kb, double s,
                            double g, double t) {
    const double arg =
        (p.psi1 + p.psi2) * t * t + p.psi3 * t + p.psi4 * beta_kb;
    return s * g * (2.0 * (p.psi1 + p.psi2) * t + p.psi3) /
           ((1.0 + g * arg) * std::log(2.0));
}

double psi_linearized(const PsiCoefficients& p, double beta_kb, double s,
                      double g, double t, double t_prev) {
    return gamma_bar(p, beta_kb, s, g, t_prev) +
           gamma_bar_derivative(p, beta_kb, s, g, t_prev) * (t - t_prev);
}

double b_squared_optimal(const Scenario& sc, const LinkState& st, int user,
                         double rho_bar) {
    const double mx = sc.panel_nx, my = sc.panel_ny;
    const double kbu = sc.k_bu;
    const double kku = sc.k_ku[user];
    const double kkb = sc.k_kb[user];
    const double direct = kkb * st.beta_kb / (kkb + 1.0);
    const double cascade = rho_bar * rho_bar * mx * mx * my * my * kku * kbu *
                           st.beta_bu * st.beta_ku /
                           ((kku + 1.0) * (kbu + 1.0));
    // Phase alignment makes the two LoS amplitudes add coherently.
    return direct + 2.0 * std::sqrt(direct * cascade) + cascade;
}

namespace {
double rate_bound_from_b2(const Scenario& sc, const LinkState& st, int user,
                          double rho_bar, double s, double b2) {
    const double kbu = sc.k_bu;
    const double kku = sc.k_ku[user];
    const double kkb = sc.k_kb[user];
    const double arg = b2 + st.beta_kb / (kkb + 1.0) +
                       rho_bar * rho_bar * (kku + kbu + 1.0) * sc.panel_nx *
                           sc.panel_ny * st.beta_bu * st.beta_ku /
                           ((kku + 1.0) * (kbu + 1.0));
    return s * std::log2(1.0 + snr_gain(sc, user) * arg);
}
}  // namespace

double rate_bound(const Scenario& sc, const LinkState& st, int user,
                  double rho_bar, double s,
                  const std::vector<double>& phases) {
    const double b2 = std::norm(b_los_combined(sc, st, user, rho_bar, phases));
    return rate_bound_from_b2(sc, st, user, rho_bar, s, b2);
}

double rate_bound(const Scenario& sc, const LinkState& st, int user,
                  double rho_bar, double s) {
    return rate_bound_from_b2(sc, st, user, rho_bar, s,
                              b_squared_optimal(sc, st, user, rho_bar));
}

}  // namespace irsuav
