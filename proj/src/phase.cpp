#include "phase.hpp"

#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace irsuav {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0) r += kTwoPi;
    if (r >= kTwoPi) r -= kTwoPi;
    return r;
}
}  // namespace

double theta_geometry(const GeometryAngles& ang, int m_i, int m_j) {
    return (m_i - 1) * ang.sin_theta * ang.cos_phi +
           (m_j - 1) * ang.sin_theta * ang.sin_phi +
           (m_i - 1) * ang.sin_omega * ang.cos_zeta +
           (m_j - 1) * ang.sin_omega * ang.sin_zeta;
}

std::vector<double> theta_geometry_all(const GeometryAngles& ang, int mx,
                                       int my) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(mx) * my);
    for (int i = 1; i <= mx; ++i)
        for (int j = 1; j <= my; ++j) out.push_back(theta_geometry(ang, i, j));
    return out;
}

std::vector<double> optimal_phases(const Scenario& sc, const LinkState& st) {
    const double f_over_c = sc.carrier_hz / kSpeedOfLight;
    const double rho = sc.wave_number();
    const double base = kTwoPi * f_over_c * (st.d_bu - st.d_ku) -
                        kTwoPi * f_over_c * st.d_kb;
    std::vector<double> beta =
        theta_geometry_all(st.ang, sc.panel_nx, sc.panel_ny);
    for (double& b : beta) b = wrap_2pi(base + rho * b);
    return beta;
}

std::complex<double> b_los_combined(const Scenario& sc, const LinkState& st,
                                    int user, double rho_bar,
                                    const std::vector<double>& phases) {
    const int m = sc.num_elements();
    if (static_cast<int>(phases.size()) != m)
        throw Error(ErrorCode::BadParameter,
                    "b_los_combined: phase vector length mismatch");
    const LosChannels los = los_channels(sc, st);
    const double kbu = sc.k_bu;
    const double kku = sc.k_ku[user];
    const double kkb = sc.k_kb[user];
    const std::complex<double> f1 =
        std::sqrt(kkb * st.beta_kb / (kkb + 1.0)) * los.h_kb;
    const double casc_amp =
        rho_bar * std::sqrt(kbu * kku * st.beta_bu * st.beta_ku /
                            ((kbu + 1.0) * (kku + 1.0)));
    std::complex<double> sum = 0.0;
    for (int i = 0; i < m; ++i)
        sum += los.h_ku[i] * std::polar(1.0, phases[i]) * los.h_bu[i];
    return f1 + casc_amp * sum;
}

double alignment_residual(const Scenario& sc, const LinkState& st,
                          const std::vector<double>& phases) {
    const int m = sc.num_elements();
    if (static_cast<int>(phases.size()) != m)
        throw Error(ErrorCode::BadParameter,
                    "alignment_residual: phase vector length mismatch");
    const LosChannels los = los_channels(sc, st);
    const double direct_arg = std::arg(los.h_kb);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        const double summand_arg =
            std::arg(los.h_ku[i] * std::polar(1.0, phases[i]) * los.h_bu[i]);
        const double diff =
            std::abs(std::remainder(summand_arg - direct_arg, kTwoPi));
        worst = std::max(worst, diff);
    }
    return worst;
}

double b_abs_aligned(const Scenario& sc, const LinkState& st, int user,
                     double rho_bar) {
    const double kbu = sc.k_bu;
    const double kku = sc.k_ku[user];
    const double kkb = sc.k_kb[user];
    const double f1 = std::sqrt(kkb * st.beta_kb / (kkb + 1.0));
    const double f2 = rho_bar * sc.num_elements() *
                      std::sqrt(kbu * kku * st.beta_bu * st.beta_ku /
                                ((kbu + 1.0) * (kku + 1.0)));
    return f1 + f2;
}

}  // namespace irsuav
