#include "channel.hpp"

#include "errors.hpp"

#include <cmath>
#include <numbers>

namespace irsuav {

namespace {
constexpr double kDegenerateDist = 1e-3;  // meters
}  // namespace

GeometryAngles link_angles(const Vec3& bs, const Vec3& uav, const Vec3& user) {
    const double d_bu = (bs - uav).norm();
    const double d_ku = (user - uav).norm();
    if (d_bu < kDegenerateDist)
        throw Error(ErrorCode::DegenerateGeometry, "UAV on top of the BS");
    if (d_ku < kDegenerateDist)
        throw Error(ErrorCode::DegenerateGeometry, "UAV on top of a user");
    const double horiz_bu = horizontal_dist(bs, uav);
    const double horiz_ku = horizontal_dist(user, uav);

    GeometryAngles a;
    a.sin_theta = (bs.z() - uav.z()) / d_bu;
    a.sin_omega = uav.z() / d_ku;
    // Purely vertical links leave the azimuth undefined; zeroing both
    // components gives the broadside (uniform) array response.
    if (horiz_bu >= kDegenerateDist) {
        a.sin_phi = (uav.x() - bs.x()) / horiz_bu;
        a.cos_phi = (uav.y() - bs.y()) / horiz_bu;
    }
    if (horiz_ku >= kDegenerateDist) {
        a.sin_zeta = (user.x() - uav.x()) / horiz_ku;
        a.cos_zeta = (user.y() - uav.y()) / horiz_ku;
    }
    return a;
}

double pathloss(double beta0, double dist, double alpha) {
    return beta0 / std::pow(dist, alpha);
}

LargeScaleState compute_large_scale(const Kinematics& k, const Scenario& sc) {
    const int N = sc.num_slots;
    const int K = sc.num_users();
    if (k.pos.size() != static_cast<size_t>(N) + 1)
        throw Error(ErrorCode::BadParameter, "kinematics horizon mismatch");

    LargeScaleState ls;
    ls.num_slots = N;
    ls.num_users = K;
    ls.links.resize(static_cast<size_t>(N) * K);
    const double b0 = sc.beta0();
    for (int n = 0; n < N; ++n) {
        const Vec3& q = k.pos[static_cast<size_t>(n) + 1];
        for (int u = 0; u < K; ++u) {
            LinkState st;
            st.d_bu = (sc.bs_pos - q).norm();
            st.d_ku = (sc.users[static_cast<size_t>(u)] - q).norm();
            st.d_kb = (sc.users[static_cast<size_t>(u)] - sc.bs_pos).norm();
            st.beta_bu = pathloss(b0, st.d_bu, sc.alpha_bu);
            st.beta_ku = pathloss(b0, st.d_ku, sc.alpha_ku[static_cast<size_t>(u)]);
            st.beta_kb = pathloss(b0, st.d_kb, sc.alpha_kb[static_cast<size_t>(u)]);
            st.ang = link_angles(sc.bs_pos, q, sc.users[static_cast<size_t>(u)]);
            ls.links[static_cast<size_t>(n) * K + u] = st;
        }
    }
    return ls;
}

CVec steering_vector(double u, double v, int mx, int my, double rho) {
    CVec out(mx * my);
    for (int i = 0; i < mx; ++i)
        for (int j = 0; j < my; ++j) {
            const double phase = -rho * (i * u + j * v);
            out[i * my + j] = Cplx(std::cos(phase), std::sin(phase));
        }
    return out;
}

LosChannels los_channels(const Scenario& sc, const LinkState& st) {
    const double rho = sc.wave_number();
    const double two_pi_f_over_c =
        2.0 * std::numbers::pi * sc.carrier_hz / kSpeedOfLight;

    LosChannels los;
    los.h_bu = steering_vector(st.ang.sin_theta * st.ang.cos_phi,
                               st.ang.sin_theta * st.ang.sin_phi,
                               sc.panel_nx, sc.panel_ny, rho);
    const double ph_bu = -two_pi_f_over_c * st.d_bu;
    los.h_bu *= Cplx(std::cos(ph_bu), std::sin(ph_bu));

    los.h_ku = steering_vector(st.ang.sin_omega * st.ang.cos_zeta,
                               st.ang.sin_omega * st.ang.sin_zeta,
                               sc.panel_nx, sc.panel_ny, rho);
    const double ph_ku = two_pi_f_over_c * st.d_ku;
    los.h_ku *= Cplx(std::cos(ph_ku), std::sin(ph_ku));

    const double ph_kb = -two_pi_f_over_c * st.d_kb;
    los.h_kb = Cplx(std::cos(ph_kb), std::sin(ph_kb));
    return los;
}

SampledChannels sample_channels(const Scenario& sc, const LinkState& st,
                                int user, Rng& rng) {
    const LosChannels los = los_channels(sc, st);
    const auto uk = static_cast<size_t>(user);

    auto mix = [](double kf) {
        return std::pair<double, double>{std::sqrt(kf / (kf + 1.0)),
                                         std::sqrt(1.0 / (kf + 1.0))};
    };
    const auto [los_bu, nlos_bu] = mix(sc.k_bu);
    const auto [los_ku, nlos_ku] = mix(sc.k_ku[uk]);
    const auto [los_kb, nlos_kb] = mix(sc.k_kb[uk]);

    SampledChannels out;
    const int M = sc.num_elements();
    out.h_bu.resize(M);
    const double rt_bu = std::sqrt(st.beta_bu);
    for (int m = 0; m < M; ++m)
        out.h_bu[m] = rt_bu * (los_bu * los.h_bu[m] + nlos_bu * rng.cnormal());
    out.h_ku.resize(M);
    const double rt_ku = std::sqrt(st.beta_ku);
    for (int m = 0; m < M; ++m)
        out.h_ku[m] = rt_ku * (los_ku * los.h_ku[m] + nlos_ku * rng.cnormal());
    out.h_kb = std::sqrt(st.beta_kb) * (los_kb * los.h_kb + nlos_kb * rng.cnormal());
    return out;
}

Cplx cascade(const CVec& h_ku, const CVec& phases, const CVec& h_bu) {
    Cplx acc(0, 0);
    for (Eigen::Index m = 0; m < h_ku.size(); ++m)
        acc += h_ku[m] * phases[m] * h_bu[m];
    return acc;
}

}  // namespace irsuav
