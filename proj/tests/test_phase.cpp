#include "phase.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "channel.hpp"
#include "doctest.h"
#include "rate.hpp"
#include "rng.hpp"
#include "test_support.hpp"

using namespace irsuav;
using irsuav::testing::small_scenario;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LinkState hover_state(const Scenario& sc, const Vec3& uav, int user) {
    LinkState st;
    st.d_bu = (sc.bs_pos - uav).norm();
    st.d_ku = (sc.users[user] - uav).norm();
    st.d_kb = (sc.users[user] - sc.bs_pos).norm();
    st.beta_bu = pathloss(sc.beta0(), st.d_bu, sc.alpha_bu);
    st.beta_ku = pathloss(sc.beta0(), st.d_ku, sc.alpha_ku[user]);
    st.beta_kb = pathloss(sc.beta0(), st.d_kb, sc.alpha_kb[user]);
    st.ang = link_angles(sc.bs_pos, uav, sc.users[user]);
    return st;
}

GeometryAngles random_angles(Rng& rng) {
    GeometryAngles a;
    a.sin_theta = 2 * rng.u01() - 1;
    const double az1 = kTwoPi * rng.u01();
    a.sin_phi = std::sin(az1);
    a.cos_phi = std::cos(az1);
    a.sin_omega = 2 * rng.u01() - 1;
    const double az2 = kTwoPi * rng.u01();
    a.sin_zeta = std::sin(az2);
    a.cos_zeta = std::cos(az2);
    return a;
}

}  // namespace

TEST_CASE("zero element offsets carry no geometric phase") {
    Rng rng(11);
    GeometryAngles a = random_angles(rng);
    CHECK(theta_geometry(a, 1, 1) == 0.0);
}

TEST_CASE("flat geometry carries no geometric phase") {
    GeometryAngles a;  // all sines zero
    a.cos_phi = 1.0;
    a.cos_zeta = 1.0;
    CHECK(theta_geometry(a, 2, 2) == 0.0);
    CHECK(theta_geometry(a, 5, 3) == 0.0);
}

TEST_CASE("geometric phase equals the product of steering phases") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        GeometryAngles a = random_angles(rng);
        const double rho = 0.5 + 3.0 * rng.u01();
        CVec in = steering_vector(a.sin_theta * a.cos_phi,
                                  a.sin_theta * a.sin_phi, 2, 2, rho);
        CVec out = steering_vector(a.sin_omega * a.cos_zeta,
                                   a.sin_omega * a.sin_zeta, 2, 2, rho);
        const auto theta = theta_geometry_all(a, 2, 2);
        for (int m = 0; m < 4; ++m) {
            const double got = std::arg(in[m] * out[m]);
            const double want = -rho * theta[m];
            CHECK(std::abs(std::remainder(got - want, kTwoPi)) < 1e-12);
        }
    }
}

TEST_CASE("equal path lengths need no correction") {
    Scenario sc = small_scenario(2, 2);
    LinkState st;
    // 30 m is a whole number of wavelengths (340) at 3.4 GHz, so the
    // direct-link carrier term wraps away entirely.
    st.d_bu = st.d_ku = st.d_kb = 30.0;
    st.beta_bu = st.beta_ku = st.beta_kb = 1e-9;
    st.ang = GeometryAngles{};  // all sines zero
    st.ang.cos_phi = 1.0;
    st.ang.cos_zeta = 1.0;
    for (double b : optimal_phases(sc, st))
        CHECK(std::abs(std::remainder(b, kTwoPi)) < 1e-9);
}

TEST_CASE("closed-form phases beat an exhaustive grid") {
    Scenario sc = small_scenario(2, 1);
    sc.users[0] = Vec3(190, 70, 1);
    LinkState st = hover_state(sc, Vec3(72, 33, 14), 0);
    const double rho_bar = 0.7;
    const int user = 0;

    const double kku = sc.k_ku[user], kbu = sc.k_bu, kkb = sc.k_kb[user];
    const double f1 = std::sqrt(kkb * st.beta_kb / (kkb + 1));
    const double amp = rho_bar * std::sqrt(kbu * kku * st.beta_bu *
                                           st.beta_ku /
                                           ((kbu + 1) * (kku + 1)));
    const LosChannels los = los_channels(sc, st);
    const Cplx direct = f1 * los.h_kb;
    const Cplx c0 = amp * los.h_ku[0] * los.h_bu[0];
    const Cplx c1 = amp * los.h_ku[1] * los.h_bu[1];

    const double step = 1e-3;
    const int cells = static_cast<int>(kTwoPi / step) + 1;
    std::vector<Cplx> spin(cells);
    for (int i = 0; i < cells; ++i) spin[i] = std::polar(1.0, i * step);
    double grid_best = 0.0;
    for (int i = 0; i < cells; ++i) {
        const Cplx base = direct + c0 * spin[i];
        for (int j = 0; j < cells; ++j)
            grid_best = std::max(grid_best, std::abs(base + c1 * spin[j]));
    }

    const auto beta = optimal_phases(sc, st);
    const double closed =
        std::abs(b_los_combined(sc, st, user, rho_bar, beta));
    CHECK(closed >= grid_best - 2 * amp * step);
    CHECK(closed >= grid_best * (1 - 1e-6));
}

TEST_CASE("optimal phases align every summand with the direct path") {
    Scenario sc = small_scenario(3, 3);
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        sc.users[0] = Vec3(10 + 280 * rng.u01(), 20 + 60 * rng.u01(), 1);
        const Vec3 uav(10 + 280 * rng.u01(), 20 + 60 * rng.u01(),
                       2 + 16 * rng.u01());
        LinkState st = hover_state(sc, uav, 0);
        const auto beta = optimal_phases(sc, st);
        CHECK(alignment_residual(sc, st, beta) <= 1e-9);

        const double rho_bar = 0.05 + 0.9 * rng.u01();
        const double assembled =
            std::abs(b_los_combined(sc, st, 0, rho_bar, beta));
        CHECK(assembled ==
              doctest::Approx(b_abs_aligned(sc, st, 0, rho_bar))
                  .epsilon(1e-9));
        CHECK(assembled * assembled ==
              doctest::Approx(b_squared_optimal(sc, st, 0, rho_bar))
                  .epsilon(1e-9));
    }
}

TEST_CASE("phases live in the principal interval") {
    Scenario sc = small_scenario(4, 4);
    LinkState st = hover_state(sc, Vec3(140, 60, 17), 0);
    for (double b : optimal_phases(sc, st)) {
        CHECK(b >= 0.0);
        CHECK(b < kTwoPi);
    }
}

TEST_CASE("a global full-turn shift changes nothing") {
    Scenario sc = small_scenario(2, 2);
    LinkState st = hover_state(sc, Vec3(95, 40, 9), 0);
    auto beta = optimal_phases(sc, st);
    const double before = std::abs(b_los_combined(sc, st, 0, 0.5, beta));
    for (double& b : beta) b += kTwoPi;
    const double after = std::abs(b_los_combined(sc, st, 0, 0.5, beta));
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}
