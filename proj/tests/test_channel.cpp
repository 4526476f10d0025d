#include "channel.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "errors.hpp"
#include "rng.hpp"
#include "test_support.hpp"

using namespace irsuav;
using irsuav::testing::reference_scenario;
using irsuav::testing::small_scenario;

TEST_CASE("vertical hover above a user") {
    const Vec3 bs(50, 0, 8), uav(0, 0, 10), user(0, 0, 0);
    GeometryAngles a = link_angles(bs, uav, user);
    CHECK(a.sin_omega == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.sin_zeta == 0.0);
    CHECK(a.cos_zeta == 0.0);
    CHECK((user - uav).norm() == doctest::Approx(10.0));
}

TEST_CASE("reference-distance gain") {
    CHECK(pathloss(4.9e-5, 1.0, 2.4) == 4.9e-5);
    CHECK(pathloss(4.9e-5, 1.0, 3.7) == 4.9e-5);
}

TEST_CASE("gain decreases with distance") {
    const double b0 = 4.9e-5;
    double prev = pathloss(b0, 1.0, 2.4);
    for (double d = 2; d < 300; d *= 1.5) {
        const double g = pathloss(b0, d, 2.4);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("horizontal 3-4-5 offset fixes the azimuth") {
    const Vec3 bs(10, 20, 8), user(0, 0, 0);
    const Vec3 uav(13, 24, 8);  // (3, 4) horizontal offset, same height
    GeometryAngles a = link_angles(bs, uav, user);
    CHECK(a.sin_theta == doctest::Approx(0.0).scale(1));
    CHECK(a.sin_phi == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.cos_phi == doctest::Approx(0.8).epsilon(1e-12));
    // Independent recomputation through atan2.
    const double az = std::atan2(uav.x() - bs.x(), uav.y() - bs.y());
    CHECK(a.sin_phi == doctest::Approx(std::sin(az)).epsilon(1e-12));
    CHECK(a.cos_phi == doctest::Approx(std::cos(az)).epsilon(1e-12));
    CHECK(a.sin_zeta * a.sin_zeta + a.cos_zeta * a.cos_zeta ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("large-scale state over the straight flight") {
    Scenario sc = reference_scenario();
    Kinematics k = straight_line_kinematics(sc);
    LargeScaleState ls = compute_large_scale(k, sc);
    REQUIRE(ls.num_slots == 60);
    REQUIRE(ls.num_users == 3);
    for (int n = 0; n < ls.num_slots; ++n)
        for (int u = 0; u < ls.num_users; ++u) {
            const LinkState& st = ls.at(n, u);
            CHECK(st.d_bu > 0);
            CHECK(st.beta_bu ==
                  doctest::Approx(sc.beta0() / std::pow(st.d_bu, sc.alpha_bu))
                      .epsilon(1e-12));
            CHECK(st.ang.sin_zeta * st.ang.sin_zeta +
                      st.ang.cos_zeta * st.ang.cos_zeta ==
                  doctest::Approx(1.0).epsilon(1e-9));
        }
    // The direct user-BS link ignores the trajectory.
    CHECK(ls.at(0, 1).d_kb == ls.at(59, 1).d_kb);

    LargeScaleState again = compute_large_scale(k, sc);
    CHECK(again.at(17, 2).beta_ku == ls.at(17, 2).beta_ku);
}

TEST_CASE("degenerate geometry is rejected") {
    Scenario sc = reference_scenario();
    sc.users[0] = Vec3(50, 50, 10);
    Kinematics k = straight_line_kinematics(sc);
    k.pos[5] = Vec3(50, 50, 10);  // on top of user 0
    CHECK_THROWS_AS(compute_large_scale(k, sc), Error);
    try {
        compute_large_scale(k, sc);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateGeometry);
    }
}

TEST_CASE("steering vector basics") {
    SUBCASE("zero elevation gives all ones") {
        CVec v = steering_vector(0.0, 0.0, 3, 4, std::numbers::pi);
        REQUIRE(v.size() == 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(v[i].real() == doctest::Approx(1.0));
            CHECK(v[i].imag() == doctest::Approx(0.0).scale(1));
        }
    }
    SUBCASE("single element is the scalar one") {
        CVec v = steering_vector(0.3, -0.2, 1, 1, 2.0);
        REQUIRE(v.size() == 1);
        CHECK(v[0] == Cplx(1.0, 0.0));
    }
    SUBCASE("two-by-two closed form") {
        CVec v = steering_vector(0.5, 0.0, 2, 2, std::numbers::pi);
        REQUIRE(v.size() == 4);
        CHECK(std::abs(v[0] - Cplx(1, 0)) < 1e-12);
        CHECK(std::abs(v[1] - Cplx(1, 0)) < 1e-12);
        CHECK(std::abs(v[2] - Cplx(0, -1)) < 1e-12);  // exp(-i pi/2)
        CHECK(std::abs(v[3] - Cplx(0, -1)) < 1e-12);
    }
}

TEST_CASE("steering vector against a direct double loop") {
    const double u = 0.37, v = -0.81, rho = 2.9;
    const int mx = 4, my = 3;
    CVec got = steering_vector(u, v, mx, my, rho);
    for (int i = 1; i <= mx; ++i)
        for (int j = 1; j <= my; ++j) {
            const Cplx want =
                std::exp(Cplx(0, -rho * ((i - 1) * u + (j - 1) * v)));
            CHECK(std::abs(got[(i - 1) * my + (j - 1)] - want) < 1e-12);
        }
    // Unit modulus and exact squared norm.
    double norm_sq = 0;
    for (int m = 0; m < mx * my; ++m) {
        CHECK(std::abs(std::abs(got[m]) - 1.0) < 1e-12);
        norm_sq += std::norm(got[m]);
    }
    CHECK(norm_sq == doctest::Approx(mx * my).epsilon(1e-9));
}

TEST_CASE("line-of-sight components are unit modulus") {
    Scenario sc = reference_scenario();
    LargeScaleState ls =
        compute_large_scale(straight_line_kinematics(sc), sc);
    LosChannels los = los_channels(sc, ls.at(12, 1));
    double acc = 0;
    for (int m = 0; m < sc.num_elements(); ++m) {
        CHECK(std::abs(std::abs(los.h_bu[m]) - 1.0) < 1e-12);
        CHECK(std::abs(std::abs(los.h_ku[m]) - 1.0) < 1e-12);
        acc += std::norm(los.h_bu[m]);
    }
    CHECK(acc == doctest::Approx(sc.num_elements()).epsilon(1e-9));
    CHECK(std::abs(std::abs(los.h_kb) - 1.0) < 1e-12);
}

TEST_CASE("huge Rician factor collapses to the deterministic part") {
    Scenario sc = small_scenario();
    sc.k_bu = 1e12;
    sc.k_ku = {1e12};
    sc.k_kb = {1e12};
    LargeScaleState ls =
        compute_large_scale(straight_line_kinematics(sc), sc);
    const LinkState& st = ls.at(30, 0);
    LosChannels los = los_channels(sc, st);
    Rng rng(1234);
    SampledChannels smp = sample_channels(sc, st, 0, rng);
    for (int m = 0; m < sc.num_elements(); ++m) {
        CHECK(std::abs(smp.h_bu[m] - std::sqrt(st.beta_bu) * los.h_bu[m]) <
              1e-4 * std::sqrt(st.beta_bu));
        CHECK(std::abs(smp.h_ku[m] - std::sqrt(st.beta_ku) * los.h_ku[m]) <
              1e-4 * std::sqrt(st.beta_ku));
    }
    CHECK(std::abs(smp.h_kb - std::sqrt(st.beta_kb) * los.h_kb) <
          1e-4 * std::sqrt(st.beta_kb));
}

TEST_CASE("zero Rician factor gives pure scattering with variance beta") {
    Scenario sc = small_scenario(1, 1);
    sc.k_bu = 0;
    sc.k_ku = {0};
    sc.k_kb = {0};
    LargeScaleState ls =
        compute_large_scale(straight_line_kinematics(sc), sc);
    const LinkState& st = ls.at(30, 0);
    Rng rng(99);
    const int samples = 100000;
    double acc_bu = 0, acc_kb = 0;
    for (int i = 0; i < samples; ++i) {
        SampledChannels smp = sample_channels(sc, st, 0, rng);
        acc_bu += std::norm(smp.h_bu[0]);
        acc_kb += std::norm(smp.h_kb);
    }
    CHECK(acc_bu / samples == doctest::Approx(st.beta_bu).epsilon(0.02));
    CHECK(acc_kb / samples == doctest::Approx(st.beta_kb).epsilon(0.02));
}

TEST_CASE("sampling is reproducible for a fixed seed") {
    Scenario sc = small_scenario();
    LargeScaleState ls =
        compute_large_scale(straight_line_kinematics(sc), sc);
    Rng a(777), b(777);
    SampledChannels sa = sample_channels(sc, ls.at(3, 0), 0, a);
    SampledChannels sb = sample_channels(sc, ls.at(3, 0), 0, b);
    for (int m = 0; m < sc.num_elements(); ++m) {
        CHECK(sa.h_bu[m] == sb.h_bu[m]);
        CHECK(sa.h_ku[m] == sb.h_ku[m]);
    }
    CHECK(sa.h_kb == sb.h_kb);
}

TEST_CASE("mean squared norm of the user-panel channel") {
    Scenario sc = small_scenario();
    LargeScaleState ls =
        compute_large_scale(straight_line_kinematics(sc), sc);
    const LinkState& st = ls.at(30, 0);
    Rng rng(4242);
    const int samples = 100000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < samples; ++i) {
        SampledChannels smp = sample_channels(sc, st, 0, rng);
        const double x = smp.h_ku.squaredNorm();
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / samples;
    const double var = sum_sq / samples - mean * mean;
    const double stderr_mean = std::sqrt(var / samples);
    const double expect = sc.num_elements() * st.beta_ku;
    CHECK(std::abs(mean - expect) <= 3.0 * stderr_mean);
}

TEST_CASE("cascade accumulates element products") {
    CVec a(2), b(2), ph(2);
    a << Cplx(1, 0), Cplx(0, 1);
    b << Cplx(2, 0), Cplx(0, -1);
    ph << Cplx(1, 0), Cplx(1, 0);
    CHECK(std::abs(cascade(a, ph, b) - Cplx(3, 0)) < 1e-15);
}
