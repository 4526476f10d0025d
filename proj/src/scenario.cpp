#include "scenario.hpp"

#include "errors.hpp"

#include <cmath>
#include <numbers>

namespace irsuav {

namespace {
constexpr double kPosUpdateTol = 1e-6;  // meters
}  // namespace

const char* eh_mode_name(EhMode m) {
    return m == EhMode::PaperLiteral ? "paper-literal" : "corrected";
}

double Scenario::noise_power_w() const {
    return std::pow(10.0, noise_psd_dbm_hz / 10.0) * 1e-3 * bandwidth_hz;
}

double Scenario::beta0() const {
    const double x = kSpeedOfLight / (4.0 * std::numbers::pi * carrier_hz);
    return x * x;
}

double Scenario::spacing() const {
    return element_spacing > 0 ? element_spacing
                               : 0.5 * kSpeedOfLight / carrier_hz;
}

double Scenario::wave_number() const {
    return 2.0 * std::numbers::pi * carrier_hz * spacing() / kSpeedOfLight;
}

void Scenario::validate() const {
    auto bad = [](const std::string& msg) {
        throw Error(ErrorCode::BadParameter, "scenario: " + msg);
    };
    auto infeasible = [](const std::string& msg) {
        throw Error(ErrorCode::InfeasibleInstance, "scenario: " + msg);
    };

    if (num_slots < 2) bad("need at least 2 slots");
    if (slot_duration <= 0) bad("slot duration must be positive");
    if (v_max <= 0 || a_max <= 0) bad("speed/acceleration limits must be positive");
    if (users.empty()) bad("need at least one user");
    if (h_min < 0 || h_max < h_min) bad("bad altitude band");
    if (blocks_per_slot < 1) bad("need at least one fading block per slot");
    if (carrier_hz <= 0 || bandwidth_hz <= 0) bad("carrier/bandwidth must be positive");
    if (panel_nx < 0 || panel_ny < 0) bad("panel dimensions must be nonnegative");
    if (spacing() <= 0) bad("element spacing must be positive");
    if (k_bu < 0) bad("Rician factor must be nonnegative");
    if (alpha_bu < 2) bad("pathloss exponents must be at least 2");
    if (eh.eta <= 0 || eh.eta > 1) bad("conversion efficiency must be in (0,1]");
    if (eh.c <= 0 || eh.nu <= 0 || eh.saturation <= 0)
        bad("EH logistic parameters must be positive");
    if (eh.per_element_power < 0) bad("per-element power must be nonnegative");

    const size_t K = users.size();
    auto check_per_user = [&](const std::vector<double>& v, const char* name) {
        if (v.size() != K) bad(std::string(name) + " must have one entry per user");
    };
    check_per_user(k_ku, "k_ku");
    check_per_user(k_kb, "k_kb");
    check_per_user(alpha_ku, "alpha_ku");
    check_per_user(alpha_kb, "alpha_kb");
    check_per_user(tx_power, "tx_power");
    check_per_user(min_rate, "min_rate");
    if (!harvest_target.empty()) check_per_user(harvest_target, "harvest_target");
    for (size_t k = 0; k < K; ++k) {
        if (k_ku[k] < 0 || k_kb[k] < 0) bad("Rician factors must be nonnegative");
        if (alpha_ku[k] < 2 || alpha_kb[k] < 2)
            bad("pathloss exponents must be at least 2");
        if (tx_power[k] <= 0) bad("transmit power must be positive");
        if (min_rate[k] < 0) bad("rate demands must be nonnegative");
        if (!harvest_target.empty() && harvest_target[k] < 0)
            bad("harvest targets must be nonnegative");
    }
    for (const auto& z : no_fly)
        if (z.radius <= 0) bad("no-fly radius must be positive");

    if (start_pos.z() < h_min || start_pos.z() > h_max ||
        end_pos.z() < h_min || end_pos.z() > h_max)
        infeasible("endpoints outside the altitude band");
    const double reach = num_slots * slot_duration * v_max;
    const double dist = (end_pos - start_pos).norm();
    if (dist > reach)
        infeasible("endpoints unreachable: " + std::to_string(dist) + " m > " +
                   std::to_string(reach) + " m");
}

Kinematics straight_line_kinematics(const Scenario& sc) {
    const int N = sc.num_slots;
    Kinematics k;
    k.pos.resize(static_cast<size_t>(N) + 1);
    k.vel.resize(static_cast<size_t>(N));
    const Vec3 step = (sc.end_pos - sc.start_pos) / N;
    for (int n = 0; n <= N; ++n)
        k.pos[static_cast<size_t>(n)] = sc.start_pos + step * n;
    const Vec3 v = step / sc.slot_duration;
    for (int n = 0; n < N; ++n) k.vel[static_cast<size_t>(n)] = v;
    return k;
}

std::vector<KinematicsViolation> check_kinematics(const Scenario& sc,
                                                  const Kinematics& k) {
    std::vector<KinematicsViolation> out;
    const int N = sc.num_slots;
    if (k.pos.size() != static_cast<size_t>(N) + 1 ||
        k.vel.size() != static_cast<size_t>(N))
        throw Error(ErrorCode::BadParameter, "kinematics has wrong horizon");

    auto add = [&](const char* c, int slot, double mag) {
        out.push_back({c, slot, mag});
    };

    const double d0 = (k.pos.front() - sc.start_pos).norm();
    if (d0 > kPosUpdateTol) add("endpoint", 0, d0);
    const double d1 = (k.pos.back() - sc.end_pos).norm();
    if (d1 > kPosUpdateTol) add("endpoint", N, d1);

    for (int n = 0; n < N; ++n) {
        const auto ns = static_cast<size_t>(n);
        const double drift =
            (k.pos[ns + 1] - k.pos[ns] - k.vel[ns] * sc.slot_duration).norm();
        if (drift > kPosUpdateTol) add("position-update", n, drift);
        const double speed = k.vel[ns].norm();
        if (speed > sc.v_max + 1e-9) add("speed", n, speed - sc.v_max);
    }
    for (int n = 0; n + 1 < N; ++n) {
        const auto ns = static_cast<size_t>(n);
        const double accel =
            (k.vel[ns + 1] - k.vel[ns]).norm() / sc.slot_duration;
        if (accel > sc.a_max + 1e-9) add("acceleration", n, accel - sc.a_max);
    }
    for (int n = 1; n <= N; ++n) {
        const double z = k.pos[static_cast<size_t>(n)].z();
        if (z < sc.h_min - 1e-9) add("altitude", n, sc.h_min - z);
        if (z > sc.h_max + 1e-9) add("altitude", n, z - sc.h_max);
        for (const auto& zone : sc.no_fly) {
            const double d = (k.pos[static_cast<size_t>(n)] - zone.center).norm();
            if (d < zone.radius - 1e-9) add("no-fly", n, zone.radius - d);
        }
    }
    return out;
}

}  // namespace irsuav
