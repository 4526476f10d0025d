#pragma once

#include "geometry.hpp"

#include <string>
#include <vector>

namespace irsuav {

inline constexpr double kSpeedOfLight = 3e8;  // m/s

struct NoFlyZone {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
};

// Harvest-bound convention: `PaperLiteral` uses the BS-side element gain with
// no conversion efficiency (matches the published closed form and is the
// default for figure-style runs); `Corrected` uses the user-side gain scaled
// by the efficiency eta (matches the Monte-Carlo average of the linear model).
enum class EhMode { PaperLiteral, Corrected };

const char* eh_mode_name(EhMode m);

struct EhParams {
    double eta = 0.8;                   // linear-model conversion efficiency
    double c = 6400.0;                  // logistic steepness (1/J)
    double nu = 0.003;                  // logistic midpoint (J)
    double saturation = 0.02;           // per-user saturation energy M_k (J)
    double per_element_power = 0.0;     // activation energy needed per element (J)
    double threshold_cap_factor = 10.0; // reject thresholds above cap*nu
};

struct Scenario {
    // Geometry (meters; z up)
    Vec3 bs_pos = Vec3::Zero();
    std::vector<Vec3> users;
    Vec3 start_pos = Vec3::Zero(), end_pos = Vec3::Zero();
    int num_slots = 0;              // N
    double slot_duration = 0.5;     // s
    double v_max = 20.0;            // m/s
    double a_max = 4.0;             // m/s^2
    double h_min = 1.0, h_max = 20.0;
    std::vector<NoFlyZone> no_fly;

    // Radio
    double carrier_hz = 3.4e9;
    double bandwidth_hz = 1e6;
    double noise_psd_dbm_hz = -140.0;
    double element_spacing = 0.0;   // 0 means half wavelength, set at load
    int panel_nx = 5, panel_ny = 5; // reflecting surface size M_x x M_y
    double k_bu = 10.0;             // Rician factors (linear)
    std::vector<double> k_ku, k_kb;
    double alpha_bu = 2.4;          // pathloss exponents
    std::vector<double> alpha_ku, alpha_kb;

    // Per-user service demands
    std::vector<double> tx_power;        // W
    std::vector<double> min_rate;        // bits/s/Hz summed over the horizon
    std::vector<double> harvest_target;  // e_k (J); empty = derive from EH params

    int blocks_per_slot = 10;  // fading blocks per slot (rounding granularity L)

    EhParams eh;
    EhMode eh_mode = EhMode::PaperLiteral;

    // Optimizer knobs
    double eps_inner = 1e-3;   // SCA objective stop
    double eps_outer = 1e-4;   // outer loop relative stop
    int max_inner_iters = 30;
    int max_outer_iters = 30;

    int num_users() const { return static_cast<int>(users.size()); }
    int num_elements() const { return panel_nx * panel_ny; }
    double noise_power_w() const;
    double beta0() const;           // free-space gain at the 1 m reference
    double spacing() const;         // element spacing with the default applied
    double wave_number() const;     // 2 pi f d / c_light

    // Throws Error(InfeasibleInstance/BadParameter) on violated invariants.
    void validate() const;
};

struct Kinematics {
    std::vector<Vec3> pos;  // N+1 positions
    std::vector<Vec3> vel;  // N velocities; vel[n] carries pos[n] to pos[n+1]
};

struct KinematicsViolation {
    std::string constraint;  // position-update | endpoint | speed |
                             // acceleration | altitude | no-fly
    int slot = 0;
    double magnitude = 0.0;
};

// Uniform straight-line flight between the endpoints.
Kinematics straight_line_kinematics(const Scenario& sc);

// Position-update consistency uses a 1e-6 m tolerance per slot.
std::vector<KinematicsViolation> check_kinematics(const Scenario& sc,
                                                  const Kinematics& k);

}  // namespace irsuav
