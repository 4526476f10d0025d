#pragma once

#include "scenario.hpp"

namespace irsuav::testing {

// Desk-scale three-user instance used across the test suite. Geometry keeps
// every link in the few-hundred-meter range so closed forms and Monte-Carlo
// runs stay well conditioned.
inline Scenario reference_scenario() {
    Scenario sc;
    sc.bs_pos = Vec3(150, 50, 8);
    sc.users = {Vec3(20, 50, 0), Vec3(120, 40, 0), Vec3(240, 55, 0)};
    sc.start_pos = Vec3(0, 30, 10);
    sc.end_pos = Vec3(300, 65, 10);
    sc.num_slots = 60;
    sc.slot_duration = 0.5;
    sc.v_max = 20.0;
    sc.a_max = 4.0;
    sc.h_min = 1.0;
    sc.h_max = 20.0;
    sc.no_fly = {{Vec3(80, 44, 20), 4.0}, {Vec3(200, 50, 20), 4.0}};
    sc.carrier_hz = 3.4e9;
    sc.bandwidth_hz = 1e6;
    sc.noise_psd_dbm_hz = -140.0;
    sc.panel_nx = 5;
    sc.panel_ny = 5;
    sc.k_bu = 10.0;
    sc.k_ku = {10.0, 10.0, 10.0};
    sc.k_kb = {10.0, 10.0, 10.0};
    sc.alpha_bu = 2.4;
    sc.alpha_ku = {2.4, 2.4, 2.4};
    sc.alpha_kb = {2.4, 2.4, 2.4};
    sc.tx_power = {0.1, 0.1, 0.1};
    sc.min_rate = {20.0, 20.0, 20.0};
    sc.eh.eta = 0.8;
    sc.eh.c = 6400.0;
    sc.eh.nu = 0.003;
    sc.eh.saturation = 0.02;
    sc.eh.per_element_power = 1.18e-15;
    return sc;
}

// Single-user variant with a small panel, handy for Monte-Carlo tests.
inline Scenario small_scenario(int mx = 2, int my = 2) {
    Scenario sc = reference_scenario();
    sc.users = {Vec3(120, 40, 0)};
    sc.k_ku = {10.0};
    sc.k_kb = {10.0};
    sc.alpha_ku = {2.4};
    sc.alpha_kb = {2.4};
    sc.tx_power = {0.1};
    sc.min_rate = {20.0};
    sc.panel_nx = mx;
    sc.panel_ny = my;
    return sc;
}

}  // namespace irsuav::testing
