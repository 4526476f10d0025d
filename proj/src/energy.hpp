#pragma once

#include "scenario.hpp"

namespace irsuav {

// Linear harvest over one scheduled block: eta * s * P * (1 - rho_bar^2) *
// gain_sq, where gain_sq is the squared magnitude of the user-panel channel
// aggregate. Joules when s carries the block duration.
double linear_harvest(double eta, double s, double tx_power, double rho_bar,
                      double gain_sq);

// Logistic saturation model. Exactly zero at zero input, strictly increasing,
// bounded by p.saturation.
double nonlinear_harvest(double e_in, const EhParams& p);

// Smallest linear-model input whose nonlinear harvest reaches e_min. Exact
// inverse of nonlinear_harvest (round-trips to 1e-9 relative). Rejects
// e_min outside (0, saturation) and thresholds above cap_factor * nu.
double min_input_threshold(double e_min, const EhParams& p);

// Activation energy for the whole panel: one per-element share per element.
double panel_activation_energy(int mx, int my, const EhParams& p);

// Closed-form average harvest over a slot:
//   PaperLiteral: s * P * (1 - rho_bar^2) * Mx*My * beta_bu      (no eta)
//   Corrected:    eta * s * P * (1 - rho_bar^2) * Mx*My * beta_ku
double avg_harvest_bound(EhMode mode, double eta, double s, double tx_power,
                         double rho_bar, int mx, int my, double beta_bu,
                         double beta_ku);

}  // namespace irsuav
