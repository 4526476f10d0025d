#pragma once

#include <complex>
#include <vector>

#include "channel.hpp"
#include "scenario.hpp"

namespace irsuav {

// Geometric phase offset (in units of the element phase constant) seen by
// element (m_i, m_j): incident plus departing direction cosines, weighted by
// the element index. Indices are 1-based to match the steering convention.
double theta_geometry(const GeometryAngles& ang, int m_i, int m_j);

// All panel elements in steering order (row-major, m_j fastest).
std::vector<double> theta_geometry_all(const GeometryAngles& ang, int mx,
                                       int my);

// Reflection phases that align every cascaded element with the direct link
// for the given slot geometry. Values wrapped to [0, 2*pi).
std::vector<double> optimal_phases(const Scenario& sc, const LinkState& st);

// Mean (LoS) part of the combined receive amplitude at the given phases:
// direct term plus the phase-steered cascade sum, amplitude-weighted by the
// Rician factors and pathlosses.
std::complex<double> b_los_combined(const Scenario& sc, const LinkState& st,
                                    int user, double rho_bar,
                                    const std::vector<double>& phases);

// Largest wrapped phase mismatch (radians) between any cascade summand and
// the direct link. Zero (to rounding) at the optimum.
double alignment_residual(const Scenario& sc, const LinkState& st,
                          const std::vector<double>& phases);

// |b| when phases align: the two path amplitudes add coherently.
double b_abs_aligned(const Scenario& sc, const LinkState& st, int user,
                     double rho_bar);

}  // namespace irsuav
