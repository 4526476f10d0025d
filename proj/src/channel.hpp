#pragma once

#include "geometry.hpp"
#include "rng.hpp"
#include "scenario.hpp"

#include <complex>
#include <vector>

namespace irsuav {

using CVec = Eigen::VectorXcd;
using Cplx = std::complex<double>;

// Direction cosines of the panel links at one UAV position.
//   sin_theta: BS-panel elevation, (bs_z - uav_z)/d_bu
//   sin_phi / cos_phi: BS-panel azimuth from the horizontal offsets
//   sin_omega: panel-user elevation, uav_z/d_ku
//   sin_zeta / cos_zeta: panel-user azimuth
struct GeometryAngles {
    double sin_theta = 0, sin_phi = 0, cos_phi = 0;
    double sin_omega = 0, sin_zeta = 0, cos_zeta = 0;
};

// Throws DegenerateGeometry if the UAV is within 1e-3 m of the BS or user.
GeometryAngles link_angles(const Vec3& bs, const Vec3& uav, const Vec3& user);

double pathloss(double beta0, double dist, double alpha);

// Large-scale quantities for one (slot, user) pair.
struct LinkState {
    double d_bu = 0, d_ku = 0, d_kb = 0;
    double beta_bu = 0, beta_ku = 0, beta_kb = 0;
    GeometryAngles ang;
};

struct LargeScaleState {
    int num_slots = 0, num_users = 0;
    std::vector<LinkState> links;  // [slot * num_users + user]

    const LinkState& at(int slot, int user) const {
        return links[static_cast<size_t>(slot) * num_users + user];
    }
};

// Slot n (0-based) uses position pos[n+1] of the kinematics.
LargeScaleState compute_large_scale(const Kinematics& k, const Scenario& sc);

// Panel steering vector; u and v are the direction cosines sin(el)cos(az) and
// sin(el)sin(az). Entry (m_x, m_y), both 1-based, lives at index
// (m_x-1)*My + (m_y-1) and equals exp(-j*rho*((m_x-1)u + (m_y-1)v)).
CVec steering_vector(double u, double v, int mx, int my, double rho);

// Deterministic line-of-sight components (unit-modulus entries; pathloss is
// applied separately). Carrier phases: the BS-panel and user-BS links carry
// e^{-j 2 pi f d / c}; the user-panel link carries the conjugate sign so the
// through-panel product depends on d_bu - d_ku.
struct LosChannels {
    CVec h_bu;
    CVec h_ku;
    Cplx h_kb;
};
LosChannels los_channels(const Scenario& sc, const LinkState& st);

// Rician fading draw including pathloss: sqrt(beta) * (sqrt(K/(K+1)) LoS +
// sqrt(1/(K+1)) CN(0,1)). Draw order: h_bu entries, then h_ku, then h_kb;
// each complex draw consumes two normals (real then imaginary).
struct SampledChannels {
    CVec h_bu;
    CVec h_ku;
    Cplx h_kb;
};
SampledChannels sample_channels(const Scenario& sc, const LinkState& st,
                                int user, Rng& rng);

// sum_m h_ku[m] * phase[m] * h_bu[m]
Cplx cascade(const CVec& h_ku, const CVec& phases, const CVec& h_bu);

}  // namespace irsuav
