#include "energy.hpp"

#include "errors.hpp"

#include <cmath>

namespace irsuav {

double linear_harvest(double eta, double s, double tx_power, double rho_bar,
                      double gain_sq) {
    return eta * s * tx_power * (1.0 - rho_bar * rho_bar) * gain_sq;
}

double nonlinear_harvest(double e_in, const EhParams& p) {
    if (e_in <= 0) return 0.0;
    const double omega = 1.0 / (1.0 + std::exp(p.c * p.nu));
    const double upsilon = p.saturation / (1.0 + std::exp(-p.c * (e_in - p.nu)));
    return (upsilon - p.saturation * omega) / (1.0 - omega);
}

double min_input_threshold(double e_min, const EhParams& p) {
    if (!(e_min > 0) || !(e_min < p.saturation))
        throw Error(ErrorCode::BadParameter,
                    "harvest target must lie strictly between 0 and the saturation energy");
    // Undo the zero-offset correction first, then invert the logistic.
    const double omega = 1.0 / (1.0 + std::exp(p.c * p.nu));
    const double upsilon = e_min * (1.0 - omega) + p.saturation * omega;
    const double e = p.nu - std::log((p.saturation - upsilon) / upsilon) / p.c;
    if (e > p.threshold_cap_factor * p.nu)
        throw Error(ErrorCode::BadParameter,
                    "harvest target needs an input beyond the configured cap");
    return e;
}

double panel_activation_energy(int mx, int my, const EhParams& p) {
    return static_cast<double>(mx) * my * p.per_element_power;
}

double avg_harvest_bound(EhMode mode, double eta, double s, double tx_power,
                         double rho_bar, int mx, int my, double beta_bu,
                         double beta_ku) {
    const double keep = 1.0 - rho_bar * rho_bar;
    const double elements = static_cast<double>(mx) * my;
    if (mode == EhMode::PaperLiteral)
        return s * tx_power * keep * elements * beta_bu;
    return eta * s * tx_power * keep * elements * beta_ku;
}

}  // namespace irsuav
