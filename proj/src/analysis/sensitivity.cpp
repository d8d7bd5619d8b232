#include <cmath>

#include "qdm/analysis.hpp"

namespace qdm {

double min_detectable_field(double sigma_S, double C, double kappa) {
    if (!(C > 0.0)) throw InvalidArgument("contrast must be positive");
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    return sigma_S / (C * kappa);
}

double min_detectable_phase(double sigma_S, double C, double kappa, double B_ac) {
    if (!(B_ac > 0.0)) throw InvalidArgument("AC amplitude must be positive");
    return min_detectable_field(sigma_S, C, kappa) / B_ac;
}

double added_phase(double B_s, double B_a, double delta_s) {
    if (B_s == 0.0 && B_a == 0.0) throw InvalidArgument("sample and applied fields are both zero");
    return std::atan2(B_s * std::sin(delta_s), B_a + B_s * std::cos(delta_s));
}

double added_phase_small_signal(double B_s, double B_a, double delta_s) {
    if (B_a == 0.0) throw InvalidArgument("applied field must be nonzero");
    return B_s / B_a * delta_s;
}

double off_axis_ac(double B_perp_dc, double B_perp_ac) {
    return 3.0 * constants.gamma_e / constants.D0 * std::abs(B_perp_dc * B_perp_ac);
}

}  // namespace qdm
