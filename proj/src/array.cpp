#include "nfdoa/array.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nfdoa {

void ArrayConfig::validate() const {
    if (n_elements < 2) throw std::domain_error("ArrayConfig: n_elements must be >= 2");
    if (!(spacing > 0.0)) throw std::domain_error("ArrayConfig: spacing must be positive");
    if (!(wavelength > 0.0)) throw std::domain_error("ArrayConfig: wavelength must be positive");
    if (ref_index != center_index(n_elements))
        throw std::domain_error("ArrayConfig: ref_index must be the center element");
}

bool SourcePlacement::in_fresnel_zone(const ArrayConfig& config) const {
    auto [lo, hi] = fresnel_bounds(config);
    return range > lo && range < hi;
}

void SourcePlacement::validate(const ArrayConfig& config, bool strict_fresnel) const {
    if (!(theta > -M_PI_2 && theta < M_PI_2))
        throw std::domain_error("SourcePlacement: theta must lie in (-pi/2, pi/2)");
    if (!(range > 0.0)) throw std::domain_error("SourcePlacement: range must be positive");
    if (strict_fresnel && !in_fresnel_zone(config))
        throw std::domain_error("SourcePlacement: range " + std::to_string(range) +
                                " lambda is outside the Fresnel zone");
}

double rayleigh_distance(double aperture, double wavelength) {
    if (!(aperture > 0.0) || !(wavelength > 0.0))
        throw std::domain_error("rayleigh_distance: inputs must be positive");
    return 2.0 * aperture * aperture / wavelength;
}

std::pair<double, double> fresnel_bounds(const ArrayConfig& config) {
    config.validate();
    double d_ap = config.aperture();
    double lower = 0.62 * std::sqrt(d_ap * d_ap * d_ap); // lambda = 1 in these units
    double upper = rayleigh_distance(d_ap, 1.0);
    return {lower, upper};
}

double exact_range(const SourcePlacement& source, const ArrayConfig& config, int n) {
    double dd = config.delta(n) * config.spacing;
    double r = source.range;
    return std::sqrt(r * r + dd * dd - 2.0 * r * dd * std::sin(source.theta));
}

namespace {

// psi_n = r_n / r and the exact phase argument 2*pi*r*(psi_n - 1), computed
// via psi^2 - 1 to stay accurate when delta*d << r.
struct ElementGeometry {
    double psi;
    double phase; // -(2 pi / lambda) * Phi_n, lambda-free in wavelength units
};

ElementGeometry element_geometry(const SourcePlacement& source, const ArrayConfig& config, int n) {
    double dd = config.delta(n) * config.spacing;
    double r = source.range;
    double x = (dd / r) * (dd / r) - 2.0 * dd * std::sin(source.theta) / r; // psi^2 - 1
    double psi = std::sqrt(1.0 + x);
    double phi = r * x / (psi + 1.0); // r*(psi - 1) without cancellation
    return {psi, -2.0 * M_PI * phi};
}

} // namespace

CVector near_field_steering(const SourcePlacement& source, const ArrayConfig& config) {
    CVector a(config.n_elements);
    for (int n = 1; n <= config.n_elements; ++n) {
        ElementGeometry g = element_geometry(source, config, n);
        a[n - 1] = std::polar(1.0 / g.psi, g.phase);
    }
    a[config.ref_index - 1] = cd{1.0, 0.0};
    return a;
}

CVector fresnel_steering(const SourcePlacement& source, const ArrayConfig& config) {
    FresnelParams fp = fresnel_params(source, config);
    CVector a(config.n_elements);
    for (int n = 1; n <= config.n_elements; ++n) {
        double delta = config.delta(n);
        double kappa = 1.0 / element_geometry(source, config, n).psi;
        a[n - 1] = std::polar(kappa, delta * fp.alpha - delta * delta * fp.beta);
    }
    a[config.ref_index - 1] = cd{1.0, 0.0};
    return a;
}

CVector far_field_steering(double theta, const ArrayConfig& config) {
    CVector a(config.n_elements);
    double step = 2.0 * M_PI * config.spacing * std::sin(theta);
    for (int n = 0; n < config.n_elements; ++n) a[n] = std::polar(1.0, n * step);
    return a;
}

FresnelParams fresnel_params(const SourcePlacement& source, const ArrayConfig& config) {
    double d = config.spacing;
    double c = std::cos(source.theta);
    return {2.0 * M_PI * d * std::sin(source.theta),
            M_PI * d * d * c * c / source.range};
}

} // namespace nfdoa
