#pragma once

#include <utility>

#include "nfdoa/cmatrix.hpp"

namespace nfdoa {

// Uniform linear array geometry. Lengths are carried as multiples of the
// carrier wavelength; the wavelength in meters is kept only for reporting.
struct ArrayConfig {
    int n_elements = 65;
    double spacing = 0.5;        // element spacing d, in wavelengths
    double wavelength = 0.0107;  // meters (28 GHz carrier)
    int ref_index = 33;          // 1-based center element n_c

    static int center_index(int n) { return (n % 2 == 1) ? (n + 1) / 2 : n / 2; }

    static ArrayConfig ula(int n, double spacing = 0.5, double wavelength = 0.0107) {
        return ArrayConfig{n, spacing, wavelength, center_index(n)};
    }

    double aperture() const { return (n_elements - 1) * spacing; } // D, in wavelengths
    double delta(int n) const { return static_cast<double>(n - ref_index); } // n is 1-based

    void validate() const;
};

struct SourcePlacement {
    double theta = 0.0; // radians, in (-pi/2, pi/2)
    double range = 0.0; // wavelengths

    // strict: out-of-zone range is an error; otherwise callers may warn
    void validate(const ArrayConfig& config, bool strict_fresnel = false) const;
    bool in_fresnel_zone(const ArrayConfig& config) const;
};

struct FresnelParams {
    double alpha = 0.0; // radians per element offset
    double beta = 0.0;  // radians per squared element offset, >= 0
};

// 2*D^2/lambda in the unit both arguments share.
double rayleigh_distance(double aperture, double wavelength);

// (0.62*sqrt(D^3/lambda), 2*D^2/lambda), in wavelengths.
std::pair<double, double> fresnel_bounds(const ArrayConfig& config);

// Source-to-element distance by the law of cosines, in wavelengths. n is 1-based.
double exact_range(const SourcePlacement& source, const ArrayConfig& config, int n);

// Spherical-wavefront steering vector, amplitude r/r_n and exact phase;
// the reference element gets exactly 1+0j.
CVector near_field_steering(const SourcePlacement& source, const ArrayConfig& config);

// Second-order Taylor phase (delta*alpha - delta^2*beta) with the exact amplitude.
CVector fresnel_steering(const SourcePlacement& source, const ArrayConfig& config);

// Plane-wave steering referenced to the first element: exp(j*2*pi*(n-1)*d*sin(theta)).
CVector far_field_steering(double theta, const ArrayConfig& config);

FresnelParams fresnel_params(const SourcePlacement& source, const ArrayConfig& config);

} // namespace nfdoa
