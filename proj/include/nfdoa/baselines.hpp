#pragma once

#include <vector>

#include "nfdoa/covariance.hpp"

namespace nfdoa {

// 2-D search grid for near-field MUSIC; theta in radians, range in wavelengths.
struct MusicGrid {
    std::vector<double> theta_axis;
    std::vector<double> range_axis;

    static MusicGrid regular(double theta_lo_deg, double theta_hi_deg, double theta_step_deg,
                             double range_lo, double range_hi, double range_step);
    void validate() const;
};

struct MusicEstimate {
    double theta = 0.0; // radians, parabolic-refined
    double range = 0.0; // wavelengths, parabolic-refined
};

struct MusicResult {
    std::vector<double> spectrum; // theta-major: spectrum[t * n_range + r]
    std::vector<MusicEstimate> estimates;

    double at(int t, int r, int n_range) const { return spectrum[static_cast<std::size_t>(t) * n_range + r]; }
};

// Spherical-wavefront MUSIC over the full (theta, range) grid with exact
// steering; estimates are the top-M 2-D local maxima.
MusicResult near_field_music(const CovMatrix& raw, int n_sources, const MusicGrid& grid,
                             const ArrayConfig& config);

} // namespace nfdoa
