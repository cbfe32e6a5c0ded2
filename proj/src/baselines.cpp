#include "nfdoa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nfdoa {

MusicGrid MusicGrid::regular(double theta_lo_deg, double theta_hi_deg, double theta_step_deg,
                             double range_lo, double range_hi, double range_step) {
    MusicGrid g;
    const double deg = M_PI / 180.0;
    for (double t = theta_lo_deg; t <= theta_hi_deg + 1e-9; t += theta_step_deg)
        if (t > -90.0 && t < 90.0) g.theta_axis.push_back(t * deg);
    for (double r = range_lo; r <= range_hi + 1e-9; r += range_step) g.range_axis.push_back(r);
    return g;
}

void MusicGrid::validate() const {
    if (theta_axis.empty() || range_axis.empty())
        throw std::domain_error("MusicGrid: empty axis");
    for (std::size_t i = 1; i < theta_axis.size(); ++i)
        if (theta_axis[i] <= theta_axis[i - 1]) throw std::domain_error("MusicGrid: theta axis not increasing");
    for (std::size_t i = 1; i < range_axis.size(); ++i)
        if (range_axis[i] <= range_axis[i - 1]) throw std::domain_error("MusicGrid: range axis not increasing");
}

namespace {

// Parabolic vertex offset through three log-spectrum samples, in grid steps.
double parabolic_offset(double ym, double y0, double yp) {
    double denom = ym - 2.0 * y0 + yp;
    if (std::abs(denom) < 1e-300) return 0.0;
    double off = 0.5 * (ym - yp) / denom;
    return std::clamp(off, -0.5, 0.5);
}

} // namespace

MusicResult near_field_music(const CovMatrix& raw, int n_sources, const MusicGrid& grid,
                             const ArrayConfig& config) {
    grid.validate();
    int n = raw.dim();
    if (n_sources >= n) throw std::domain_error("near_field_music: M must be < N");
    if (n != config.n_elements) throw std::domain_error("near_field_music: covariance/config mismatch");

    Subspace sub = signal_subspace(raw, n_sources);
    int nt = static_cast<int>(grid.theta_axis.size());
    int nr = static_cast<int>(grid.range_axis.size());

    MusicResult result;
    result.spectrum.resize(static_cast<std::size_t>(nt) * nr);
    std::vector<CVector> sig_cols(n_sources);
    for (int j = 0; j < n_sources; ++j) sig_cols[j] = sub.vectors.col(j);

    for (int t = 0; t < nt; ++t) {
        for (int r = 0; r < nr; ++r) {
            SourcePlacement probe{grid.theta_axis[t], grid.range_axis[r]};
            CVector a = near_field_steering(probe, config);
            double denom = norm2(a);
            for (int j = 0; j < n_sources; ++j) denom -= std::norm(dot_conj(sig_cols[j], a));
            result.spectrum[static_cast<std::size_t>(t) * nr + r] = 1.0 / std::max(denom, 1e-300);
        }
    }

    // Top-M local maxima (non-strict, 8-neighborhood), suppressing duplicates
    // that share a theta neighborhood.
    struct Peak { int t, r; double p; };
    std::vector<Peak> peaks;
    for (int t = 0; t < nt; ++t) {
        for (int r = 0; r < nr; ++r) {
            double p = result.at(t, r, nr);
            bool is_max = true;
            for (int dt = -1; dt <= 1 && is_max; ++dt)
                for (int dr = -1; dr <= 1 && is_max; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    int tt = t + dt, rr = r + dr;
                    if (tt < 0 || tt >= nt || rr < 0 || rr >= nr) continue;
                    if (result.at(tt, rr, nr) > p) is_max = false;
                }
            if (is_max) peaks.push_back({t, r, p});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.p > b.p; });

    double theta_step = nt > 1 ? grid.theta_axis[1] - grid.theta_axis[0] : 0.0;
    double range_step = nr > 1 ? grid.range_axis[1] - grid.range_axis[0] : 0.0;
    const int exclusion = 20; // grid steps in theta between distinct sources

    for (const Peak& pk : peaks) {
        if (static_cast<int>(result.estimates.size()) >= n_sources) break;
        bool taken = false;
        for (const MusicEstimate& e : result.estimates)
            if (std::abs(e.theta - grid.theta_axis[pk.t]) < exclusion * theta_step) taken = true;
        if (taken) continue;

        double theta = grid.theta_axis[pk.t];
        if (pk.t > 0 && pk.t < nt - 1) {
            double ym = std::log10(result.at(pk.t - 1, pk.r, nr));
            double y0 = std::log10(result.at(pk.t, pk.r, nr));
            double yp = std::log10(result.at(pk.t + 1, pk.r, nr));
            theta += parabolic_offset(ym, y0, yp) * theta_step;
        }
        double range = grid.range_axis[pk.r];
        if (pk.r > 0 && pk.r < nr - 1) {
            double ym = std::log10(result.at(pk.t, pk.r - 1, nr));
            double y0 = std::log10(result.at(pk.t, pk.r, nr));
            double yp = std::log10(result.at(pk.t, pk.r + 1, nr));
            range += parabolic_offset(ym, y0, yp) * range_step;
        }
        result.estimates.push_back({theta, range});
    }
    return result;
}

} // namespace nfdoa
