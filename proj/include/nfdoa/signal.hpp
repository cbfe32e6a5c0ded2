#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nfdoa/array.hpp"
#include "nfdoa/cmatrix.hpp"
#include "nfdoa/errors.hpp"

namespace nfdoa {

struct NoiseSpec {
    double snr_db = 10.0; // +infinity disables noise
    std::uint64_t seed = 0;

    static constexpr double kNoiseless = std::numeric_limits<double>::infinity();

    double noise_variance() const { return std::pow(10.0, -snr_db / 10.0); }
};

// K received snapshots y(k) stacked as columns of an N x K matrix.
struct SnapshotSet {
    CMatrix data;
    ArrayConfig config;
    std::vector<SourcePlacement> truth;

    int n_snapshots() const { return data.cols(); }
    int n_sources() const { return static_cast<int>(truth.size()); }
};

// Unit-power circularly-symmetric complex Gaussian symbols, M x K.
CMatrix generate_source_symbols(int n_sources, int n_snapshots, std::uint64_t seed);

// y(k) = sum_m a_m(theta_m, r_m) s_m(k) + z(k), z ~ CN(0, sigma^2 I),
// sigma^2 = 10^(-snr_db/10) against unit-power sources.
SnapshotSet received_snapshots(const std::vector<SourcePlacement>& sources,
                               const ArrayConfig& config, int n_snapshots,
                               const NoiseSpec& noise);

// Binary layout: u64 little-endian header (N, K, M), then the N x K matrix
// row-major as interleaved re/im doubles.
void save_snapshots(const SnapshotSet& set, const std::string& path);
SnapshotSet load_snapshots(const std::string& path, const ArrayConfig& config);

} // namespace nfdoa
