#include "nfdoa/signal.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "nfdoa/rng.hpp"

namespace nfdoa {

CMatrix generate_source_symbols(int n_sources, int n_snapshots, std::uint64_t seed) {
    if (n_sources < 1 || n_snapshots < 1)
        throw std::domain_error("generate_source_symbols: counts must be >= 1");
    CMatrix s(n_sources, n_snapshots);
    for (int m = 0; m < n_sources; ++m) {
        RandomStream rs(RandomStream::derive(seed, 0x73796d626f6cULL, static_cast<std::uint64_t>(m)));
        for (int k = 0; k < n_snapshots; ++k) s(m, k) = rs.next_cn();
    }
    return s;
}

SnapshotSet received_snapshots(const std::vector<SourcePlacement>& sources,
                               const ArrayConfig& config, int n_snapshots,
                               const NoiseSpec& noise) {
    config.validate();
    if (n_snapshots <= 0) throw std::domain_error("received_snapshots: K must be positive");
    for (const auto& src : sources) src.validate(config);

    int n = config.n_elements;
    int m_count = static_cast<int>(sources.size());
    CMatrix manifold(n, m_count);
    for (int m = 0; m < m_count; ++m) manifold.set_col(m, near_field_steering(sources[m], config));

    CMatrix symbols = m_count > 0 ? generate_source_symbols(m_count, n_snapshots, noise.seed)
                                  : CMatrix(0, n_snapshots);

    double sigma2 = noise.noise_variance();
    double sigma_part = std::sqrt(sigma2 / 2.0); // per real/imag component

    SnapshotSet out{CMatrix(n, n_snapshots), config, sources};
    RandomStream zs(RandomStream::derive(noise.seed, 0x6e6f697365ULL)); // noise stream
    for (int k = 0; k < n_snapshots; ++k) {
        for (int i = 0; i < n; ++i) {
            cd y{};
            for (int m = 0; m < m_count; ++m) y += manifold(i, m) * symbols(m, k);
            if (sigma2 > 0.0) {
                double g0, g1;
                zs.next_gaussian_pair(g0, g1);
                y += cd{sigma_part * g0, sigma_part * g1};
            }
            out.data(i, k) = y;
        }
    }
    return out;
}

void save_snapshots(const SnapshotSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_snapshots: cannot open " + path);
    auto put_u64 = [&f](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        f.write(reinterpret_cast<const char*>(b), 8);
    };
    put_u64(static_cast<std::uint64_t>(set.data.rows()));
    put_u64(static_cast<std::uint64_t>(set.data.cols()));
    put_u64(static_cast<std::uint64_t>(set.truth.size()));
    for (int i = 0; i < set.data.rows(); ++i) {
        for (int k = 0; k < set.data.cols(); ++k) {
            double re = set.data(i, k).real(), im = set.data(i, k).imag();
            f.write(reinterpret_cast<const char*>(&re), sizeof(double));
            f.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    }
    if (!f) throw IoError("save_snapshots: write failed for " + path);
}

SnapshotSet load_snapshots(const std::string& path, const ArrayConfig& config) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_snapshots: cannot open " + path);
    auto get_u64 = [&f]() {
        unsigned char b[8];
        f.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    };
    std::uint64_t n = get_u64(), k = get_u64(), m = get_u64();
    if (!f || n != static_cast<std::uint64_t>(config.n_elements))
        throw IoError("load_snapshots: header mismatch in " + path);
    SnapshotSet set{CMatrix(static_cast<int>(n), static_cast<int>(k)), config, {}};
    set.truth.resize(m); // placements are not stored in the payload
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t j = 0; j < k; ++j) {
            double re, im;
            f.read(reinterpret_cast<char*>(&re), sizeof(double));
            f.read(reinterpret_cast<char*>(&im), sizeof(double));
            set.data(static_cast<int>(i), static_cast<int>(j)) = cd{re, im};
        }
    }
    if (!f) throw IoError("load_snapshots: truncated file " + path);
    return set;
}

} // namespace nfdoa
