#include "nfdoa/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace nfdoa {

namespace {

void hermitian_symmetrize(CMatrix& m) {
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = i; j < m.cols(); ++j) {
            cd v = 0.5 * (m(i, j) + std::conj(m(j, i)));
            m(i, j) = v;
            m(j, i) = std::conj(v);
        }
        m(i, i) = cd{m(i, i).real(), 0.0};
    }
}

} // namespace

CovMatrix sample_covariance(const SnapshotSet& snapshots) {
    int n = snapshots.data.rows();
    int k = snapshots.data.cols();
    if (k < 1) throw std::domain_error("sample_covariance: need at least one snapshot");
    CMatrix r(n, n);
    for (int s = 0; s < k; ++s) {
        for (int i = 0; i < n; ++i) {
            cd yi = snapshots.data(i, s);
            for (int j = i; j < n; ++j) r(i, j) += yi * std::conj(snapshots.data(j, s));
        }
    }
    double inv_k = 1.0 / k;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            r(i, j) *= inv_k;
            r(j, i) = std::conj(r(i, j));
        }
    hermitian_symmetrize(r);
    return {std::move(r), CovKind::raw};
}

CovMatrix analytic_covariance(const std::vector<SourcePlacement>& sources,
                              const ArrayConfig& config, double noise_var) {
    int n = config.n_elements;
    CMatrix r(n, n);
    for (const auto& src : sources) {
        CVector a = near_field_steering(src, config);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(i, j) += a[i] * std::conj(a[j]);
    }
    for (int i = 0; i < n; ++i) r(i, i) += noise_var;
    hermitian_symmetrize(r);
    return {std::move(r), CovKind::raw};
}

CovMatrix far_field_ideal_covariance(const std::vector<SourcePlacement>& sources,
                                     const ArrayConfig& config, double noise_var) {
    int n = config.n_elements;
    CMatrix r(n, n);
    std::vector<double> alphas;
    for (const auto& src : sources) alphas.push_back(fresnel_params(src, config).alpha);
    for (int t = 0; t < n; ++t) { // one value per lag keeps it exactly Toeplitz
        cd v{};
        for (double alpha : alphas) v += std::polar(1.0, t * alpha);
        if (t == 0) v += noise_var;
        for (int p = 0; p + t < n; ++p) {
            r(p, p + t) = std::conj(v); // row p, column p+t: (p - q) = -t
            r(p + t, p) = v;
        }
    }
    return {std::move(r), CovKind::raw};
}

double approximation_error(const CovMatrix& raw, const CovMatrix& ideal, int p, int t) {
    int n = raw.dim();
    if (ideal.dim() != n) throw std::domain_error("approximation_error: dimension mismatch");
    int q = p + t;
    if (p < 1 || p > n || q < 1 || q > n) throw std::out_of_range("approximation_error: index out of range");
    return std::norm(raw.data(p - 1, q - 1) - ideal.data(p - 1, q - 1));
}

CovMatrix reconstruct_vcm(const CovMatrix& raw) {
    if (raw.kind != CovKind::raw) throw std::domain_error("reconstruct_vcm: expects a raw covariance");
    int n = raw.dim();
    int nc = ArrayConfig::center_index(n); // 1-based

    // chi_l(t) = floor(nc - t/2), chi_r(t) = floor(nc - (t-1)/2), 1-based.
    // Both pairs sit on diagonal q - p = t; for even N the extreme lag can
    // push the row one step outside the band, so it is clamped to the
    // nearest valid entry of the same diagonal.
    auto chi_l = [nc](int t) { return static_cast<int>(std::floor(nc - t / 2.0)); };
    auto chi_r = [nc](int t) { return static_cast<int>(std::floor(nc - (t - 1) / 2.0)); };
    auto entry = [&raw, n](int row, int t) {
        row = std::clamp(row, 1, n - t);
        return raw.data(row - 1, row + t - 1);
    };

    std::vector<cd> lag(n); // lag[t] = value on diagonal q - p = t, t >= 0
    for (int t = 0; t < n; ++t) lag[t] = 0.5 * (entry(chi_l(t), t) + entry(chi_r(t), t));

    CMatrix m(n, n);
    for (int t = 0; t < n; ++t) {
        for (int p = 0; p + t < n; ++p) {
            m(p, p + t) = lag[t];
            m(p + t, p) = std::conj(lag[t]);
        }
    }
    for (int i = 0; i < n; ++i) m(i, i) = cd{m(i, i).real(), 0.0};
    return {std::move(m), CovKind::vcm};
}

CovMatrix crop_vcm(const CovMatrix& vcm, int n_in) {
    if (vcm.kind != CovKind::vcm) throw std::domain_error("crop_vcm: expects a reconstructed VCM");
    int n = vcm.dim();
    if (n_in >= n || n_in < 1) throw std::domain_error("crop_vcm: n_in must be in [1, N)");
    if ((n - n_in) % 2 != 0) throw std::domain_error("crop_vcm: N - n_in must be even");
    int off = (n - n_in) / 2;
    CMatrix m(n_in, n_in);
    for (int i = 0; i < n_in; ++i)
        for (int j = 0; j < n_in; ++j) m(i, j) = vcm.data(off + i, off + j);
    return {std::move(m), CovKind::cropped};
}

EigResult hermitian_eig(const CMatrix& input) {
    int n = input.rows();
    if (n != input.cols()) throw std::domain_error("hermitian_eig: matrix must be square");
    CMatrix a = input;
    CMatrix v = CMatrix::identity(n);

    auto off_norm = [&a, n]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += std::norm(a(i, j));
        return std::sqrt(2.0 * s);
    };

    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double threshold = 1e-12 * scale;
    const int max_sweeps = 100;

    int sweep = 0;
    for (; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                cd apq = a(p, q);
                double mag = std::abs(apq);
                if (mag <= 1e-300) continue;
                cd phase = apq / mag; // e^{i phi}
                double app = a(p, p).real();
                double aqq = a(q, q).real();

                // zero (p,q): tan(2 theta) = 2|apq| / (app - aqq)
                double t; // tan(theta), smaller-angle root
                double diff = app - aqq;
                if (diff == 0.0) {
                    t = 1.0;
                } else {
                    double tau = diff / (2.0 * mag);
                    t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                }
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                cd sp = s * phase;            // s e^{i phi}
                cd spc = s * std::conj(phase); // s e^{-i phi}

                // A <- G^H A G with G = [[c, -s e^{i phi}], [s e^{-i phi}, c]]
                for (int i = 0; i < n; ++i) { // columns p, q
                    cd aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip + spc * aiq;
                    a(i, q) = -sp * aip + c * aiq;
                }
                for (int j = 0; j < n; ++j) { // rows p, q
                    cd apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj + sp * aqj;
                    a(q, j) = -spc * apj + c * aqj;
                }
                a(p, q) = cd{};
                a(q, p) = cd{};
                a(p, p) = cd{a(p, p).real(), 0.0};
                a(q, q) = cd{a(q, q).real(), 0.0};

                for (int i = 0; i < n; ++i) { // V <- V G
                    cd vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip + spc * viq;
                    v(i, q) = -sp * vip + c * viq;
                }
            }
        }
    }
    if (off_norm() > threshold)
        throw NumericError("hermitian_eig: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps, off-diagonal residual " + std::to_string(off_norm() / scale));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = a(i, i).real();
    std::stable_sort(order.begin(), order.end(), [&diag](int x, int y) { return diag[x] > diag[y]; });

    EigResult out;
    out.values.resize(n);
    out.vectors = CMatrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

void canonicalize_column(CVector& v, int ref_row) {
    cd ref = v[ref_row];
    if (std::abs(ref) < 1e-300) { // degenerate gauge; fall back to the largest entry
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[best])) best = i;
        ref = v[best];
        if (std::abs(ref) < 1e-300) return;
    }
    cd rot = std::conj(ref) / std::abs(ref);
    for (cd& z : v) z *= rot;
    v[ref_row] = cd{std::abs(v[ref_row]) == 0.0 ? 0.0 : v[ref_row].real(), 0.0};
}

Subspace signal_subspace(const CovMatrix& m, int n_sources) {
    int n = m.dim();
    if (n_sources < 1 || n_sources >= n)
        throw std::domain_error("signal_subspace: need 1 <= M < dimension");
    EigResult eig = hermitian_eig(m);

    Subspace out;
    out.vectors = CMatrix(n, n_sources);
    out.eigenvalues.assign(eig.values.begin(), eig.values.begin() + n_sources);
    out.noise_floor =
        std::accumulate(eig.values.begin() + n_sources, eig.values.end(), 0.0) / (n - n_sources);

    int ref_row = ArrayConfig::center_index(n) - 1;
    for (int j = 0; j < n_sources; ++j) {
        CVector col = eig.vectors.col(j);
        canonicalize_column(col, ref_row);
        out.vectors.set_col(j, col);
    }
    return out;
}

std::vector<double> music_spectrum_far(const CovMatrix& m, int n_sources, double spacing,
                                       const std::vector<double>& theta_grid) {
    int n = m.dim();
    if (n_sources >= n) throw std::domain_error("music_spectrum_far: M must be < dimension");
    Subspace sub = signal_subspace(m, n_sources);

    ArrayConfig probe = ArrayConfig::ula(n, spacing);
    std::vector<double> spectrum(theta_grid.size());
    for (std::size_t g = 0; g < theta_grid.size(); ++g) {
        CVector a = far_field_steering(theta_grid[g], probe);
        double denom = norm2(a);
        for (int j = 0; j < n_sources; ++j) denom -= std::norm(dot_conj(sub.vectors.col(j), a));
        spectrum[g] = 1.0 / std::max(denom, 1e-300);
    }
    return spectrum;
}

namespace {

nlohmann::json matrix_to_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j)
            row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const nlohmann::json& rows) {
    int r = static_cast<int>(rows.size());
    int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
    CMatrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = cd{rows[i][j][0].get<double>(), rows[i][j][1].get<double>()};
    return m;
}

} // namespace

std::string cov_to_json(const CovMatrix& m) {
    static const char* names[] = {"raw", "vcm", "cropped"};
    nlohmann::json j{{"kind", names[static_cast<int>(m.kind)]}, {"data", matrix_to_json(m.data)}};
    return j.dump();
}

CovMatrix cov_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::string kind = j.at("kind").get<std::string>();
    CovKind k = kind == "vcm" ? CovKind::vcm : kind == "cropped" ? CovKind::cropped : CovKind::raw;
    return {matrix_from_json(j.at("data")), k};
}

std::string subspace_to_json(const Subspace& s) {
    nlohmann::json j{{"vectors", matrix_to_json(s.vectors)},
                     {"eigenvalues", s.eigenvalues},
                     {"noise_floor", s.noise_floor}};
    return j.dump();
}

Subspace subspace_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Subspace s;
    s.vectors = matrix_from_json(j.at("vectors"));
    s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    s.noise_floor = j.at("noise_floor").get<double>();
    return s;
}

} // namespace nfdoa
