#pragma once

#include <string>
#include <vector>

#include "nfdoa/array.hpp"
#include "nfdoa/cmatrix.hpp"
#include "nfdoa/errors.hpp"
#include "nfdoa/signal.hpp"

namespace nfdoa {

enum class CovKind { raw, vcm, cropped };

struct CovMatrix {
    CMatrix data;
    CovKind kind = CovKind::raw;

    int dim() const { return data.rows(); }
};

// (1/K) sum_k y(k) y(k)^H, Hermitian-symmetrized.
CovMatrix sample_covariance(const SnapshotSet& snapshots);

// Expectation-form covariance A A^H + sigma^2 I with exact near-field steering
// and unit-power uncorrelated sources; lets structure checks run without
// Monte-Carlo error.
CovMatrix analytic_covariance(const std::vector<SourcePlacement>& sources,
                              const ArrayConfig& config, double noise_var);

// [R]_{p,q} = sum_m exp(j(p-q) alpha_m) + sigma^2 delta(p-q): the far-field
// ideal against which VCM decoupling is judged.
CovMatrix far_field_ideal_covariance(const std::vector<SourcePlacement>& sources,
                                     const ArrayConfig& config, double noise_var);

// Squared magnitude of [raw]_{p,p+t} - [ideal]_{p,p+t}; p is 1-based.
double approximation_error(const CovMatrix& raw, const CovMatrix& ideal, int p, int t);

// Virtual covariance matrix: per lag t the entries at chi_l(t)/chi_r(t) are
// averaged and broadcast along the diagonal, giving an exactly Hermitian
// Toeplitz matrix that approximates the far-field covariance.
CovMatrix reconstruct_vcm(const CovMatrix& raw);

// Central n_in x n_in block; requires n_in < N with N - n_in even.
CovMatrix crop_vcm(const CovMatrix& vcm, int n_in);

struct EigResult {
    std::vector<double> values; // descending
    CMatrix vectors;            // columns, unitary
};

// Cyclic Jacobi for Hermitian matrices via 2x2 unitary rotations.
// Off-diagonal Frobenius threshold 1e-12 * |m|_F, sweep cap 100.
EigResult hermitian_eig(const CMatrix& m);
inline EigResult hermitian_eig(const CovMatrix& m) { return hermitian_eig(m.data); }

struct Subspace {
    CMatrix vectors;                // N_dim x M, columns canonicalized
    std::vector<double> eigenvalues; // top M, descending
    double noise_floor = 0.0;        // mean of the discarded eigenvalues
};

// Gauge fix: rotate so the entry at the center row is real and >= 0.
void canonicalize_column(CVector& v, int ref_row);

Subspace signal_subspace(const CovMatrix& m, int n_sources);

// MUSIC pseudo-spectrum 1/(a^H Xi_z Xi_z^H a) with far-field steering of the
// matrix's own dimension; used on reconstructed/cropped VCMs.
std::vector<double> music_spectrum_far(const CovMatrix& m, int n_sources, double spacing,
                                       const std::vector<double>& theta_grid);

// JSON forms ([re, im] pairs) for golden-file tests.
std::string cov_to_json(const CovMatrix& m);
CovMatrix cov_from_json(const std::string& text);
std::string subspace_to_json(const Subspace& s);
Subspace subspace_from_json(const std::string& text);

} // namespace nfdoa
