#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nfdoa/baselines.hpp"
#include "nfdoa/covariance.hpp"
#include "nfdoa/cvnn.hpp"
#include "nfdoa/signal.hpp"

namespace nfdoa {

struct DatasetSpec {
    std::vector<double> distances = {400.0, 800.0, 1200.0, 1600.0}; // wavelengths
    double theta_lo_deg = -88.0;
    double theta_hi_deg = 88.0;
    double theta_step_deg = 0.5;
    int snapshots = 100;
    double snr_db = 10.0;
    std::uint64_t seed = 1;
    int n_in = 33;
    ArrayConfig array = ArrayConfig::ula(65);
    enum class Role { train, test } role = Role::train;
    bool strict_fresnel = false;

    // Grid points at lo, lo+step, ...; endpoints outside the open (-90, 90)
    // interval are dropped (theta = +-90 deg is not a valid placement).
    std::vector<double> theta_grid_deg() const;
};

struct Sample {
    CVector feature;   // canonicalized subspace vector, n_in entries
    double label;      // theta in radians
    double distance;   // wavelengths, kept for stratified splits
    double theta_deg;
};

// Snapshot -> covariance -> VCM -> crop -> canonicalized top eigenvectors.
// Column m of the result is the feature for source m.
CMatrix features_from_snapshots(const SnapshotSet& snapshots, int n_in, int n_sources);

std::vector<Sample> build_dataset(const DatasetSpec& spec);

// Binary dataset: u64 header (n_samples, n_in), then per sample the label in
// radians, the distance, theta in degrees, and n_in interleaved re/im doubles.
void save_dataset(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> load_dataset(const std::string& path);

struct History {
    std::vector<double> train_loss;
    std::vector<double> val_loss;

    std::string to_csv() const; // epoch,train_loss,val_loss
    void save_csv(const std::string& path) const;
};

// Mini-batch training with a deterministic shuffle; validation split is
// stratified by distance. Throws NumericError when the loss diverges.
History train_model(Model& model, const std::vector<Sample>& dataset, TrainConfig config,
                    double val_fraction = 0.1);

struct EvalCondition {
    double snr_db = 0.0;
    int snapshots = 0;
    double distance = 0.0;
    int n_antennas = 0;
};

struct EvalReport {
    double rmse_deg = 0.0;
    double mae_deg = 0.0;
    std::vector<double> errors_deg; // signed, per sample
    EvalCondition condition;

    std::string to_json() const;
};

EvalReport evaluate(Model& model, const std::vector<Sample>& test_set);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    void save(const std::string& path) const;
};

// Random-draw Monte-Carlo settings shared by the comparison experiments.
struct TrialProtocol {
    double theta_lo_deg = -85.0;
    double theta_hi_deg = 85.0;
    std::vector<double> distances = {1000.0};
    int trials = 100;
    std::uint64_t seed = 1;
};

using NamedModel = std::pair<std::string, Model*>;

CsvTable experiment_rmse_vs_snr(const std::vector<NamedModel>& models, bool include_music,
                                const MusicGrid& music_grid, const std::vector<double>& snr_list,
                                int snapshots, const TrialProtocol& protocol,
                                const ArrayConfig& config, int n_in);

CsvTable experiment_rmse_vs_snapshots(const std::vector<NamedModel>& models, bool include_music,
                                      const MusicGrid& music_grid,
                                      const std::vector<int>& snapshot_list, double snr_db,
                                      const TrialProtocol& protocol, const ArrayConfig& config,
                                      int n_in);

// Deterministic theta grids at each distance; template's distances are ignored.
CsvTable experiment_rmse_vs_distance(Model& model, const std::vector<double>& distances,
                                     DatasetSpec test_template);

// Same trained model applied to larger arrays via the fixed-size crop.
CsvTable experiment_crop_invariance(Model& model, const std::vector<int>& n_antennas,
                                    DatasetSpec test_template);

CsvTable experiment_boxplot(const std::vector<NamedModel>& models,
                            const std::vector<double>& directions_deg, double range, int trials,
                            double snr_db, int snapshots, const ArrayConfig& config, int n_in,
                            std::uint64_t seed);

// Far-field MUSIC spectra of the raw covariance and of the reconstructed VCM
// for a two-source scene (analytic covariance).
CsvTable experiment_beampattern(double theta1_deg, double theta2_deg, double range1, double range2,
                                const ArrayConfig& config, double noise_var,
                                double theta_step_deg);

// Local maxima of a 1-D spectrum, largest first, as (theta_deg, power).
std::vector<std::pair<double, double>> spectrum_peaks(const std::vector<double>& spectrum,
                                                      const std::vector<double>& theta_deg);

// Mean of the normalized spectrum outside mask_deg-wide windows around the
// given true directions.
double mean_sidelobe_level(const std::vector<double>& spectrum,
                           const std::vector<double>& theta_deg,
                           const std::vector<double>& true_dirs_deg, double mask_deg);

} // namespace nfdoa
