#include "nfdoa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nfdoa/rng.hpp"

namespace nfdoa {

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<double> DatasetSpec::theta_grid_deg() const {
    std::vector<double> grid;
    for (double t = theta_lo_deg; t <= theta_hi_deg + 1e-9; t += theta_step_deg)
        if (t > -90.0 + 1e-12 && t < 90.0 - 1e-12) grid.push_back(t);
    return grid;
}

CMatrix features_from_snapshots(const SnapshotSet& snapshots, int n_in, int n_sources) {
    CovMatrix raw = sample_covariance(snapshots);
    CovMatrix vcm = reconstruct_vcm(raw);
    CovMatrix cropped = n_in < vcm.dim() ? crop_vcm(vcm, n_in) : std::move(vcm);
    Subspace sub = signal_subspace(cropped, n_sources);
    return sub.vectors;
}

std::vector<Sample> build_dataset(const DatasetSpec& spec) {
    spec.array.validate();
    std::vector<double> thetas = spec.theta_grid_deg();
    std::size_t total = spec.distances.size() * thetas.size();
    std::vector<Sample> samples(total);

    int fresnel_warnings = 0;
    auto [zone_lo, zone_hi] = fresnel_bounds(spec.array);
    for (double r : spec.distances) {
        if (r <= zone_lo || r >= zone_hi) {
            ++fresnel_warnings;
            if (spec.strict_fresnel)
                throw std::domain_error("build_dataset: distance " + std::to_string(r) +
                                        " lambda outside the Fresnel zone");
        }
    }
    if (fresnel_warnings > 0)
        std::cerr << "build_dataset: warning: " << fresnel_warnings
                  << " distance(s) outside the Fresnel zone (" << zone_lo << ", " << zone_hi
                  << ") lambda\n";

    auto make_sample = [&spec, &thetas](std::size_t idx) {
        std::size_t d_idx = idx / thetas.size();
        std::size_t t_idx = idx % thetas.size();
        SourcePlacement src{thetas[t_idx] * kDeg, spec.distances[d_idx]};
        NoiseSpec noise{spec.snr_db, RandomStream::derive(spec.seed, 0x64617461ULL, idx)};
        SnapshotSet snaps = received_snapshots({src}, spec.array, spec.snapshots, noise);
        CMatrix features = features_from_snapshots(snaps, spec.n_in, 1);
        return Sample{features.col(0), src.theta, src.range, thetas[t_idx]};
    };

    unsigned workers = std::min(std::thread::hardware_concurrency(), 8u);
    if (workers <= 1 || total < 16) {
        for (std::size_t i = 0; i < total; ++i) samples[i] = make_sample(i);
        return samples;
    }
    std::vector<std::future<void>> futures;
    std::size_t chunk = (total + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        futures.push_back(std::async(std::launch::async, [lo, hi, &samples, &make_sample]() {
            for (std::size_t i = lo; i < hi; ++i) samples[i] = make_sample(i);
        }));
    }
    for (auto& f : futures) f.get();
    return samples;
}

void save_dataset(const std::vector<Sample>& samples, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_dataset: cannot open " + path);
    auto put_u64 = [&f](std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&f](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    std::uint64_t n_in = samples.empty() ? 0 : samples[0].feature.size();
    put_u64(samples.size());
    put_u64(n_in);
    for (const Sample& s : samples) {
        put_f64(s.label);
        put_f64(s.distance);
        put_f64(s.theta_deg);
        for (const cd& z : s.feature) {
            put_f64(z.real());
            put_f64(z.imag());
        }
    }
    if (!f) throw IoError("save_dataset: write failed for " + path);
}

std::vector<Sample> load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_dataset: cannot open " + path);
    auto get_u64 = [&f]() {
        std::uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&f]() {
        double v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    std::uint64_t n = get_u64(), n_in = get_u64();
    std::vector<Sample> samples(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        samples[i].label = get_f64();
        samples[i].distance = get_f64();
        samples[i].theta_deg = get_f64();
        samples[i].feature.resize(n_in);
        for (std::uint64_t j = 0; j < n_in; ++j) {
            double re = get_f64(), im = get_f64();
            samples[i].feature[j] = cd{re, im};
        }
    }
    if (!f) throw IoError("load_dataset: truncated file " + path);
    return samples;
}

std::string History::to_csv() const {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < train_loss.size(); ++e)
        out << (e + 1) << ',' << fmt(train_loss[e]) << ','
            << fmt(e < val_loss.size() ? val_loss[e] : std::nan("")) << '\n';
    return out.str();
}

void History::save_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("History: cannot open " + path);
    f << to_csv();
}

History train_model(Model& model, const std::vector<Sample>& dataset, TrainConfig config,
                    double val_fraction) {
    config.validate();
    if (dataset.empty()) throw std::domain_error("train_model: empty dataset");

    // Stratified validation split: every k-th sample of each distance group.
    std::vector<std::size_t> train_idx, val_idx;
    if (val_fraction > 0.0) {
        int k = std::max(2, static_cast<int>(std::lround(1.0 / val_fraction)));
        std::vector<double> seen;
        std::vector<int> group_pos;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            std::size_t g = 0;
            for (; g < seen.size(); ++g)
                if (seen[g] == dataset[i].distance) break;
            if (g == seen.size()) {
                seen.push_back(dataset[i].distance);
                group_pos.push_back(0);
            }
            if (group_pos[g]++ % k == k / 2)
                val_idx.push_back(i);
            else
                train_idx.push_back(i);
        }
    } else {
        train_idx.resize(dataset.size());
        std::iota(train_idx.begin(), train_idx.end(), 0);
    }

    OptimizerState opt_state;
    History history;
    history.train_loss.reserve(config.epochs);
    history.val_loss.reserve(config.epochs);

    const double lr0 = config.learning_rate;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.lr_schedule == LrSchedule::cosine)
            config.learning_rate = lr0 * 0.5 * (1.0 + std::cos(M_PI * epoch / config.epochs));
        RandomStream shuffle_rs(RandomStream::derive(config.seed, 0x73687566ULL, epoch));
        shuffle_rs.shuffle(train_idx);

        double epoch_loss = 0.0;
        std::size_t done = 0;
        while (done < train_idx.size()) {
            std::size_t batch_n = std::min<std::size_t>(config.batch_size, train_idx.size() - done);
            model.zero_grad();
            for (std::size_t b = 0; b < batch_n; ++b) {
                const Sample& s = dataset[train_idx[done + b]];
                double pred;
                try {
                    pred = model.forward(s.feature);
                } catch (const std::domain_error& e) {
                    // activations blew past their domains: the run has diverged
                    throw NumericError("train_model: diverged at epoch " +
                                       std::to_string(epoch + 1) + " (" + e.what() + ")");
                }
                if (!std::isfinite(pred))
                    throw NumericError("train_model: non-finite prediction at epoch " +
                                       std::to_string(epoch + 1));
                double err = pred - s.label;
                epoch_loss += loss_value(config.loss, err);
                model.backward(loss_derivative(config.loss, err) / batch_n);
            }
            optimizer_step(model, opt_state, config);
            done += batch_n;
        }
        epoch_loss /= train_idx.size();

        double val = 0.0;
        for (std::size_t i : val_idx) {
            double pred = model.forward(dataset[i].feature);
            val += loss_value(config.loss, pred - dataset[i].label);
        }
        if (!val_idx.empty()) val /= val_idx.size();

        if (!std::isfinite(epoch_loss) || !std::isfinite(val))
            throw NumericError("train_model: loss diverged at epoch " + std::to_string(epoch + 1));
        history.train_loss.push_back(epoch_loss);
        history.val_loss.push_back(val);
    }
    return history;
}

EvalReport evaluate(Model& model, const std::vector<Sample>& test_set) {
    EvalReport report;
    report.errors_deg.reserve(test_set.size());
    double sq = 0.0, ab = 0.0;
    for (const Sample& s : test_set) {
        double err = (model.forward(s.feature) - s.label) / kDeg;
        report.errors_deg.push_back(err);
        sq += err * err;
        ab += std::abs(err);
    }
    if (!test_set.empty()) {
        report.rmse_deg = std::sqrt(sq / test_set.size());
        report.mae_deg = ab / test_set.size();
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json j{{"rmse_deg", rmse_deg},
                     {"mae_deg", mae_deg},
                     {"n_samples", errors_deg.size()},
                     {"condition",
                      {{"snr_db", condition.snr_db},
                       {"snapshots", condition.snapshots},
                       {"distance", condition.distance},
                       {"n_antennas", condition.n_antennas}}}};
    return j.dump(2);
}

std::string CsvTable::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    return out.str();
}

void CsvTable::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("CsvTable: cannot open " + path);
    f << to_string();
    if (!f) throw IoError("CsvTable: write failed for " + path);
}

namespace {

struct TrialDraw {
    SourcePlacement source;
    std::uint64_t noise_seed;
};

TrialDraw draw_trial(const TrialProtocol& protocol, std::uint64_t tag, int trial) {
    RandomStream rs(RandomStream::derive(protocol.seed, tag, trial));
    double theta = rs.next_uniform(protocol.theta_lo_deg, protocol.theta_hi_deg) * kDeg;
    double range = protocol.distances[rs.next_below(protocol.distances.size())];
    return {{theta, range}, rs.next_u64()};
}

// One Monte-Carlo comparison point: per trial all methods see the same data.
void run_comparison_trials(const std::vector<NamedModel>& models, bool include_music,
                           const MusicGrid& music_grid, double snr_db, int snapshots,
                           const TrialProtocol& protocol, const ArrayConfig& config, int n_in,
                           std::uint64_t tag, CsvTable& table,
                           const std::string& condition_value) {
    std::vector<double> model_sq(models.size(), 0.0);
    double music_sq = 0.0;
    for (int trial = 0; trial < protocol.trials; ++trial) {
        TrialDraw draw = draw_trial(protocol, tag, trial);
        NoiseSpec noise{snr_db, draw.noise_seed};
        SnapshotSet snaps = received_snapshots({draw.source}, config, snapshots, noise);
        if (!models.empty()) {
            CMatrix features = features_from_snapshots(snaps, n_in, 1);
            CVector feature = features.col(0);
            for (std::size_t m = 0; m < models.size(); ++m) {
                double err = (models[m].second->forward(feature) - draw.source.theta) / kDeg;
                model_sq[m] += err * err;
            }
        }
        if (include_music) {
            CovMatrix raw = sample_covariance(snaps);
            MusicResult res = near_field_music(raw, 1, music_grid, config);
            double est = res.estimates.empty() ? 0.0 : res.estimates[0].theta;
            double err = (est - draw.source.theta) / kDeg;
            music_sq += err * err;
        }
    }
    for (std::size_t m = 0; m < models.size(); ++m)
        table.rows.push_back({condition_value, models[m].first,
                              fmt(std::sqrt(model_sq[m] / protocol.trials)),
                              std::to_string(protocol.trials), std::to_string(protocol.seed)});
    if (include_music)
        table.rows.push_back({condition_value, "music",
                              fmt(std::sqrt(music_sq / protocol.trials)),
                              std::to_string(protocol.trials), std::to_string(protocol.seed)});
}

} // namespace

CsvTable experiment_rmse_vs_snr(const std::vector<NamedModel>& models, bool include_music,
                                const MusicGrid& music_grid, const std::vector<double>& snr_list,
                                int snapshots, const TrialProtocol& protocol,
                                const ArrayConfig& config, int n_in) {
    CsvTable table;
    table.header = {"snr_db", "method", "rmse_deg", "trials", "seed"};
    for (double snr : snr_list)
        run_comparison_trials(models, include_music, music_grid, snr, snapshots, protocol, config,
                              n_in, 0x736e72ULL ^ static_cast<std::uint64_t>(std::llround(snr * 16)),
                              table, fmt(snr));
    return table;
}

CsvTable experiment_rmse_vs_snapshots(const std::vector<NamedModel>& models, bool include_music,
                                      const MusicGrid& music_grid,
                                      const std::vector<int>& snapshot_list, double snr_db,
                                      const TrialProtocol& protocol, const ArrayConfig& config,
                                      int n_in) {
    CsvTable table;
    table.header = {"snapshots", "method", "rmse_deg", "trials", "seed"};
    for (int k : snapshot_list)
        run_comparison_trials(models, include_music, music_grid, snr_db, k, protocol, config, n_in,
                              0x736e6170ULL ^ static_cast<std::uint64_t>(k), table,
                              std::to_string(k));
    return table;
}

CsvTable experiment_rmse_vs_distance(Model& model, const std::vector<double>& distances,
                                     DatasetSpec test_template) {
    CsvTable table;
    table.header = {"distance_lambda", "method", "rmse_deg", "n_samples", "seed"};
    test_template.role = DatasetSpec::Role::test;
    std::uint64_t base_seed = test_template.seed;
    for (double r : distances) {
        test_template.distances = {r};
        test_template.seed = RandomStream::derive(base_seed, 0x64697374ULL,
                                                  static_cast<std::uint64_t>(std::llround(r)));
        std::vector<Sample> set = build_dataset(test_template);
        EvalReport report = evaluate(model, set);
        table.rows.push_back({fmt(r), model.name(), fmt(report.rmse_deg),
                              std::to_string(set.size()), std::to_string(test_template.seed)});
    }
    return table;
}

CsvTable experiment_crop_invariance(Model& model, const std::vector<int>& n_antennas,
                                    DatasetSpec test_template) {
    CsvTable table;
    table.header = {"n_antennas", "method", "rmse_deg", "n_samples", "seed"};
    test_template.role = DatasetSpec::Role::test;
    std::uint64_t base_seed = test_template.seed;
    for (int n : n_antennas) {
        test_template.array = ArrayConfig::ula(n, test_template.array.spacing,
                                               test_template.array.wavelength);
        test_template.seed = RandomStream::derive(base_seed, 0x616e74ULL,
                                                  static_cast<std::uint64_t>(n));
        std::vector<Sample> set = build_dataset(test_template);
        EvalReport report = evaluate(model, set);
        table.rows.push_back({std::to_string(n), model.name(), fmt(report.rmse_deg),
                              std::to_string(set.size()), std::to_string(test_template.seed)});
    }
    return table;
}

CsvTable experiment_boxplot(const std::vector<NamedModel>& models,
                            const std::vector<double>& directions_deg, double range, int trials,
                            double snr_db, int snapshots, const ArrayConfig& config, int n_in,
                            std::uint64_t seed) {
    CsvTable table;
    table.header = {"direction_deg", "method", "trial", "error_deg"};
    for (double dir : directions_deg) {
        SourcePlacement src{dir * kDeg, range};
        for (int trial = 0; trial < trials; ++trial) {
            std::uint64_t s = RandomStream::derive(seed, 0x626f78ULL ^ static_cast<std::uint64_t>(
                                                             std::llround(dir * 16)), trial);
            SnapshotSet snaps = received_snapshots({src}, config, snapshots, NoiseSpec{snr_db, s});
            CMatrix features = features_from_snapshots(snaps, n_in, 1);
            CVector feature = features.col(0);
            for (const NamedModel& m : models) {
                double err = (m.second->forward(feature) - src.theta) / kDeg;
                table.rows.push_back({fmt(dir), m.first, std::to_string(trial), fmt(err)});
            }
        }
    }
    return table;
}

CsvTable experiment_beampattern(double theta1_deg, double theta2_deg, double range1, double range2,
                                const ArrayConfig& config, double noise_var,
                                double theta_step_deg) {
    std::vector<SourcePlacement> sources{{theta1_deg * kDeg, range1}, {theta2_deg * kDeg, range2}};
    CovMatrix raw = analytic_covariance(sources, config, noise_var);
    CovMatrix vcm = reconstruct_vcm(raw);

    std::vector<double> grid_deg, grid_rad;
    for (double t = -90.0 + theta_step_deg; t < 90.0 - 1e-9; t += theta_step_deg) {
        grid_deg.push_back(t);
        grid_rad.push_back(t * kDeg);
    }
    std::vector<double> p_raw = music_spectrum_far(raw, 2, config.spacing, grid_rad);
    std::vector<double> p_vcm = music_spectrum_far(vcm, 2, config.spacing, grid_rad);

    CsvTable table;
    table.header = {"theta_deg", "power_raw", "power_vcm"};
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
        table.rows.push_back({fmt(grid_deg[i]), fmt(p_raw[i]), fmt(p_vcm[i])});
    return table;
}

std::vector<std::pair<double, double>> spectrum_peaks(const std::vector<double>& spectrum,
                                                      const std::vector<double>& theta_deg) {
    std::vector<std::pair<double, double>> peaks;
    for (std::size_t i = 1; i + 1 < spectrum.size(); ++i)
        if (spectrum[i] >= spectrum[i - 1] && spectrum[i] >= spectrum[i + 1])
            peaks.push_back({theta_deg[i], spectrum[i]});
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    return peaks;
}

double mean_sidelobe_level(const std::vector<double>& spectrum,
                           const std::vector<double>& theta_deg,
                           const std::vector<double>& true_dirs_deg, double mask_deg) {
    double peak = *std::max_element(spectrum.begin(), spectrum.end());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        bool masked = false;
        for (double dir : true_dirs_deg)
            if (std::abs(theta_deg[i] - dir) <= mask_deg) masked = true;
        if (masked) continue;
        sum += spectrum[i] / peak;
        ++count;
    }
    return count ? sum / count : 0.0;
}

} // namespace nfdoa
