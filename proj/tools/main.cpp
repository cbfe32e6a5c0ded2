#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nfdoa/baselines.hpp"
#include "nfdoa/config.hpp"
#include "nfdoa/pipeline.hpp"
#include "nfdoa/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nfdoa;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string seed_override;
    bool dry_run = false;
};

RunConfig resolve_config(const CliOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig() : RunConfig::from_file(opts.config_path);
    if (!opts.out_dir.empty()) cfg.set("out_dir", opts.out_dir);
    if (!opts.seed_override.empty()) cfg.set("seed", opts.seed_override);
    return cfg;
}

ArrayConfig array_from(const RunConfig& cfg) {
    return ArrayConfig::ula(cfg.get_int("n_elements"), cfg.get_double("spacing_lambda"),
                            cfg.get_double("wavelength_m"));
}

DatasetSpec dataset_from(const RunConfig& cfg, DatasetSpec::Role role) {
    DatasetSpec spec;
    bool train = role == DatasetSpec::Role::train;
    spec.distances = cfg.get_double_list(train ? "train_distances" : "test_distances");
    spec.theta_lo_deg = cfg.get_double(train ? "train_theta_lo_deg" : "test_theta_lo_deg");
    spec.theta_hi_deg = cfg.get_double(train ? "train_theta_hi_deg" : "test_theta_hi_deg");
    spec.theta_step_deg = cfg.get_double(train ? "train_theta_step_deg" : "test_theta_step_deg");
    spec.snapshots = cfg.get_int("snapshots");
    spec.snr_db = cfg.get_double("snr_db");
    // train/test features come from disjoint seed streams
    spec.seed = RandomStream::derive(cfg.get_u64("seed"), train ? 0x7472ULL : 0x7465ULL);
    spec.n_in = cfg.get_int("n_in");
    spec.array = array_from(cfg);
    spec.role = role;
    spec.strict_fresnel = cfg.get_bool("strict_fresnel");
    return spec;
}

TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig tc;
    std::string opt = cfg.get("optimizer");
    if (opt != "adam" && opt != "sgd") throw ConfigError("optimizer must be adam or sgd");
    tc.optimizer = opt == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    tc.learning_rate = cfg.get_double("learning_rate");
    std::string sched = cfg.get("lr_schedule");
    if (sched != "cosine" && sched != "constant")
        throw ConfigError("lr_schedule must be cosine or constant");
    tc.lr_schedule = sched == "cosine" ? LrSchedule::cosine : LrSchedule::constant;
    tc.adam_beta1 = cfg.get_double("adam_beta1");
    tc.adam_beta2 = cfg.get_double("adam_beta2");
    tc.adam_eps = cfg.get_double("adam_eps");
    tc.batch_size = cfg.get_int("batch_size");
    tc.epochs = cfg.get_int("epochs");
    std::string loss = cfg.get("loss");
    if (loss != "mae" && loss != "mse") throw ConfigError("loss must be mae or mse");
    tc.loss = loss == "mae" ? LossKind::mae : LossKind::mse;
    tc.seed = cfg.get_u64("seed");
    return tc;
}

MusicGrid music_grid_from(const RunConfig& cfg) {
    return MusicGrid::regular(-90.0, 90.0, cfg.get_double("music_theta_step_deg"),
                              cfg.get_double("music_range_lo_lambda"),
                              cfg.get_double("music_range_hi_lambda"),
                              cfg.get_double("music_range_step_lambda"));
}

std::unique_ptr<Model> build_model_from(const RunConfig& cfg) {
    std::string kind = cfg.get("model");
    std::uint64_t seed = cfg.get_u64("seed");
    if (kind == "cvnn") return build_cvnn(cfg.get_int("n_in"), seed);
    if (kind == "tdnn") return build_tdnn(cfg.get_int("n_in"), seed);
    throw ConfigError("model must be cvnn or tdnn");
}

class RunContext {
  public:
    RunContext(const std::string& command, const RunConfig& cfg)
        : command_(command), cfg_(cfg), start_(std::chrono::steady_clock::now()) {
        out_dir_ = cfg.get("out_dir");
        fs::create_directories(out_dir_);
    }

    std::string path(const std::string& name) {
        outputs_.push_back(name);
        return (fs::path(out_dir_) / name).string();
    }

    void finish() {
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json manifest{{"command", command_},
                      {"version", "0.1.0"},
                      {"seed", cfg_.get_u64("seed")},
                      {"config", cfg_.values()},
                      {"outputs", outputs_},
                      {"wall_time_s", wall}};
        std::ofstream f((fs::path(out_dir_) / "manifest.json").string());
        if (!f) throw IoError("cannot write manifest.json in " + out_dir_);
        f << manifest.dump(2) << "\n";
    }

  private:
    std::string command_, out_dir_;
    const RunConfig& cfg_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<Sample> obtain_dataset(const RunConfig& cfg, DatasetSpec::Role role) {
    std::string key = role == DatasetSpec::Role::train ? "train_dataset_file" : "test_dataset_file";
    std::string file = cfg.get(key);
    if (!file.empty()) return load_dataset(file);
    return build_dataset(dataset_from(cfg, role));
}

int cmd_simulate(const RunConfig& cfg) {
    RunContext ctx("simulate", cfg);
    std::vector<Sample> train = build_dataset(dataset_from(cfg, DatasetSpec::Role::train));
    save_dataset(train, ctx.path("train.dataset"));
    std::vector<Sample> test = build_dataset(dataset_from(cfg, DatasetSpec::Role::test));
    save_dataset(test, ctx.path("test.dataset"));
    if (cfg.get_bool("write_snapshot_example")) {
        DatasetSpec spec = dataset_from(cfg, DatasetSpec::Role::train);
        SourcePlacement src{spec.theta_grid_deg().front() * M_PI / 180.0, spec.distances.front()};
        SnapshotSet snaps = received_snapshots({src}, spec.array, spec.snapshots,
                                               NoiseSpec{spec.snr_db, spec.seed});
        save_snapshots(snaps, ctx.path("example.snapshots"));
    }
    ctx.finish();
    std::cout << "simulate: wrote " << train.size() << " train and " << test.size()
              << " test samples\n";
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    RunContext ctx("train", cfg);
    std::vector<Sample> train = obtain_dataset(cfg, DatasetSpec::Role::train);
    auto model = build_model_from(cfg);
    TrainConfig tc = train_config_from(cfg);
    History history = train_model(*model, train, tc, cfg.get_double("val_fraction"));
    history.save_csv(ctx.path("history.csv"));
    json metrics{{"final_train_loss", history.train_loss.back()},
                 {"final_val_loss", history.val_loss.back()}};
    save_checkpoint(*model, tc, tc.seed, metrics.dump(), ctx.path("checkpoint.json"));
    ctx.finish();
    std::cout << "train: " << model->name() << " final train loss "
              << history.train_loss.back() << ", val loss " << history.val_loss.back() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    RunContext ctx("eval", cfg);
    std::string ckpt = cfg.get("checkpoint");
    if (ckpt.empty()) ckpt = (fs::path(cfg.get("out_dir")) / "checkpoint.json").string();
    auto model = load_checkpoint(ckpt);
    std::vector<Sample> test = obtain_dataset(cfg, DatasetSpec::Role::test);
    EvalReport report = evaluate(*model, test);
    report.condition = {cfg.get_double("snr_db"), cfg.get_int("snapshots"),
                        cfg.get_double_list("test_distances").front(), cfg.get_int("n_elements")};
    {
        std::ofstream f(ctx.path("eval.json"));
        if (!f) throw IoError("cannot write eval.json");
        f << report.to_json() << "\n";
    }
    CsvTable per_sample;
    per_sample.header = {"theta_deg", "distance_lambda", "error_deg"};
    for (std::size_t i = 0; i < test.size(); ++i) {
        char t[32], d[32], e[32];
        std::snprintf(t, sizeof(t), "%.17g", test[i].theta_deg);
        std::snprintf(d, sizeof(d), "%.17g", test[i].distance);
        std::snprintf(e, sizeof(e), "%.17g", report.errors_deg[i]);
        per_sample.rows.push_back({t, d, e});
    }
    per_sample.save(ctx.path("eval_samples.csv"));
    ctx.finish();
    std::cout << "eval: rmse " << report.rmse_deg << " deg, mae " << report.mae_deg
              << " deg over " << test.size() << " samples\n";
    return 0;
}

int cmd_music(const RunConfig& cfg) {
    RunContext ctx("music", cfg);
    ArrayConfig array = array_from(cfg);
    SourcePlacement src{cfg.get_double("music_truth_theta_deg") * M_PI / 180.0,
                        cfg.get_double("music_truth_range_lambda")};
    NoiseSpec noise{cfg.get_double("snr_db"), cfg.get_u64("seed")};
    SnapshotSet snaps = received_snapshots({src}, array, cfg.get_int("snapshots"), noise);
    CovMatrix raw = sample_covariance(snaps);
    MusicGrid grid = music_grid_from(cfg);
    MusicResult res = near_field_music(raw, cfg.get_int("n_sources"), grid, array);

    CsvTable spectrum;
    spectrum.header = {"theta_deg", "range_lambda", "power"};
    int nr = static_cast<int>(grid.range_axis.size());
    for (std::size_t t = 0; t < grid.theta_axis.size(); ++t)
        for (int r = 0; r < nr; ++r) {
            char a[32], b[32], p[32];
            std::snprintf(a, sizeof(a), "%.17g", grid.theta_axis[t] * 180.0 / M_PI);
            std::snprintf(b, sizeof(b), "%.17g", grid.range_axis[r]);
            std::snprintf(p, sizeof(p), "%.17g", res.at(static_cast<int>(t), r, nr));
            spectrum.rows.push_back({a, b, p});
        }
    spectrum.save(ctx.path("music_spectrum.csv"));

    json est = json::array();
    for (const MusicEstimate& e : res.estimates)
        est.push_back({{"theta_deg", e.theta * 180.0 / M_PI}, {"range_lambda", e.range}});
    json out{{"truth", {{"theta_deg", cfg.get_double("music_truth_theta_deg")},
                        {"range_lambda", cfg.get_double("music_truth_range_lambda")}}},
             {"estimates", est}};
    std::ofstream f(ctx.path("music_estimates.json"));
    if (!f) throw IoError("cannot write music_estimates.json");
    f << out.dump(2) << "\n";
    ctx.finish();
    if (!res.estimates.empty())
        std::cout << "music: top estimate " << res.estimates[0].theta * 180.0 / M_PI << " deg at "
                  << res.estimates[0].range << " lambda\n";
    return 0;
}

int cmd_beampattern(const RunConfig& cfg) {
    RunContext ctx("beampattern", cfg);
    double noise_var = std::pow(10.0, -cfg.get_double("beampattern_snr_db") / 10.0);
    CsvTable table = experiment_beampattern(
        cfg.get_double("beampattern_theta1_deg"), cfg.get_double("beampattern_theta2_deg"),
        cfg.get_double("beampattern_range1_lambda"), cfg.get_double("beampattern_range2_lambda"),
        array_from(cfg), noise_var, cfg.get_double("beampattern_theta_step_deg"));
    table.save(ctx.path("beampattern.csv"));
    ctx.finish();
    std::cout << "beampattern: " << table.rows.size() << " grid points\n";
    return 0;
}

int cmd_flops(const RunConfig& cfg) {
    RunContext ctx("flops", cfg);
    int n_in = cfg.get_int("n_in");
    auto cvnn = build_cvnn(n_in, 0);
    TdnnSpec tspec;
    tspec.n_in = n_in;
    long long cv = flops_count(*cvnn);
    long long td = tdnn_flops(tspec);
    json report{{"n_in", n_in},
                {"cvnn_flops", cv},
                {"tdnn_flops", td},
                {"tdnn_input_dim", 2 * n_in}};
    std::ofstream f(ctx.path("flops.json"));
    if (!f) throw IoError("cannot write flops.json");
    f << report.dump(2) << "\n";
    ctx.finish();
    std::cout << "flops: CVNN " << cv / 1e6 << "M, TDNN " << td / 1e6 << "M (n_in " << n_in
              << ")\n";
    return 0;
}

int cmd_experiment(const RunConfig& cfg, const std::string& name) {
    RunContext ctx("experiment " + name, cfg);
    ArrayConfig array = array_from(cfg);
    int n_in = cfg.get_int("n_in");

    TrialProtocol protocol;
    protocol.theta_lo_deg = cfg.get_double("trial_theta_lo_deg");
    protocol.theta_hi_deg = cfg.get_double("trial_theta_hi_deg");
    protocol.distances = cfg.get_double_list("trial_distances");
    protocol.trials = cfg.get_int("trials");
    protocol.seed = cfg.get_u64("seed");

    auto load_model = [&cfg]() {
        std::string ckpt = cfg.get("checkpoint");
        if (ckpt.empty()) ckpt = (fs::path(cfg.get("out_dir")) / "checkpoint.json").string();
        return load_checkpoint(ckpt);
    };

    if (name == "beampattern") {
        double noise_var = std::pow(10.0, -cfg.get_double("beampattern_snr_db") / 10.0);
        CsvTable table = experiment_beampattern(
            cfg.get_double("beampattern_theta1_deg"), cfg.get_double("beampattern_theta2_deg"),
            cfg.get_double("beampattern_range1_lambda"),
            cfg.get_double("beampattern_range2_lambda"), array, noise_var,
            cfg.get_double("beampattern_theta_step_deg"));
        table.save(ctx.path("beampattern.csv"));
    } else if (name == "rmse_vs_snr") {
        auto model = load_model();
        std::vector<NamedModel> models{{model->name(), model.get()}};
        CsvTable table = experiment_rmse_vs_snr(
            models, cfg.get_bool("experiment_include_music"), music_grid_from(cfg),
            cfg.get_double_list("experiment_snr_list"), cfg.get_int("snapshots"), protocol, array,
            n_in);
        table.save(ctx.path("rmse_vs_snr.csv"));
    } else if (name == "rmse_vs_snapshots") {
        auto model = load_model();
        std::vector<NamedModel> models{{model->name(), model.get()}};
        CsvTable table = experiment_rmse_vs_snapshots(
            models, cfg.get_bool("experiment_include_music"), music_grid_from(cfg),
            cfg.get_int_list("experiment_snapshot_list"), cfg.get_double("snr_db"), protocol,
            array, n_in);
        table.save(ctx.path("rmse_vs_snapshots.csv"));
    } else if (name == "rmse_vs_distance") {
        auto model = load_model();
        CsvTable table = experiment_rmse_vs_distance(
            *model, cfg.get_double_list("experiment_distance_list"),
            dataset_from(cfg, DatasetSpec::Role::test));
        table.save(ctx.path("rmse_vs_distance.csv"));
    } else if (name == "crop_invariance") {
        auto model = load_model();
        CsvTable table = experiment_crop_invariance(*model, cfg.get_int_list("experiment_antenna_list"),
                                                    dataset_from(cfg, DatasetSpec::Role::test));
        table.save(ctx.path("crop_invariance.csv"));
    } else if (name == "boxplot") {
        auto model = load_model();
        std::vector<NamedModel> models{{model->name(), model.get()}};
        CsvTable table = experiment_boxplot(
            models, cfg.get_double_list("boxplot_directions_deg"),
            cfg.get_double("boxplot_range_lambda"), cfg.get_int("trials"),
            cfg.get_double("snr_db"), cfg.get_int("snapshots"), array, n_in, cfg.get_u64("seed"));
        table.save(ctx.path("boxplot.csv"));
    } else {
        throw ConfigError("unknown experiment '" + name +
                          "' (known: beampattern, rmse_vs_snr, rmse_vs_snapshots, "
                          "rmse_vs_distance, crop_invariance, boxplot)");
    }
    ctx.finish();
    std::cout << "experiment " << name << ": done\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field DoA estimation toolkit"};
    app.require_subcommand(1);

    CliOptions opts;
    std::string experiment_name;

    auto add_common = [&opts](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "flat key = value config file");
        sub->add_option("--out", opts.out_dir, "output directory (overrides out_dir)");
        sub->add_option("--seed", opts.seed_override, "seed override");
        sub->add_flag("--dry-run", opts.dry_run, "print the resolved config and exit");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "generate datasets and snapshot files");
    CLI::App* train = app.add_subcommand("train", "train a model, write checkpoint + history");
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test set");
    CLI::App* music = app.add_subcommand("music", "2-D near-field MUSIC on one simulated scene");
    CLI::App* beam = app.add_subcommand("beampattern", "raw vs VCM far-field MUSIC spectra");
    CLI::App* flops = app.add_subcommand("flops", "FLOP accounting for CVNN and TDNN");
    CLI::App* experiment = app.add_subcommand("experiment", "run a named experiment suite");
    experiment->add_option("name", experiment_name, "experiment name")->required();
    for (CLI::App* sub : {simulate, train, eval, music, beam, flops, experiment}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = resolve_config(opts);
        if (opts.dry_run) {
            std::cout << cfg.resolved();
            return 0;
        }
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (music->parsed()) return cmd_music(cfg);
        if (beam->parsed()) return cmd_beampattern(cfg);
        if (flops->parsed()) return cmd_flops(cfg);
        if (experiment->parsed()) return cmd_experiment(cfg, experiment_name);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
