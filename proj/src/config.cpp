#include "nfdoa/config.hpp"

#include <array>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <sstream>

namespace nfdoa {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

const std::vector<std::array<std::string, 3>>& RunConfig::schema() {
    static const std::vector<std::array<std::string, 3>> entries = {
        {"seed", "1", "master seed; all randomness derives from it"},
        {"out_dir", "out", "output directory for every command"},
        {"n_elements", "65", "ULA element count N"},
        {"spacing_lambda", "0.5", "element spacing d in wavelengths"},
        {"wavelength_m", "0.0107", "carrier wavelength in meters (28 GHz)"},
        {"n_sources", "1", "number of simultaneous sources M"},
        {"n_in", "33", "cropped VCM size / network feature length"},
        {"snapshots", "100", "snapshots K per sample"},
        {"snr_db", "10", "per-source SNR in dB (inf disables noise)"},
        {"train_distances", "400,800,1200,1600", "training distances in wavelengths"},
        {"train_theta_lo_deg", "-88", "training grid start"},
        {"train_theta_hi_deg", "88", "training grid end"},
        {"train_theta_step_deg", "0.5", "training grid step"},
        {"test_distances", "1000", "test distances in wavelengths"},
        {"test_theta_lo_deg", "-85", "test grid start"},
        {"test_theta_hi_deg", "85", "test grid end"},
        {"test_theta_step_deg", "0.7", "test grid step"},
        {"model", "cvnn", "cvnn | tdnn"},
        {"optimizer", "adam", "adam | sgd"},
        {"learning_rate", "0.001", "optimizer step size"},
        {"lr_schedule", "cosine", "cosine | constant"},
        {"adam_beta1", "0.9", "Adam first-moment decay"},
        {"adam_beta2", "0.999", "Adam second-moment decay"},
        {"adam_eps", "1e-8", "Adam epsilon"},
        {"batch_size", "64", "mini-batch size"},
        {"epochs", "200", "training epochs"},
        {"loss", "mae", "mae | mse"},
        {"val_fraction", "0.1", "validation split, stratified by distance"},
        {"train_dataset_file", "", "optional pre-built training dataset (binary)"},
        {"test_dataset_file", "", "optional pre-built test dataset (binary)"},
        {"checkpoint", "", "checkpoint path for eval (defaults to out_dir/checkpoint.json)"},
        {"music_theta_step_deg", "0.1", "MUSIC grid step in theta"},
        {"music_range_lo_lambda", "200", "MUSIC range grid start"},
        {"music_range_hi_lambda", "1800", "MUSIC range grid end"},
        {"music_range_step_lambda", "25", "MUSIC range grid step"},
        {"music_truth_theta_deg", "15.5", "source direction for the music command"},
        {"music_truth_range_lambda", "1000", "source range for the music command"},
        {"trials", "100", "Monte-Carlo trials per experiment condition"},
        {"trial_theta_lo_deg", "-85", "random-draw lower bound for trials"},
        {"trial_theta_hi_deg", "85", "random-draw upper bound for trials"},
        {"trial_distances", "1000", "random-draw distances for trials"},
        {"experiment_snr_list", "-10,-8,-6,-4,-2,0,2,4,6,8,10", "SNR sweep axis"},
        {"experiment_snapshot_list", "10,25,50,100,200,400", "snapshot sweep axis"},
        {"experiment_distance_list", "600,800,1000,1200", "distance sweep axis"},
        {"experiment_antenna_list", "65,97,129", "antenna sweep axis"},
        {"experiment_include_music", "1", "include the MUSIC baseline in sweeps"},
        {"boxplot_directions_deg", "-75,-45,-15,15,45,75", "box-plot directions"},
        {"boxplot_range_lambda", "1000", "box-plot source range"},
        {"beampattern_theta1_deg", "-30", "first beam-pattern source"},
        {"beampattern_theta2_deg", "45", "second beam-pattern source"},
        {"beampattern_range1_lambda", "400", "first source range"},
        {"beampattern_range2_lambda", "700", "second source range"},
        {"beampattern_theta_step_deg", "0.1", "beam-pattern grid step"},
        {"beampattern_snr_db", "10", "noise level for the analytic covariance"},
        {"write_snapshot_example", "1", "simulate also writes one raw snapshot file"},
        {"strict_fresnel", "0", "error (instead of warn) outside the Fresnel zone"},
    };
    return entries;
}

RunConfig::RunConfig() {
    for (const auto& e : schema()) values_[e[0]] = e[1];
}

bool RunConfig::has_default(const std::string& key) const {
    return values_.find(key) != values_.end();
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
    return x;
}

int RunConfig::get_int(const std::string& key) const {
    double x = get_double(key);
    int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError("config key '" + key + "': expected an integer");
    return i;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
    return x;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        char* end = nullptr;
        double x = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw ConfigError("config key '" + key + "': '" + item + "' is not a number");
        out.push_back(x);
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (double x : get_double_list(key)) {
        int i = static_cast<int>(x);
        if (static_cast<double>(i) != x)
            throw ConfigError("config key '" + key + "': expected integers");
        out.push_back(i);
    }
    return out;
}

std::string RunConfig::resolved() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

} // namespace nfdoa
