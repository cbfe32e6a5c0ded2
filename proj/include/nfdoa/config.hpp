#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nfdoa/errors.hpp"

namespace nfdoa {

// Flat `key = value` configuration with '#' comments. Every key has a
// documented default; unknown keys are a hard error so typos cannot silently
// fall back to defaults.
class RunConfig {
  public:
    RunConfig(); // all defaults

    static RunConfig from_file(const std::string& path);

    void set(const std::string& key, const std::string& value); // throws ConfigError
    bool has_default(const std::string& key) const;

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    // Sorted `key = value` lines covering every key (for --dry-run).
    std::string resolved() const;

    const std::map<std::string, std::string>& values() const { return values_; }

    // (key, default, description) triples, sorted by key.
    static const std::vector<std::array<std::string, 3>>& schema();

  private:
    std::map<std::string, std::string> values_;
};

} // namespace nfdoa
