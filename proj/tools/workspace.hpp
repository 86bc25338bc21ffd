#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpgamma/config.hpp"
#include "qpgamma/manifest.hpp"

namespace qpcli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned jobs = 1;
    std::string out_dir;
    bool force = false;
};

/// One stage run inside an output directory: resolves inputs against the
/// manifest, collects outputs and records both with their hashes.
class Stage {
  public:
    Stage(std::string name, const GlobalOptions& options);

    const qpgamma::ExperimentConfig& config() const noexcept { return config_; }
    std::uint64_t seed() const noexcept { return config_.rng.master_seed; }
    unsigned jobs() const noexcept { return jobs_; }
    const fs::path& dir() const noexcept { return dir_; }

    /// Required input; throws DataError if missing or, without --force, if
    /// its hash differs from the one recorded when it was written.
    fs::path input(const std::string& relative);
    /// Optional input: empty path when absent.
    fs::path optional_input(const std::string& relative);
    bool exists(const std::string& relative) const;

    /// Output path (parent directories are created).
    fs::path output(const std::string& relative);

    nlohmann::json& parameters() noexcept { return parameters_; }

    /// Hash outputs and write the manifest.
    void commit();

  private:
    std::string name_;
    qpgamma::ExperimentConfig config_;
    unsigned jobs_ = 1;
    bool force_ = false;
    fs::path dir_;
    qpgamma::RunManifest manifest_;
    std::vector<std::string> inputs_, outputs_;
    nlohmann::json parameters_ = nlohmann::json::object();
    std::string started_;
};

/// Bundled configuration file, or empty when not found.
fs::path bundled_config();

nlohmann::json read_json(const fs::path& file);
void write_json(const nlohmann::json& j, const fs::path& file);

/// Comma-separated list of numbers ("0.1,0.2"); throws ConfigError.
std::vector<double> parse_list(const std::string& text);

}  // namespace qpcli
