#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qpgamma {

std::string sha256_hex(std::string_view bytes);
/// Throws DataError if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

struct ArtifactRecord {
    std::string path;  //!< relative to the run directory
    std::string sha256;
};

struct StageRecord {
    std::string name;
    std::vector<ArtifactRecord> inputs;
    std::vector<ArtifactRecord> outputs;
    std::uint64_t seed = 0;
    std::string started;   //!< ISO-8601 UTC
    std::string finished;
    nlohmann::json parameters;
};

/// Record of every pipeline stage run in an output directory.
class RunManifest {
  public:
    static constexpr int kSchemaVersion = 1;

    nlohmann::json config_snapshot;
    std::uint64_t master_seed = 0;
    std::vector<StageRecord> stages;

    static RunManifest load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;

    /// Replace (or append) the record of a stage by name.
    void record(StageRecord stage);
    const StageRecord* find(std::string_view stage) const noexcept;

    /// Hash that a stage output had when it was written, if known.
    const ArtifactRecord* output(std::string_view relative_path) const noexcept;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

}  // namespace qpgamma
