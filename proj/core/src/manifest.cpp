#include "qpgamma/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#include "qpgamma/errors.hpp"

namespace qpgamma {
namespace {

class Sha256 {
  public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw NumericalError("cannot initialise SHA-256");
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex()
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), md, &len);
        std::string out;
        out.reserve(2 * len);
        char buf[3];
        for (unsigned i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", md[i]);
            out += buf;
        }
        return out;
    }

  private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

nlohmann::json artifacts_to_json(const std::vector<ArtifactRecord>& a)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : a)
        arr.push_back({{"path", r.path}, {"sha256", r.sha256}});
    return arr;
}

std::vector<ArtifactRecord> artifacts_from_json(const nlohmann::json& j)
{
    std::vector<ArtifactRecord> out;
    for (const auto& r : j)
        out.push_back({r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes)
{
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string utc_timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::record(StageRecord stage)
{
    for (auto& s : stages) {
        if (s.name == stage.name) {
            s = std::move(stage);
            return;
        }
    }
    stages.push_back(std::move(stage));
}

const StageRecord* RunManifest::find(std::string_view stage) const noexcept
{
    for (const auto& s : stages)
        if (s.name == stage)
            return &s;
    return nullptr;
}

const ArtifactRecord* RunManifest::output(std::string_view relative_path) const noexcept
{
    for (const auto& s : stages)
        for (const auto& o : s.outputs)
            if (o.path == relative_path)
                return &o;
    return nullptr;
}

nlohmann::json RunManifest::to_json() const
{
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["master_seed"] = master_seed;
    j["config"] = config_snapshot;
    auto arr = nlohmann::json::array();
    for (const auto& s : stages) {
        arr.push_back({{"name", s.name},
                       {"seed", s.seed},
                       {"started", s.started},
                       {"finished", s.finished},
                       {"parameters", s.parameters},
                       {"inputs", artifacts_to_json(s.inputs)},
                       {"outputs", artifacts_to_json(s.outputs)}});
    }
    j["stages"] = arr;
    return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j)
{
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw ConfigError("manifest schema_version mismatch");
        RunManifest m;
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.config_snapshot = j.value("config", nlohmann::json{});
        for (const auto& s : j.at("stages")) {
            StageRecord r;
            r.name = s.at("name").get<std::string>();
            r.seed = s.value("seed", std::uint64_t{0});
            r.started = s.value("started", "");
            r.finished = s.value("finished", "");
            r.parameters = s.value("parameters", nlohmann::json{});
            r.inputs = artifacts_from_json(s.at("inputs"));
            r.outputs = artifacts_from_json(s.at("outputs"));
            m.stages.push_back(std::move(r));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
}

RunManifest RunManifest::load(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw DataError("cannot read manifest " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
    return from_json(j);
}

void RunManifest::save(const std::filesystem::path& file) const
{
    std::ofstream out(file);
    if (!out)
        throw DataError("cannot write manifest " + file.string());
    out << to_json().dump(2) << '\n';
}

}  // namespace qpgamma
