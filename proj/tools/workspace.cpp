#include "workspace.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qpgamma/errors.hpp"

namespace qpcli {

using qpgamma::ConfigError;
using qpgamma::DataError;

namespace {

constexpr const char* kManifest = "manifest.json";

qpgamma::ExperimentConfig load(const GlobalOptions& o)
{
    qpgamma::ExperimentConfig c;
    if (!o.config_path.empty()) {
        c = qpgamma::load_config(o.config_path);
    } else if (const fs::path b = bundled_config(); !b.empty()) {
        c = qpgamma::load_config(b);
    } else {
        c = qpgamma::default_config();
    }
    if (o.seed_given)
        c.rng.master_seed = o.seed;
    qpgamma::validate(c);
    return c;
}

}  // namespace

fs::path bundled_config()
{
    for (const char* dir : {QPGAMMA_SOURCE_DATA_DIR, QPGAMMA_INSTALL_DATA_DIR}) {
        const fs::path p = fs::path(dir) / "default_config.json";
        if (fs::exists(p))
            return p;
    }
    return {};
}

Stage::Stage(std::string name, const GlobalOptions& o)
    : name_(std::move(name)), config_(load(o)), jobs_(std::max(1u, o.jobs)), force_(o.force)
{
    std::string out = o.out_dir;
    if (out.empty()) {
        const char* env = std::getenv("QPGAMMA_OUT_DIR");
        out = env && *env ? env : "qpgamma-run";
    }
    dir_ = out;
    fs::create_directories(dir_);
    started_ = qpgamma::utc_timestamp();

    const fs::path mf = dir_ / kManifest;
    if (fs::exists(mf)) {
        manifest_ = qpgamma::RunManifest::load(mf);
        const auto snapshot = qpgamma::to_json(config_);
        if (!force_ && !manifest_.stages.empty()
            && (manifest_.config_snapshot != snapshot || manifest_.master_seed != config_.rng.master_seed))
            throw ConfigError("configuration or seed differs from the run recorded in " + dir_.string()
                              + " (use --force or another --out-dir)");
    }
    manifest_.config_snapshot = qpgamma::to_json(config_);
    manifest_.master_seed = config_.rng.master_seed;
}

bool Stage::exists(const std::string& relative) const
{
    return fs::exists(dir_ / relative);
}

fs::path Stage::input(const std::string& relative)
{
    const fs::path p = dir_ / relative;
    if (!fs::exists(p))
        throw DataError("missing stage input " + p.string());
    if (!force_) {
        if (const auto* rec = manifest_.output(relative); rec && rec->sha256 != qpgamma::sha256_file(p))
            throw DataError("hash mismatch for " + p.string() + " (modified since it was written; use --force)");
    }
    inputs_.push_back(relative);
    return p;
}

fs::path Stage::optional_input(const std::string& relative)
{
    return exists(relative) ? input(relative) : fs::path{};
}

fs::path Stage::output(const std::string& relative)
{
    const fs::path p = dir_ / relative;
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    outputs_.push_back(relative);
    return p;
}

void Stage::commit()
{
    qpgamma::StageRecord rec;
    rec.name = name_;
    rec.seed = config_.rng.master_seed;
    rec.started = started_;
    rec.finished = qpgamma::utc_timestamp();
    rec.parameters = parameters_;
    for (const auto& i : inputs_)
        rec.inputs.push_back({i, qpgamma::sha256_file(dir_ / i)});
    for (const auto& o : outputs_)
        rec.outputs.push_back({o, qpgamma::sha256_file(dir_ / o)});
    manifest_.record(std::move(rec));
    manifest_.save(dir_ / kManifest);
}

nlohmann::json read_json(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + file.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + file.string() + ": " + e.what());
    }
}

void write_json(const nlohmann::json& j, const fs::path& file)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out)
        throw DataError("cannot write " + file.string());
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size())
            throw ConfigError("not a number list: '" + text + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace qpcli
