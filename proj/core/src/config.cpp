#include "qpgamma/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {

using nlohmann::json;

namespace {

constexpr double kActivityPerMicroCurie = units::decays_per_curie * 1e-6;

template<class T>
T get_or(const json& j, const char* key, T fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

const json& object_or_empty(const json& j, const char* key)
{
    static const json empty = json::object();
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return empty;
    if (!it->is_object())
        throw ConfigError(std::string("field '") + key + "' must be an object");
    return *it;
}

Vec3 vec3_mm(const json& j, const char* key, Vec3 fallback)
{
    auto it = j.find(key);
    if (it == j.end())
        return fallback;
    if (!it->is_array() || it->size() != 3)
        throw ConfigError(std::string("field '") + key + "' must be a 3-element array");
    return {(*it)[0].get<double>() * units::mm, (*it)[1].get<double>() * units::mm,
            (*it)[2].get<double>() * units::mm};
}

// Standard pair list used when a config does not name its own.
const std::vector<std::pair<std::string, std::string>>& standard_pairs()
{
    static const std::vector<std::pair<std::string, std::string>> p{
        {"Q2", "Q4"}, {"Q3", "Q5"}, {"Q2", "Q3"}, {"Q3", "Q4"}, {"Q4", "Q5"}, {"Q2", "Q5"}};
    return p;
}

}  // namespace

//---------------------------------------------------------------------------//
// ISLAND SHAPE
//---------------------------------------------------------------------------//

bool IslandShape::contains(double x, double y) const noexcept
{
    x = std::abs(x);
    y = std::abs(y);
    return (x <= arm_half_length && y <= arm_half_width)
           || (x <= arm_half_width && y <= arm_half_length);
}

bool IslandShape::in_gap(double x, double y) const noexcept
{
    x = std::abs(x);
    y = std::abs(y);
    const double l = arm_half_length + gap;
    const double w = arm_half_width + gap;
    // The outer gap edge belongs to the ground plane.
    const bool dilated = (x < l && y < w) || (x < w && y < l);
    return dilated && !contains(x, y);
}

std::vector<Vec2> IslandShape::outline() const
{
    const double l = arm_half_length;
    const double w = arm_half_width;
    return {{l, -w}, {l, w},   {w, w},   {w, l},   {-w, l},  {-w, w},
            {-l, w}, {-l, -w}, {-w, -w}, {-w, -l}, {w, -l},  {w, -w}};
}

Box Geometry::substrate_box() const noexcept
{
    return {{-0.5 * substrate_size.x, -0.5 * substrate_size.y, -substrate_size.z},
            {0.5 * substrate_size.x, 0.5 * substrate_size.y, 0.0}};
}

const QubitIsland& ExperimentConfig::island(const std::string& id) const
{
    for (const auto& q : geometry.qubit_islands) {
        if (q.id == id)
            return q;
    }
    throw ConfigError("unknown qubit id '" + id + "'");
}

std::size_t ExperimentConfig::qubit_index(const std::string& id) const
{
    for (std::size_t i = 0; i < geometry.qubit_islands.size(); ++i) {
        if (geometry.qubit_islands[i].id == id)
            return i;
    }
    throw ConfigError("unknown qubit id '" + id + "'");
}

//---------------------------------------------------------------------------//
// DEFAULTS
//---------------------------------------------------------------------------//

std::vector<QubitParams> device_qubits(const std::string& device)
{
    if (device == "non-Cu") {
        return {{"Q1", 4.60, 6.26, 3.08, 23, 54}, {"Q2", 4.58, 6.20, 1.80, 25, 32},
                {"Q3", 4.11, 6.12, 4.95, 21, 51}, {"Q4", 4.32, 6.06, 5.80, 20, 29},
                {"Q5", 4.10, 6.01, 8.00, 19, 10}, {"Q6", 4.18, 5.96, 4.44, 21, 58}};
    }
    if (device == "Cu") {
        return {{"Q1", 4.62, 6.26, 2.78, 24, 18}, {"Q2", 4.30, 6.20, 14.8, 17, 24},
                {"Q3", 4.30, 6.13, 3.85, 22, 24}, {"Q4", 4.36, 6.06, 5.77, 21, 17},
                {"Q5", 4.34, 6.03, 5.40, 21, 19}, {"Q6", 4.32, 5.98, 3.51, 22, 22}};
    }
    throw ConfigError("unknown device '" + device + "' (expected non-Cu or Cu)");
}

std::vector<QubitIsland> default_layout()
{
    // Two rows of three islands on either side of the feedline, pitch
    // 2.0435 mm, row offset 0.827 mm, row spacing 4.537 mm; centred on the chip.
    constexpr double mm = units::mm;
    return {{"Q1", {-1.6300 * mm, 2.2687 * mm}}, {"Q2", {-2.4571 * mm, -2.2687 * mm}},
            {"Q3", {0.4136 * mm, 2.2687 * mm}},  {"Q4", {-0.4136 * mm, -2.2687 * mm}},
            {"Q5", {2.4571 * mm, 2.2687 * mm}},  {"Q6", {1.6300 * mm, -2.2687 * mm}}};
}

ExperimentConfig default_config()
{
    ExperimentConfig c;
    c.geometry.qubit_islands = default_layout();
    c.qubits = device_qubits("non-Cu");
    c.pairs = standard_pairs();
    return c;
}

//---------------------------------------------------------------------------//
// PARSING
//---------------------------------------------------------------------------//

std::vector<QubitIsland> parse_layout(const json& doc)
{
    const json& list = doc.is_array() ? doc : doc.at("qubits");
    std::vector<QubitIsland> out;
    for (const auto& q : list) {
        QubitIsland isl;
        isl.id = q.at("id").get<std::string>();
        isl.center = {q.at("x_mm").get<double>() * units::mm, q.at("y_mm").get<double>() * units::mm};
        out.push_back(std::move(isl));
    }
    return out;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir)
{
    if (!doc.is_object())
        throw ConfigError("configuration root must be an object");

    ExperimentConfig c;
    c.schema_version = get_or(doc, "schema_version", kSchemaVersion);
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("schema_version " + std::to_string(c.schema_version)
                          + " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }

    try {
        const json& g = object_or_empty(doc, "geometry");
        auto& geo = c.geometry;
        geo.substrate_size = vec3_mm(g, "substrate_size_mm", geo.substrate_size);
        geo.source_distance = get_or(g, "source_distance_m", geo.source_distance);
        geo.source_activity = get_or(g, "source_activity_uci", geo.source_activity / kActivityPerMicroCurie)
                              * kActivityPerMicroCurie;
        geo.bias_cone_fraction = get_or(g, "bias_cone_fraction", geo.bias_cone_fraction);

        if (auto it = g.find("shields"); it != g.end()) {
            for (const auto& s : *it) {
                ShieldSlab slab;
                slab.material = material_from_string(s.at("material").get<std::string>());
                slab.thickness = s.at("thickness_mm").get<double>() * units::mm;
                slab.standoff = s.at("standoff_mm").get<double>() * units::mm;
                slab.half_width = get_or(s, "half_width_mm", slab.half_width / units::mm) * units::mm;
                geo.shield_slabs.push_back(slab);
            }
        }

        const json& isl = object_or_empty(g, "island");
        geo.island.arm_half_length = get_or(isl, "arm_half_length_um", geo.island.arm_half_length / units::um) * units::um;
        geo.island.arm_half_width = get_or(isl, "arm_half_width_um", geo.island.arm_half_width / units::um) * units::um;
        geo.island.gap = get_or(isl, "gap_um", geo.island.gap / units::um) * units::um;

        if (auto it = g.find("qubits"); it != g.end()) {
            geo.qubit_islands = parse_layout(*it);
        } else if (auto lf = g.find("layout_file"); lf != g.end()) {
            std::filesystem::path p = lf->get<std::string>();
            if (p.is_relative())
                p = base_dir / p;
            std::ifstream in(p);
            if (!in)
                throw ConfigError("cannot open layout file " + p.string());
            geo.qubit_islands = parse_layout(json::parse(in));
        } else {
            geo.qubit_islands = default_layout();
        }

        if (auto it = g.find("nai_detector"); it != g.end() && !it->is_null()) {
            NaIDetector nai;
            nai.diameter = get_or(*it, "diameter_mm", nai.diameter / units::mm) * units::mm;
            nai.length = get_or(*it, "length_mm", nai.length / units::mm) * units::mm;
            nai.center = vec3_mm(*it, "center_mm", nai.center);
            geo.nai_detector = nai;
        }

        // Qubit parameters: explicit list, else the reference set of the named device
        const std::string device = get_or<std::string>(doc, "device", "non-Cu");
        std::map<std::string, QubitParams> table;
        for (auto& q : device_qubits(device))
            table[q.id] = q;
        if (auto it = doc.find("qubits"); it != doc.end()) {
            for (const auto& q : *it) {
                QubitParams p;
                p.id = q.at("id").get<std::string>();
                if (auto t = table.find(p.id); t != table.end())
                    p = t->second;
                p.f01_ghz = get_or(q, "f01_ghz", p.f01_ghz);
                p.fr_ghz = get_or(q, "fr_ghz", p.fr_ghz);
                p.dispersion_mhz = get_or(q, "dispersion_mhz", p.dispersion_mhz);
                p.ej_ec = get_or(q, "ej_ec", p.ej_ec);
                p.t1_us = get_or(q, "t1_us", p.t1_us);
                c.qubits.push_back(p);
            }
        } else {
            for (const auto& isl_q : geo.qubit_islands) {
                auto t = table.find(isl_q.id);
                if (t == table.end())
                    throw ConfigError("no parameters given for qubit '" + isl_q.id + "'");
                c.qubits.push_back(t->second);
            }
        }

        if (auto it = doc.find("pairs"); it != doc.end()) {
            for (const auto& p : *it) {
                if (!p.is_array() || p.size() != 2)
                    throw ConfigError("each pair must be a two-element array of qubit ids");
                c.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
            }
        } else {
            std::set<std::string> ids;
            for (const auto& q : geo.qubit_islands)
                ids.insert(q.id);
            for (const auto& p : standard_pairs()) {
                if (ids.count(p.first) && ids.count(p.second))
                    c.pairs.push_back(p);
            }
        }

        c.charge_sensing_qubit = get_or<std::string>(doc, "charge_sensing_qubit",
                                                     geo.qubit_islands.size() == 1
                                                         ? geo.qubit_islands.front().id
                                                         : c.charge_sensing_qubit);

        const json& t = object_or_empty(doc, "transport");
        auto& tp = c.transport;
        tp.lambda_e = get_or(t, "lambda_e_um", tp.lambda_e / units::um) * units::um;
        tp.lambda_h = get_or(t, "lambda_h_um", tp.lambda_h / units::um) * units::um;
        tp.f_q = get_or(t, "f_q", tp.f_q);
        tp.pair_energy_ev = get_or(t, "pair_energy_ev", tp.pair_energy_ev);
        tp.downsample = get_or(t, "downsample", tp.downsample);

        c.rng.master_seed = get_or(object_or_empty(doc, "rng"), "master_seed", c.rng.master_seed);

        const json& a = object_or_empty(doc, "analysis");
        auto& ad = c.analysis;
        ad.sensing_radius = get_or(a, "sensing_radius_um", ad.sensing_radius / units::um) * units::um;
        ad.jump_threshold = get_or(a, "jump_threshold_e", ad.jump_threshold);
        ad.step_average = get_or(a, "step_average", ad.step_average);
        ad.step_kernel = get_or(a, "step_kernel", ad.step_kernel);
        ad.coincidence_window = get_or(a, "coincidence_window", ad.coincidence_window);
        ad.parity_average = get_or(a, "parity_average", ad.parity_average);
        ad.footprint_average = get_or(a, "footprint_average", ad.footprint_average);
        ad.separation_parity = get_or(a, "separation_parity", ad.separation_parity);
        ad.separation_footprint = get_or(a, "separation_footprint", ad.separation_footprint);
        ad.psd_segment = get_or(a, "psd_segment", ad.psd_segment);
        ad.reset_interval = get_or(a, "reset_interval", ad.reset_interval);

        c.secondary_branch = get_or(doc, "secondary_branch", c.secondary_branch);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }

    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig& c)
{
    const auto& g = c.geometry;
    json shields = json::array();
    for (const auto& s : g.shield_slabs) {
        shields.push_back({{"material", to_string(s.material)},
                           {"thickness_mm", s.thickness / units::mm},
                           {"standoff_mm", s.standoff / units::mm},
                           {"half_width_mm", s.half_width / units::mm}});
    }
    json islands = json::array();
    for (const auto& q : g.qubit_islands)
        islands.push_back({{"id", q.id}, {"x_mm", q.center.x / units::mm}, {"y_mm", q.center.y / units::mm}});

    json geo{{"substrate_size_mm",
              {g.substrate_size.x / units::mm, g.substrate_size.y / units::mm, g.substrate_size.z / units::mm}},
             {"source_distance_m", g.source_distance},
             {"source_activity_uci", g.source_activity / kActivityPerMicroCurie},
             {"bias_cone_fraction", g.bias_cone_fraction},
             {"shields", shields},
             {"island",
              {{"arm_half_length_um", g.island.arm_half_length / units::um},
               {"arm_half_width_um", g.island.arm_half_width / units::um},
               {"gap_um", g.island.gap / units::um}}},
             {"qubits", islands}};
    if (g.nai_detector) {
        const auto& n = *g.nai_detector;
        geo["nai_detector"] = {{"diameter_mm", n.diameter / units::mm},
                               {"length_mm", n.length / units::mm},
                               {"center_mm", {n.center.x / units::mm, n.center.y / units::mm, n.center.z / units::mm}}};
    }

    json qubits = json::array();
    for (const auto& q : c.qubits) {
        qubits.push_back({{"id", q.id}, {"f01_ghz", q.f01_ghz}, {"fr_ghz", q.fr_ghz},
                          {"dispersion_mhz", q.dispersion_mhz}, {"ej_ec", q.ej_ec}, {"t1_us", q.t1_us}});
    }
    json pairs = json::array();
    for (const auto& [a, b] : c.pairs)
        pairs.push_back({a, b});

    const auto& t = c.transport;
    const auto& a = c.analysis;
    return {{"schema_version", c.schema_version},
            {"geometry", geo},
            {"qubits", qubits},
            {"pairs", pairs},
            {"charge_sensing_qubit", c.charge_sensing_qubit},
            {"transport",
             {{"lambda_e_um", t.lambda_e / units::um},
              {"lambda_h_um", t.lambda_h / units::um},
              {"f_q", t.f_q},
              {"pair_energy_ev", t.pair_energy_ev},
              {"downsample", t.downsample}}},
            {"rng", {{"master_seed", c.rng.master_seed}}},
            {"analysis",
             {{"sensing_radius_um", a.sensing_radius / units::um},
              {"jump_threshold_e", a.jump_threshold},
              {"step_average", a.step_average},
              {"step_kernel", a.step_kernel},
              {"coincidence_window", a.coincidence_window},
              {"parity_average", a.parity_average},
              {"footprint_average", a.footprint_average},
              {"separation_parity", a.separation_parity},
              {"separation_footprint", a.separation_footprint},
              {"psd_segment", a.psd_segment},
              {"reset_interval", a.reset_interval}}},
            {"secondary_branch", c.secondary_branch}};
}

//---------------------------------------------------------------------------//
// VALIDATION
//---------------------------------------------------------------------------//

void validate(const TransportParams& p)
{
    if (!(p.lambda_e > 0.0) || !(p.lambda_h > 0.0))
        throw ConfigError("trapping lengths must be positive");
    if (!(p.f_q >= 0.0 && p.f_q <= 1.0))
        throw ConfigError("f_q must lie in [0, 1]");
    if (!(p.pair_energy_ev > 0.0))
        throw ConfigError("pair creation energy must be positive");
    if (p.downsample < 1)
        throw ConfigError("downsample factor must be >= 1");
}

void validate(const ExperimentConfig& c)
{
    const auto& g = c.geometry;
    if (!(g.substrate_size.x > 0.0 && g.substrate_size.y > 0.0 && g.substrate_size.z > 0.0))
        throw ConfigError("geometry: substrate dimensions must be positive");
    if (!(g.source_distance > 0.0))
        throw ConfigError("geometry: source_distance must be positive");
    if (!(g.source_activity >= 0.0))
        throw ConfigError("geometry: source activity must be non-negative");
    if (!(g.bias_cone_fraction >= 0.0 && g.bias_cone_fraction < 1.0))
        throw ConfigError("geometry: bias_cone_fraction must lie in [0, 1)");

    const auto& is = g.island;
    if (!(is.arm_half_width > 0.0 && is.arm_half_length > is.arm_half_width && is.gap > 0.0))
        throw ConfigError("geometry: island requires 0 < arm_half_width < arm_half_length and gap > 0");

    std::vector<std::pair<double, double>> spans;
    for (const auto& s : g.shield_slabs) {
        if (!(s.thickness > 0.0) || !(s.standoff > 0.0) || !(s.half_width > 0.0))
            throw ConfigError("geometry: shield slabs need positive thickness, standoff and width");
        if (s.standoff + s.thickness >= g.source_distance)
            throw ConfigError("geometry: shield slab encloses or lies beyond the source");
        spans.emplace_back(s.standoff, s.standoff + s.thickness);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first < spans[i - 1].second)
            throw ConfigError("geometry: shield slabs overlap along the source-chip axis");
    }

    std::set<std::string> ids;
    for (const auto& q : g.qubit_islands) {
        if (!ids.insert(q.id).second)
            throw ConfigError("geometry: duplicate qubit id '" + q.id + "'");
        if (std::abs(q.center.x) > 0.5 * g.substrate_size.x || std::abs(q.center.y) > 0.5 * g.substrate_size.y)
            throw ConfigError("geometry: qubit '" + q.id + "' lies outside the top face");
    }

    if (g.nai_detector) {
        const auto& n = *g.nai_detector;
        if (!(n.diameter > 0.0 && n.length > 0.0))
            throw ConfigError("geometry: NaI detector dimensions must be positive");
        const Box sub = g.substrate_box();
        const Box nai{{n.center.x - 0.5 * n.diameter, n.center.y - 0.5 * n.diameter, n.center.z - 0.5 * n.length},
                      {n.center.x + 0.5 * n.diameter, n.center.y + 0.5 * n.diameter, n.center.z + 0.5 * n.length}};
        const bool overlap = nai.lo.x < sub.hi.x && nai.hi.x > sub.lo.x && nai.lo.y < sub.hi.y
                             && nai.hi.y > sub.lo.y && nai.lo.z < sub.hi.z && nai.hi.z > sub.lo.z;
        if (overlap)
            throw ConfigError("geometry: NaI detector overlaps the substrate");
        if (nai.hi.z >= g.source_distance && std::abs(n.center.x) < 0.5 * n.diameter
            && std::abs(n.center.y) < 0.5 * n.diameter && nai.lo.z <= g.source_distance)
            throw ConfigError("geometry: NaI detector encloses the source");
    }

    for (const auto& q : c.qubits) {
        if (!ids.count(q.id))
            throw ConfigError("qubit parameters reference unknown qubit '" + q.id + "'");
        if (!(q.dispersion_mhz > 0.0))
            throw ConfigError("qubit '" + q.id + "': charge dispersion must be positive");
    }
    for (const auto& [a, b] : c.pairs) {
        for (const auto& id : {a, b}) {
            if (!ids.count(id))
                throw ConfigError("pair list references unknown qubit '" + id + "'");
        }
        if (a == b)
            throw ConfigError("pair list contains a self pair '" + a + "'");
    }
    if (!ids.empty() && !ids.count(c.charge_sensing_qubit))
        throw ConfigError("charge_sensing_qubit '" + c.charge_sensing_qubit + "' is not on the chip");

    validate(c.transport);
    if (!(c.secondary_branch >= 0.0 && c.secondary_branch <= 1.0))
        throw ConfigError("secondary_branch must lie in [0, 1]");

    const auto& a = c.analysis;
    if (!(a.sensing_radius > 0.0) || !(a.jump_threshold > 0.0 && a.jump_threshold < 0.5))
        throw ConfigError("analysis: sensing radius must be positive and threshold in (0, 0.5)");
    if (a.step_average < 1 || a.step_kernel < 2 || a.coincidence_window < 1 || a.parity_average < 1
        || a.footprint_average < 1 || a.psd_segment < 16 || a.reset_interval < 2 * a.step_kernel)
        throw ConfigError("analysis: window sizes out of range");
    if (!(a.separation_parity > 0.0 && a.separation_footprint > 0.0))
        throw ConfigError("analysis: state separations must be positive");
}

}  // namespace qpgamma
