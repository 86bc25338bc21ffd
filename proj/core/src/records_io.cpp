#include "qpgamma/records_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "qpgamma/csv.hpp"
#include "qpgamma/errors.hpp"

namespace qpgamma {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + file.string() + ": " + e.what());
    }
}

void write_json(const json& j, const fs::path& file)
{
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out)
        throw DataError("cannot write " + file.string());
}

VolumeKind volume_from(const std::string& s)
{
    if (s == "substrate")
        return VolumeKind::Substrate;
    if (s == "NaI")
        return VolumeKind::NaI;
    if (s == "shield")
        return VolumeKind::Shield;
    throw DataError("unknown volume '" + s + "'");
}

std::uint64_t to_index(double v)
{
    if (!(v >= 0.0))
        throw DataError("negative or invalid index in CSV");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

void write_deposit_log(const DepositLog& log, const fs::path& dir)
{
    CsvWriter dep(dir / kDepositsCsv, {"event_index", "volume", "x", "y", "z", "energy_keV", "mechanism"});
    for (const auto& d : log.deposits) {
        dep.cell(static_cast<unsigned long long>(d.event_index))
            .cell(std::string(to_string(d.volume)))
            .cell(d.position.x)
            .cell(d.position.y)
            .cell(d.position.z)
            .cell(d.energy_kev)
            .cell(std::string(to_string(d.mechanism)));
        dep.end_row();
    }
    dep.close();

    CsvWriter ev(dir / kEventsCsv, {"event_index", "weight", "substrate_keV", "nai_keV"});
    for (const auto& e : log.events) {
        ev.cell(static_cast<unsigned long long>(e.event_index)).cell(e.weight).cell(e.substrate_kev).cell(e.nai_kev);
        ev.end_row();
    }
    ev.close();

    json s;
    s["n_decays"] = log.n_decays;
    s["hit_probability"] = log.hit_probability;
    s["hit_probability_error"] = log.hit_probability_error;
    s["substrate_hit_rate"] = log.substrate_hit_rate;
    s["mean_deposit_keV"] = log.mean_deposit_kev;
    s["substrate_hits"] = log.substrate_hits;
    s["histogram"] = {{"edges_keV", log.deposit_histogram.edges}, {"counts", log.deposit_histogram.counts}};
    write_json(s, dir / kDepositSummary);
}

DepositLog read_deposit_log(const fs::path& dir)
{
    DepositLog log;
    const json s = read_json(dir / kDepositSummary);
    try {
        log.n_decays = s.at("n_decays").get<std::uint64_t>();
        log.hit_probability = s.at("hit_probability").get<double>();
        log.hit_probability_error = s.at("hit_probability_error").get<double>();
        log.substrate_hit_rate = s.at("substrate_hit_rate").get<double>();
        log.mean_deposit_kev = s.at("mean_deposit_keV").get<double>();
        log.substrate_hits = s.at("substrate_hits").get<std::size_t>();
        log.deposit_histogram.edges = s.at("histogram").at("edges_keV").get<std::vector<double>>();
        log.deposit_histogram.counts = s.at("histogram").at("counts").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed deposit summary: ") + e.what());
    }

    const CsvTable dep = read_csv(dir / kDepositsCsv);
    const auto idx = dep.numbers("event_index");
    const auto vol = dep.strings("volume");
    const auto x = dep.numbers("x"), y = dep.numbers("y"), z = dep.numbers("z");
    const auto e = dep.numbers("energy_keV");
    const auto mech = dep.strings("mechanism");
    for (std::size_t i = 0; i < idx.size(); ++i) {
        EnergyDeposit d;
        d.event_index = to_index(idx[i]);
        d.volume = volume_from(vol[i]);
        d.position = {x[i], y[i], z[i]};
        d.energy_kev = e[i];
        d.mechanism = mech[i] == "photoelectric" ? Mechanism::Photoelectric : Mechanism::Compton;
        log.deposits.push_back(d);
    }

    const CsvTable ev = read_csv(dir / kEventsCsv);
    const auto ei = ev.numbers("event_index"), w = ev.numbers("weight");
    const auto sk = ev.numbers("substrate_keV"), nk = ev.numbers("nai_keV");
    for (std::size_t i = 0; i < ei.size(); ++i)
        log.events.push_back({to_index(ei[i]), w[i], sk[i], nk[i]});
    return log;
}

void write_charge_states(std::span<const ChargeState> states, const fs::path& file)
{
    CsvWriter out(file, {"event_index", "species", "weight", "x_f", "y_f", "z_f", "fate"});
    for (const auto& st : states) {
        for (const auto& c : st.carriers) {
            out.cell(static_cast<unsigned long long>(st.event_index))
                .cell(std::string(to_string(c.species)))
                .cell(c.weight)
                .cell(c.final.x)
                .cell(c.final.y)
                .cell(c.final.z)
                .cell(std::string(to_string(c.fate)));
            out.end_row();
        }
    }
    out.close();
}

void write_impacts(const ImpactSimulation& sim, const fs::path& dir)
{
    std::vector<std::string> header{"event_index", "weight", "substrate_keV"};
    for (const auto& q : sim.qubits)
        header.push_back(q);
    CsvWriter out(dir / kImpactsCsv, header);
    for (const auto& r : sim.impacts) {
        out.cell(static_cast<unsigned long long>(r.event_index)).cell(r.weight).cell(r.substrate_kev);
        for (double v : r.raw)
            out.cell(v);
        out.end_row();
    }
    out.close();

    json s;
    s["qubits"] = sim.qubits;
    s["n_decays"] = sim.n_decays;
    s["decays_per_second"] = sim.decays_per_second;
    s["hit_probability"] = sim.hit_probability;
    s["hit_probability_error"] = sim.hit_probability_error;
    write_json(s, dir / kImpactSummary);
}

ImpactSimulation read_impacts(const fs::path& dir)
{
    ImpactSimulation sim;
    const json s = read_json(dir / kImpactSummary);
    try {
        sim.qubits = s.at("qubits").get<std::vector<std::string>>();
        sim.n_decays = s.at("n_decays").get<std::uint64_t>();
        sim.decays_per_second = s.at("decays_per_second").get<double>();
        sim.hit_probability = s.at("hit_probability").get<double>();
        sim.hit_probability_error = s.at("hit_probability_error").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed impact summary: ") + e.what());
    }
    const CsvTable t = read_csv(dir / kImpactsCsv);
    const auto idx = t.numbers("event_index"), w = t.numbers("weight"), kev = t.numbers("substrate_keV");
    std::vector<std::vector<double>> cols;
    for (const auto& q : sim.qubits)
        cols.push_back(t.numbers(q));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        ImpactRecord r;
        r.event_index = to_index(idx[i]);
        r.weight = w[i];
        r.substrate_kev = kev[i];
        for (const auto& c : cols)
            r.raw.push_back(c[i]);
        sim.impacts.push_back(std::move(r));
    }
    return sim;
}

void write_jumps(std::span<const JumpEvent> jumps, const fs::path& file)
{
    CsvWriter out(file, {"index", "time", "magnitude", "method", "qubit"});
    for (const auto& j : jumps) {
        out.cell(static_cast<unsigned long long>(j.index))
            .cell(j.time)
            .cell(j.magnitude)
            .cell(std::string(to_string(j.method)))
            .cell(j.qubit);
        out.end_row();
    }
    out.close();
}

std::vector<JumpEvent> read_jumps(const fs::path& file)
{
    const CsvTable t = read_csv(file);
    const auto idx = t.numbers("index"), time = t.numbers("time"), mag = t.numbers("magnitude");
    const auto method = t.strings("method"), qubit = t.strings("qubit");
    std::vector<JumpEvent> out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        JumpEvent j;
        j.index = static_cast<std::size_t>(to_index(idx[i]));
        j.time = time[i];
        j.magnitude = mag[i];
        j.method = method[i] == "threshold" ? JumpMethod::Threshold : JumpMethod::StepConvolution;
        j.qubit = qubit[i];
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace qpgamma
