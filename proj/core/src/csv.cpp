#include "qpgamma/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "qpgamma/errors.hpp"

namespace qpgamma {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_)
        throw DataError("cannot write " + path.string());
    for (const auto& h : header)
        cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(double v)
{
    return cell(format_double(v));
}

CsvWriter& CsvWriter::cell(long long v)
{
    return cell(std::to_string(v));
}

CsvWriter& CsvWriter::cell(unsigned long long v)
{
    return cell(std::to_string(v));
}

CsvWriter& CsvWriter::cell(const std::string& v)
{
    if (!first_)
        out_ << ',';
    out_ << v;
    first_ = false;
    return *this;
}

void CsvWriter::end_row()
{
    out_ << '\n';
    first_ = true;
}

void CsvWriter::close()
{
    out_.close();
    if (!out_)
        throw DataError("failed writing " + path_.string());
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return i;
    throw DataError("CSV column '" + name + "' not found");
}

std::vector<double> CsvTable::numbers(const std::string& name) const
{
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (c >= r.size())
            throw DataError("short CSV row");
        const std::string& s = r[c];
        double v = 0.0;
        if (s == "nan")
            v = std::nan("");
        else if (s == "inf" || s == "-inf")
            v = s[0] == '-' ? -HUGE_VAL : HUGE_VAL;
        else {
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw DataError("non-numeric CSV value '" + s + "' in column " + name);
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> CsvTable::strings(const std::string& name) const
{
    const std::size_t c = column(name);
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (c >= r.size())
            throw DataError("short CSV row");
        out.push_back(r[c]);
    }
    return out;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string c;
        while (std::getline(ss, c, ','))
            cells.push_back(c);
        if (!l.empty() && l.back() == ',')
            cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line))
        throw DataError("empty CSV file " + path.string());
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        t.rows.push_back(split(line));
    }
    return t;
}

}  // namespace qpgamma
