#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qpgamma {

/// Minimal CSV writer: comma separated, doubles in round-trip precision.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(unsigned long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(unsigned long v) { return cell(static_cast<unsigned long long>(v)); }
    CsvWriter& cell(const std::string& v);
    void end_row();
    void close();

  private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool first_ = true;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
    std::vector<double> numbers(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;
};

/// Reads a file written by CsvWriter (no quoting). Throws DataError.
CsvTable read_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace qpgamma
