#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace fpps {

/// A header plus string cells; one record per row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, throwing DataError if absent.
    std::size_t column(const std::string& name) const;
    std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

double parse_double(const std::string& text, const std::string& context);

}  // namespace fpps
