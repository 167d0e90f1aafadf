#include "fpps/csv.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fpps/errors.hpp"

namespace fpps {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw DataError("CSV has no column named '" + name + "'");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.push_back(parse_double(rows[r][c], "column '" + name + "', row " + std::to_string(r + 1)));
    }
    return out;
}

CsvTable parse_csv(const std::string& text) {
    using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (boost::algorithm::trim_copy(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        try {
            Tokenizer tok(line);
            for (const auto& cell : tok) {
                cells.push_back(boost::algorithm::trim_copy(cell));
            }
        } catch (const boost::escaped_list_error& e) {
            throw DataError("CSV line " + std::to_string(line_no) + ": " + e.what());
        }
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError("CSV line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) {
        throw DataError("CSV input is empty");
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open CSV file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) {
            os << ',';
        }
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\n") != std::string::npos) {
            os << '"';
            for (char ch : c) {
                if (ch == '"') {
                    os << '\\';
                }
                os << ch;
            }
            os << '"';
        } else {
            os << c;
        }
    }
    os << '\n';
}

double parse_double(const std::string& text, const std::string& context) {
    const std::string t = boost::algorithm::trim_copy(text);
    double value = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw DataError("not a number: '" + text + "' (" + context + ")");
    }
    return value;
}

}  // namespace fpps
