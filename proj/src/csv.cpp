#include "odeident/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace odeident::cli {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

double parse_field(const std::string& field, int row, int col) {
    const char* begin = field.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw CsvError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                       ": cannot parse '" + field + "' as a finite number");
    return v;
}

}  // namespace

jets::SampleTable ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "t")
        throw CsvError("bad header '" + line + "': expected t,y1,...,ym");
    for (std::size_t i = 1; i < header.size(); ++i)
        if (header[i] != "y" + std::to_string(i))
            throw CsvError("bad header '" + line + "': expected t,y1,...,ym");
    const int m = static_cast<int>(header.size()) - 1;

    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    int row = 1;  // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (static_cast<int>(fields.size()) != m + 1)
            throw CsvError("row " + std::to_string(row) + ": expected " + std::to_string(m + 1) +
                           " fields, got " + std::to_string(fields.size()));
        double t = parse_field(fields[0], row, 1);
        if (!times.empty()) {
            if (t == times.back())
                throw CsvError("row " + std::to_string(row) + ": duplicate time " +
                               std::to_string(t));
            if (t < times.back())
                throw CsvError("row " + std::to_string(row) +
                               ": times must be strictly increasing");
        }
        times.push_back(t);
        std::vector<double> y(m);
        for (int c = 0; c < m; ++c) y[c] = parse_field(fields[c + 1], row, c + 2);
        rows.push_back(std::move(y));
    }
    if (times.empty()) throw CsvError("'" + path + "' has no data rows");

    jets::SampleTable table;
    table.t = std::move(times);
    table.y.resize(rows.size(), m);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < m; ++c) table.y(i, c) = rows[i][c];
    return table;
}

void write_csv(const std::string& path, const jets::SampleTable& table) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write '" + path + "'");
    out << "t";
    for (int c = 0; c < table.channels(); ++c) out << ",y" << (c + 1);
    out << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < table.samples(); ++i) {
        out << table.t[i];
        for (int c = 0; c < table.channels(); ++c) out << "," << table.y(i, c);
        out << "\n";
    }
}

}  // namespace odeident::cli
