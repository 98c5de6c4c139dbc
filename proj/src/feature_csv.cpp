#include "ser/feature_csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace ser {

namespace csv {

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            cells.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

double parse_double(const std::string& cell)
{
    std::size_t b = 0, e = cell.size();
    while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
    while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, v);
    if (b == e || ec != std::errc() || ptr != cell.data() + e) throw CsvError("non-numeric cell '" + cell + "'");
    return v;
}

std::string format_double(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string format_fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace csv

std::vector<IdFeatures> parse_feature_csv(std::istream& in, std::size_t expected_dim, FeatureSource source)
{
    std::vector<IdFeatures> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    const auto header = csv::split(line);
    if (header.empty() || header[0] != "id") throw CsvError("feature CSV header must start with 'id'");
    if (header.size() - 1 != expected_dim)
        throw CsvError("feature CSV has " + std::to_string(header.size() - 1) + " feature columns, expected " +
                       std::to_string(expected_dim));

    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto cells = csv::split(line);
        if (cells.size() != expected_dim + 1)
            throw CsvError("line " + std::to_string(line_no) + ": " + std::to_string(cells.size() - 1) +
                           " feature values, expected " + std::to_string(expected_dim));
        if (!seen.insert(cells[0]).second) throw CsvError("duplicate id '" + cells[0] + "'");
        FeatureVector fv;
        fv.source = source;
        fv.values.reserve(expected_dim);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            double v;
            try {
                v = csv::parse_double(cells[j]);
            } catch (const CsvError& e) {
                throw CsvError("line " + std::to_string(line_no) + ": " + e.what());
            }
            if (!std::isfinite(v)) throw CsvError("line " + std::to_string(line_no) + ": non-finite value");
            fv.values.push_back(v);
        }
        rows.emplace_back(std::move(cells[0]), std::move(fv));
    }
    return rows;
}

std::vector<IdFeatures> load_feature_csv(const std::filesystem::path& path, std::size_t expected_dim,
                                         FeatureSource source)
{
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path.string());
    return parse_feature_csv(in, expected_dim, source);
}

void write_feature_csv(std::ostream& out, const std::vector<IdFeatures>& rows, std::size_t dim)
{
    const std::size_t d = dim != 0 ? dim : rows.empty() ? 0 : rows.front().second.values.size();
    out << "id";
    for (std::size_t j = 1; j <= d; ++j) out << ",f" << j;
    out << '\n';
    for (const auto& [id, fv] : rows) {
        if (fv.values.size() != d) throw CsvError("rows differ in feature dimension");
        out << id;
        for (double v : fv.values) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

void write_feature_csv(const std::filesystem::path& path, const std::vector<IdFeatures>& rows, std::size_t dim)
{
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write " + path.string());
    write_feature_csv(out, rows, dim);
}

}  // namespace ser
