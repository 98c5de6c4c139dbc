#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ser/features.hpp"

namespace ser {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using IdFeatures = std::pair<std::string, FeatureVector>;

/// Parses `id,f1..fd`. Rows keep file order. Throws CsvError on a dimension
/// mismatch, a non-numeric cell or a duplicate id.
std::vector<IdFeatures> load_feature_csv(const std::filesystem::path& path, std::size_t expected_dim,
                                         FeatureSource source = FeatureSource::External);
std::vector<IdFeatures> parse_feature_csv(std::istream& in, std::size_t expected_dim,
                                          FeatureSource source = FeatureSource::External);

/// Writes the same layout; numbers use 17 significant digits so a reload is exact.
/// `dim` fixes the header width for empty row sets; 0 takes it from the first row.
void write_feature_csv(std::ostream& out, const std::vector<IdFeatures>& rows, std::size_t dim = 0);
void write_feature_csv(const std::filesystem::path& path, const std::vector<IdFeatures>& rows,
                       std::size_t dim = 0);

namespace csv {

std::vector<std::string> split(const std::string& line, char sep = ',');
/// Strict decimal parse of a whole cell.
double parse_double(const std::string& cell);
/// Shortest text that parses back to the same double.
std::string format_double(double v);
std::string format_fixed(double v, int decimals);

}  // namespace csv

}  // namespace ser
