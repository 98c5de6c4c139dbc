#include <doctest.h>

#include <random>
#include <sstream>

#include "ser/feature_csv.hpp"

using namespace ser;

namespace {

std::string csv_with(std::size_t dim, std::size_t rows)
{
    std::ostringstream s;
    s << "id";
    for (std::size_t j = 1; j <= dim; ++j) s << ",f" << j;
    s << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        s << "utt" << r;
        for (std::size_t j = 0; j < dim; ++j) s << ',' << (0.5 * r - 0.1 * j);
        s << '\n';
    }
    return s.str();
}

}  // namespace

TEST_CASE("GeMAPS-width file is accepted")
{
    std::istringstream in(csv_with(46, 3));
    const auto rows = parse_feature_csv(in, kGemapsHsfDim, FeatureSource::Gemaps);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].first == "utt0");
    CHECK(rows[2].first == "utt2");
    CHECK(rows[1].second.values.size() == 46);
    CHECK(rows[1].second.values[2] == doctest::Approx(0.3));
    CHECK(rows[1].second.source == FeatureSource::Gemaps);
}

TEST_CASE("dimension mismatch is rejected")
{
    std::istringstream in(csv_with(68, 2));
    CHECK_THROWS_AS(parse_feature_csv(in, 46), CsvError);

    std::istringstream ragged("id,f1,f2\na,1,2\nb,1\n");
    CHECK_THROWS_AS(parse_feature_csv(ragged, 2), CsvError);
}

TEST_CASE("header-only file gives an empty list")
{
    std::istringstream in(csv_with(46, 0));
    CHECK(parse_feature_csv(in, 46).empty());
    std::istringstream nothing("");
    CHECK(parse_feature_csv(nothing, 46).empty());
}

TEST_CASE("bad cells and duplicate ids")
{
    std::istringstream text("id,f1,f2\na,1,abc\n");
    CHECK_THROWS_AS(parse_feature_csv(text, 2), CsvError);
    std::istringstream trailing("id,f1\na,1.5x\n");
    CHECK_THROWS_AS(parse_feature_csv(trailing, 1), CsvError);
    std::istringstream empty_cell("id,f1\na,\n");
    CHECK_THROWS_AS(parse_feature_csv(empty_cell, 1), CsvError);
    std::istringstream dup("id,f1\na,1\na,2\n");
    CHECK_THROWS_AS(parse_feature_csv(dup, 1), CsvError);
    std::istringstream bad_header("name,f1\na,1\n");
    CHECK_THROWS_AS(parse_feature_csv(bad_header, 1), CsvError);
}

TEST_CASE("export then import reproduces values exactly")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0.0, 1e3);
    std::vector<IdFeatures> rows;
    for (int r = 0; r < 10; ++r) {
        FeatureVector fv;
        for (int j = 0; j < 68; ++j) fv.values.push_back(nd(rng));
        rows.emplace_back("u" + std::to_string(r), fv);
    }
    std::stringstream s;
    write_feature_csv(s, rows);
    const auto back = parse_feature_csv(s, 68);
    REQUIRE(back.size() == rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        CHECK(back[r].first == rows[r].first);
        CHECK(back[r].second.values == rows[r].second.values);
    }

    std::stringstream empty;
    write_feature_csv(empty, {}, 68);
    CHECK(parse_feature_csv(empty, 68).empty());
}
