#include <doctest.h>

#include <regex>
#include <sstream>

#include "ser/scatter.hpp"

using namespace ser;

namespace {

struct Circles {
    std::vector<std::pair<double, double>> gold, pred;
};

std::vector<std::pair<double, double>> circles_in(const std::string& group)
{
    static const std::regex circle(R"re(<circle cx="([-0-9.]+)" cy="([-0-9.]+)")re");
    std::vector<std::pair<double, double>> out;
    for (auto it = std::sregex_iterator(group.begin(), group.end(), circle); it != std::sregex_iterator(); ++it)
        out.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
    return out;
}

std::string group(const std::string& svg, const std::string& id)
{
    const auto start = svg.find("<g id=\"" + id + "\"");
    REQUIRE(start != std::string::npos);
    return svg.substr(start, svg.find("</g>", start) - start);
}

Circles parse(const std::string& svg) { return {circles_in(group(svg, "gold")), circles_in(group(svg, "pred"))}; }

}  // namespace

TEST_CASE("perfect predictions coincide with gold")
{
    std::vector<ScatterPoint> pts{{"a", {0.1, -0.4, 0}, {0.1, -0.4, 0}}, {"b", {-0.9, 0.7, 0}, {-0.9, 0.7, 0}}};
    const auto c = parse(scatter_svg(pts, "perfect"));
    REQUIRE(c.gold.size() == 2);
    CHECK(c.gold == c.pred);
}

TEST_CASE("points map into the plot square and clamp outside it")
{
    std::vector<ScatterPoint> pts{{"lo", {-1, -1, 0}, {-3, -3, 0}}, {"hi", {1, 1, 0}, {2, 5, 0}}, {"mid", {0, 0, 0}, {0, 0, 0}}};
    const auto c = parse(scatter_svg(pts));
    REQUIRE(c.pred.size() == 3);
    // valence grows rightwards, arousal upwards
    CHECK(c.gold[0] == std::pair{48.0, 528.0});
    CHECK(c.gold[1] == std::pair{528.0, 48.0});
    CHECK(c.gold[2] == std::pair{288.0, 288.0});
    CHECK(c.pred[0] == c.gold[0]);
    CHECK(c.pred[1] == c.gold[1]);
}

TEST_CASE("SVG output is deterministic and escapes the title")
{
    std::vector<ScatterPoint> pts{{"x", {0.3, 0.2, 0}, {0.1, 0.0, 0}}};
    CHECK(scatter_svg(pts, "a<b & c") == scatter_svg(pts, "a<b & c"));
    const auto svg = scatter_svg(pts, "a<b & c");
    CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
    CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
    CHECK(parse(scatter_svg({})).gold.empty());
}

TEST_CASE("scatter CSV")
{
    std::vector<ScatterPoint> pts{{"u1", {0.5, -0.25, 0.9}, {0.125, 1, -1}}};
    std::ostringstream out;
    write_scatter_csv(out, pts);
    CHECK(out.str() == "id,gold_v,gold_a,pred_v,pred_a\nu1,0.5,-0.25,0.125,1\n");
}
