#include "ser/scatter.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "ser/feature_csv.hpp"

namespace ser {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 48.0;
constexpr const char* kGoldColour = "#1f77b4";
constexpr const char* kPredColour = "#ff7f0e";

double to_px_x(double v) { return kMargin + (std::clamp(v, -1.0, 1.0) + 1.0) / 2.0 * kSize; }
double to_px_y(double v) { return kMargin + (1.0 - std::clamp(v, -1.0, 1.0)) / 2.0 * kSize; }

std::string px(double v) { return csv::format_fixed(v, 2); }

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_scatter_csv(std::ostream& out, const std::vector<ScatterPoint>& points)
{
    out << "id,gold_v,gold_a,pred_v,pred_a\n";
    for (const auto& p : points)
        out << p.id << ',' << csv::format_double(p.gold.valence) << ',' << csv::format_double(p.gold.arousal) << ','
            << csv::format_double(p.pred.valence) << ',' << csv::format_double(p.pred.arousal) << '\n';
}

std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title)
{
    const double full = kSize + 2 * kMargin;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(full) << "\" height=\"" << px(full)
      << "\" viewBox=\"0 0 " << px(full) << ' ' << px(full) << "\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << px(full) << "\" height=\"" << px(full) << "\" fill=\"white\"/>\n";
    if (!title.empty())
        s << "<text x=\"" << px(full / 2) << "\" y=\"" << px(kMargin / 2) << "\" text-anchor=\"middle\" font-size=\"14\">"
          << escape(title) << "</text>\n";

    // frame, zero axes and ticks
    s << "<rect x=\"" << px(kMargin) << "\" y=\"" << px(kMargin) << "\" width=\"" << px(kSize) << "\" height=\""
      << px(kSize) << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << px(to_px_x(-1)) << "\" y1=\"" << px(to_px_y(0)) << "\" x2=\"" << px(to_px_x(1)) << "\" y2=\""
      << px(to_px_y(0)) << "\" stroke=\"#bbbbbb\"/>\n";
    s << "<line x1=\"" << px(to_px_x(0)) << "\" y1=\"" << px(to_px_y(-1)) << "\" x2=\"" << px(to_px_x(0)) << "\" y2=\""
      << px(to_px_y(1)) << "\" stroke=\"#bbbbbb\"/>\n";
    for (int t = -2; t <= 2; ++t) {
        const double v = t / 2.0;
        const std::string label = csv::format_fixed(v, 1);
        s << "<text x=\"" << px(to_px_x(v)) << "\" y=\"" << px(kMargin + kSize + 16) << "\" text-anchor=\"middle\" font-size=\"11\">"
          << label << "</text>\n";
        s << "<text x=\"" << px(kMargin - 6) << "\" y=\"" << px(to_px_y(v) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << label << "</text>\n";
    }
    s << "<text x=\"" << px(full / 2) << "\" y=\"" << px(full - 8) << "\" text-anchor=\"middle\" font-size=\"12\">valence</text>\n";
    s << "<text x=\"12\" y=\"" << px(full / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 "
      << px(full / 2) << ")\">arousal</text>\n";

    s << "<g id=\"gold\" fill=\"" << kGoldColour << "\" fill-opacity=\"0.6\">\n";
    for (const auto& p : points)
        s << "<circle cx=\"" << px(to_px_x(p.gold.valence)) << "\" cy=\"" << px(to_px_y(p.gold.arousal)) << "\" r=\"3\"/>\n";
    s << "</g>\n";
    s << "<g id=\"pred\" fill=\"" << kPredColour << "\" fill-opacity=\"0.6\">\n";
    for (const auto& p : points)
        s << "<circle cx=\"" << px(to_px_x(p.pred.valence)) << "\" cy=\"" << px(to_px_y(p.pred.arousal)) << "\" r=\"3\"/>\n";
    s << "</g>\n";

    // legend
    s << "<circle cx=\"" << px(kMargin + 12) << "\" cy=\"" << px(kMargin + 14) << "\" r=\"4\" fill=\"" << kGoldColour << "\"/>\n";
    s << "<text x=\"" << px(kMargin + 22) << "\" y=\"" << px(kMargin + 18) << "\" font-size=\"11\">gold</text>\n";
    s << "<circle cx=\"" << px(kMargin + 12) << "\" cy=\"" << px(kMargin + 30) << "\" r=\"4\" fill=\"" << kPredColour << "\"/>\n";
    s << "<text x=\"" << px(kMargin + 22) << "\" y=\"" << px(kMargin + 34) << "\" font-size=\"11\">predicted</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace ser
