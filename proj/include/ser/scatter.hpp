#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ser/metrics.hpp"

namespace ser {

struct ScatterPoint {
    std::string id;
    EmotionTriple gold;  // scaled to [-1, 1]
    EmotionTriple pred;
};

/// `id,gold_v,gold_a,pred_v,pred_a`
void write_scatter_csv(std::ostream& out, const std::vector<ScatterPoint>& points);

/// Valence (x) against arousal (y) over [-1, 1]^2; gold labels and
/// predictions drawn as two circle series. Points outside the square are clamped.
std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title = "");

}  // namespace ser
