#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace ser {

/// Valence, arousal, dominance.
struct EmotionTriple {
    double valence = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;

    double operator[](std::size_t dim) const { return dim == 0 ? valence : dim == 1 ? arousal : dominance; }
    double& operator[](std::size_t dim) { return dim == 0 ? valence : dim == 1 ? arousal : dominance; }
    bool operator==(const EmotionTriple&) const = default;
};

inline constexpr std::array<const char*, 3> kDimensionNames{"valence", "arousal", "dominance"};

struct EvaluationReport {
    double ccc_v = 0.0;
    double ccc_a = 0.0;
    double ccc_d = 0.0;
    double ccc_mean = 0.0;
    double mse_mean = 0.0;
    double mae_mean = 0.0;

    static EvaluationReport from_dimensions(const std::array<double, 3>& ccc, const std::array<double, 3>& mse,
                                            const std::array<double, 3>& mae);
};

/// Whole-partition metrics: each dimension is scored over the full list at once.
EvaluationReport evaluate(const std::vector<EmotionTriple>& pred, const std::vector<EmotionTriple>& gold);

/// `feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean`
inline constexpr const char* kReportCsvHeader = "feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean";
/// Values are written with 3 decimals.
std::string report_csv_row(const std::string& feature_set, const std::string& loss, const EvaluationReport& r);

}  // namespace ser
