#include "ser/metrics.hpp"

#include <stdexcept>

#include "ser/feature_csv.hpp"
#include "ser/losses.hpp"

namespace ser {

EvaluationReport EvaluationReport::from_dimensions(const std::array<double, 3>& ccc, const std::array<double, 3>& mse,
                                                   const std::array<double, 3>& mae)
{
    EvaluationReport r;
    r.ccc_v = ccc[0];
    r.ccc_a = ccc[1];
    r.ccc_d = ccc[2];
    r.ccc_mean = (ccc[0] + ccc[1] + ccc[2]) / 3.0;
    r.mse_mean = (mse[0] + mse[1] + mse[2]) / 3.0;
    r.mae_mean = (mae[0] + mae[1] + mae[2]) / 3.0;
    return r;
}

EvaluationReport evaluate(const std::vector<EmotionTriple>& pred, const std::vector<EmotionTriple>& gold)
{
    if (pred.size() != gold.size()) throw std::invalid_argument("prediction and gold lists differ in length");
    if (pred.empty()) throw std::invalid_argument("cannot evaluate an empty partition");

    std::array<double, 3> c{}, s{}, a{};
    std::vector<double> x(pred.size()), y(pred.size());
    for (std::size_t dim = 0; dim < 3; ++dim) {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            x[i] = pred[i][dim];
            y[i] = gold[i][dim];
        }
        const BatchPair b(x, y);
        c[dim] = ccc(b);
        s[dim] = mse(b);
        a[dim] = mae(b);
    }
    return EvaluationReport::from_dimensions(c, s, a);
}

std::string report_csv_row(const std::string& feature_set, const std::string& loss, const EvaluationReport& r)
{
    std::string row = feature_set + "," + loss;
    for (double v : {r.ccc_v, r.ccc_a, r.ccc_d, r.ccc_mean, r.mse_mean, r.mae_mean})
        row += "," + csv::format_fixed(v, 3);
    return row;
}

}  // namespace ser
