#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ser {

/// Predictions x and gold labels y of equal, non-zero length.
class BatchPair {
public:
    BatchPair(std::span<const double> x, std::span<const double> y);
    BatchPair(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }
    std::size_t size() const { return x_.size(); }

private:
    std::span<const double> x_;
    std::span<const double> y_;
};

/// Population (divide by n) moments of a pair of series.
struct MomentSummary {
    double mu_x = 0.0;
    double mu_y = 0.0;
    double var_x = 0.0;
    double var_y = 0.0;
    double cov_xy = 0.0;
    std::optional<double> rho_xy;  // empty when either variance is zero
};

struct MultitaskWeights {
    double w_v = 1.0;
    double w_a = 1.0;
    double w_d = 1.0;

    /// (alpha, beta, 1 - alpha - beta).
    static MultitaskWeights from_alpha_beta(double alpha, double beta);
    void validate() const;
};

enum class LossKind { Mse, Mae, Ccc };

std::string_view to_string(LossKind k);
/// Results-table label: MSE, MAE, CCCL.
std::string_view table_label(LossKind k);
/// Accepts "mse", "mae", "ccc" and "cccl".
LossKind parse_loss_kind(std::string_view s);

double mse(const BatchPair& b);
double mae(const BatchPair& b);
MomentSummary moments(const BatchPair& b);

/// Lin's concordance correlation coefficient from population moments.
/// Both series constant with equal means gives 1; exactly one constant gives 0.
double ccc(const BatchPair& b);
double ccc_loss(const BatchPair& b);

double loss_value(LossKind kind, const BatchPair& b);

double multitask_total(double l_v, double l_a, double l_d, const MultitaskWeights& w);

/// d loss / d x_i. MAE uses subgradient 0 where x_i == y_i. For CCC the
/// result is empty when the denominator var_x + var_y + (mu_x - mu_y)^2 is 0.
std::optional<Eigen::VectorXd> loss_gradient(LossKind kind, const BatchPair& b);

}  // namespace ser
