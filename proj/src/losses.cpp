#include "ser/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace ser {

BatchPair::BatchPair(std::span<const double> x, std::span<const double> y) : x_(x), y_(y)
{
    if (x.size() != y.size()) throw std::invalid_argument("prediction and label lengths differ");
    if (x.empty()) throw std::invalid_argument("empty batch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("non-finite value in batch");
}

BatchPair::BatchPair(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
    : BatchPair(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                std::span<const double>(y.data(), static_cast<std::size_t>(y.size())))
{
}

MultitaskWeights MultitaskWeights::from_alpha_beta(double alpha, double beta)
{
    MultitaskWeights w{alpha, beta, 1.0 - alpha - beta};
    w.validate();
    return w;
}

void MultitaskWeights::validate() const
{
    if (!std::isfinite(w_v) || !std::isfinite(w_a) || !std::isfinite(w_d))
        throw std::invalid_argument("multitask weights must be finite");
}

std::string_view to_string(LossKind k)
{
    switch (k) {
    case LossKind::Mse: return "mse";
    case LossKind::Mae: return "mae";
    case LossKind::Ccc: return "ccc";
    }
    return "ccc";
}

std::string_view table_label(LossKind k)
{
    switch (k) {
    case LossKind::Mse: return "MSE";
    case LossKind::Mae: return "MAE";
    case LossKind::Ccc: return "CCCL";
    }
    return "CCCL";
}

LossKind parse_loss_kind(std::string_view s)
{
    if (s == "mse") return LossKind::Mse;
    if (s == "mae") return LossKind::Mae;
    if (s == "ccc" || s == "cccl") return LossKind::Ccc;
    throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

double mse(const BatchPair& b)
{
    const auto x = b.x(), y = b.y();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
    return acc / static_cast<double>(x.size());
}

double mae(const BatchPair& b)
{
    const auto x = b.x(), y = b.y();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
    return acc / static_cast<double>(x.size());
}

namespace {

bool is_constant(std::span<const double> v)
{
    for (double e : v)
        if (e != v.front()) return false;
    return true;
}

}  // namespace

MomentSummary moments(const BatchPair& b)
{
    const auto x = b.x(), y = b.y();
    const double n = static_cast<double>(x.size());
    MomentSummary m;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.mu_x += x[i];
        m.mu_y += y[i];
    }
    m.mu_x /= n;
    m.mu_y /= n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mu_x, dy = y[i] - m.mu_y;
        m.var_x += dx * dx;
        m.var_y += dy * dy;
        m.cov_xy += dx * dy;
    }
    m.var_x /= n;
    m.var_y /= n;
    m.cov_xy /= n;
    // exact zeros for constant series, which the summed mean may miss by an ulp
    if (is_constant(x)) {
        m.mu_x = x.front();
        m.var_x = m.cov_xy = 0.0;
    }
    if (is_constant(y)) {
        m.mu_y = y.front();
        m.var_y = m.cov_xy = 0.0;
    }
    if (m.var_x > 0.0 && m.var_y > 0.0) m.rho_xy = m.cov_xy / std::sqrt(m.var_x * m.var_y);
    return m;
}

double ccc(const BatchPair& b)
{
    const auto m = moments(b);
    const double bias = m.mu_x - m.mu_y;
    const double den = m.var_x + m.var_y + bias * bias;
    if (den == 0.0) return 1.0;
    if (m.var_x == 0.0 || m.var_y == 0.0) return 0.0;
    return 2.0 * m.cov_xy / den;
}

double ccc_loss(const BatchPair& b) { return 1.0 - ccc(b); }

double loss_value(LossKind kind, const BatchPair& b)
{
    switch (kind) {
    case LossKind::Mse: return mse(b);
    case LossKind::Mae: return mae(b);
    case LossKind::Ccc: return ccc_loss(b);
    }
    throw std::logic_error("unhandled loss kind");
}

double multitask_total(double l_v, double l_a, double l_d, const MultitaskWeights& w)
{
    return w.w_v * l_v + w.w_a * l_a + w.w_d * l_d;
}

std::optional<Eigen::VectorXd> loss_gradient(LossKind kind, const BatchPair& b)
{
    const auto x = b.x(), y = b.y();
    const auto n = static_cast<Eigen::Index>(x.size());
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd g(n);

    switch (kind) {
    case LossKind::Mse:
        for (Eigen::Index i = 0; i < n; ++i) g(i) = 2.0 * inv_n * (x[i] - y[i]);
        return g;
    case LossKind::Mae:
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = x[i] - y[i];
            g(i) = r > 0.0 ? inv_n : r < 0.0 ? -inv_n : 0.0;
        }
        return g;
    case LossKind::Ccc: {
        // ccc = 2 cov / den; d cov/dx_i = (y_i - mu_y)/n, d den/dx_i = 2 (x_i - mu_y)/n
        const auto m = moments(b);
        const double bias = m.mu_x - m.mu_y;
        const double den = m.var_x + m.var_y + bias * bias;
        if (den == 0.0) return std::nullopt;
        const double num = 2.0 * m.cov_xy;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dnum = 2.0 * inv_n * (y[i] - m.mu_y);
            const double dden = 2.0 * inv_n * (x[i] - m.mu_y);
            g(i) = -(dnum * den - num * dden) / (den * den);
        }
        return g;
    }
    }
    throw std::logic_error("unhandled loss kind");
}

}  // namespace ser
