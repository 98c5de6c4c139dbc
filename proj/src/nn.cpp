#include "ser/nn.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

namespace ser::nn {

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what)
{
    if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument(what + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

template <class Params, class Ptr>
std::vector<std::pair<std::string, Ptr>> collect(Params& p)
{
    std::vector<std::pair<std::string, Ptr>> out;
    out.emplace_back("batchnorm.gamma", &p.batchnorm.gamma);
    out.emplace_back("batchnorm.beta", &p.batchnorm.beta);
    for (std::size_t l = 0; l < p.lstm.size(); ++l) {
        const std::string prefix = "lstm" + std::to_string(l + 1) + ".";
        out.emplace_back(prefix + "W", &p.lstm[l].W);
        out.emplace_back(prefix + "U", &p.lstm[l].U);
        out.emplace_back(prefix + "b", &p.lstm[l].b);
    }
    out.emplace_back("trunk.W", &p.trunk.W);
    out.emplace_back("trunk.b", &p.trunk.b);
    for (std::size_t k = 0; k < p.heads.size(); ++k) {
        const std::string prefix = "head_" + std::string(k == 0 ? "valence" : k == 1 ? "arousal" : "dominance") + ".";
        out.emplace_back(prefix + "W", &p.heads[k].W);
        out.emplace_back(prefix + "b", &p.heads[k].b);
    }
    return out;
}

void glorot(Matrix& m, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
}

Matrix add_row(const Matrix& m, const Matrix& row) { return m.rowwise() + row.row(0); }

}  // namespace

std::vector<Eigen::Index> ModelParams::lstm_units() const
{
    std::vector<Eigen::Index> u;
    for (const auto& l : lstm) u.push_back(l.units());
    return u;
}

void ModelParams::validate() const
{
    const Eigen::Index d = input_dim();
    if (d < 1) throw std::invalid_argument("input dimension must be positive");
    require_shape(batchnorm.gamma, 1, d, "batchnorm.gamma");
    require_shape(batchnorm.beta, 1, d, "batchnorm.beta");
    require_shape(batchnorm.running_mean, 1, d, "batchnorm.running_mean");
    require_shape(batchnorm.running_var, 1, d, "batchnorm.running_var");
    if (!(batchnorm.epsilon > 0.0)) throw std::invalid_argument("batchnorm epsilon must be positive");
    if (!(batchnorm.momentum > 0.0 && batchnorm.momentum < 1.0))
        throw std::invalid_argument("batchnorm momentum must lie in (0, 1)");
    if (lstm.empty()) throw std::invalid_argument("at least one LSTM layer is required");

    Eigen::Index in = d;
    for (std::size_t l = 0; l < lstm.size(); ++l) {
        const auto u = lstm[l].U.rows();
        const std::string name = "lstm" + std::to_string(l + 1);
        if (u < 1) throw std::invalid_argument(name + " has no units");
        require_shape(lstm[l].W, in, 4 * u, name + ".W");
        require_shape(lstm[l].U, u, 4 * u, name + ".U");
        require_shape(lstm[l].b, 1, 4 * u, name + ".b");
        in = u;
    }
    const auto dense = trunk.W.cols();
    if (dense < 1) throw std::invalid_argument("trunk has no units");
    require_shape(trunk.W, in, dense, "trunk.W");
    require_shape(trunk.b, 1, dense, "trunk.b");
    for (const auto& h : heads) {
        require_shape(h.W, dense, 1, "head.W");
        require_shape(h.b, 1, 1, "head.b");
    }
    for (const auto& [name, t] : trainable_tensors(*this))
        if (!t->allFinite()) throw std::invalid_argument(name + " contains non-finite values");
}

std::vector<std::pair<std::string, Matrix*>> trainable_tensors(ModelParams& p)
{
    return collect<ModelParams, Matrix*>(p);
}

std::vector<std::pair<std::string, const Matrix*>> trainable_tensors(const ModelParams& p)
{
    return collect<const ModelParams, const Matrix*>(p);
}

ModelParams zeros_like(const ModelParams& p)
{
    ModelParams z = p;
    for (auto& [name, t] : trainable_tensors(z)) t->setZero();
    z.batchnorm.running_mean.setZero();
    z.batchnorm.running_var.setZero();
    return z;
}

std::uint64_t fingerprint(const ModelParams& p)
{
    // FNV-1a over the 64-bit patterns of every trainable value
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [name, t] : trainable_tensors(p)) {
        h = (h ^ static_cast<std::uint64_t>(t->rows())) * 1099511628211ull;
        h = (h ^ static_cast<std::uint64_t>(t->cols())) * 1099511628211ull;
        for (Eigen::Index i = 0; i < t->size(); ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, t->data() + i, sizeof bits);
            h = (h ^ bits) * 1099511628211ull;
        }
    }
    return h;
}

ModelParams init_params(Eigen::Index input_dim, const std::vector<Eigen::Index>& lstm_units, std::uint64_t seed,
                        Eigen::Index dense_units)
{
    if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
    if (lstm_units.empty()) throw std::invalid_argument("at least one LSTM layer is required");
    if (dense_units < 1) throw std::invalid_argument("dense layer needs at least one unit");
    for (auto u : lstm_units)
        if (u < 1) throw std::invalid_argument("LSTM layers need at least one unit");

    std::mt19937_64 rng(seed);
    ModelParams p;
    p.batchnorm.gamma = Matrix::Ones(1, input_dim);
    p.batchnorm.beta = Matrix::Zero(1, input_dim);
    p.batchnorm.running_mean = Matrix::Zero(1, input_dim);
    p.batchnorm.running_var = Matrix::Ones(1, input_dim);

    Eigen::Index in = input_dim;
    for (auto u : lstm_units) {
        LstmLayerParams layer;
        layer.W.resize(in, 4 * u);
        layer.U.resize(u, 4 * u);
        layer.b = Matrix::Zero(1, 4 * u);
        for (int g = 0; g < 4; ++g) {
            Matrix w(in, u), r(u, u);
            glorot(w, in, u, rng);
            glorot(r, u, u, rng);
            layer.W.middleCols(g * u, u) = w;
            layer.U.middleCols(g * u, u) = r;
        }
        layer.bias(Gate::Forget).setOnes();
        p.lstm.push_back(std::move(layer));
        in = u;
    }

    p.trunk.W.resize(in, dense_units);
    glorot(p.trunk.W, in, dense_units, rng);
    p.trunk.b = Matrix::Zero(1, dense_units);
    p.trunk.activation = Activation::Linear;
    for (auto& h : p.heads) {
        h.W.resize(dense_units, 1);
        glorot(h.W, dense_units, 1, rng);
        h.b = Matrix::Zero(1, 1);
        h.activation = Activation::Tanh;
    }
    return p;
}

ForwardResult forward(const ModelParams& p, const Sequence& batch, bool training)
{
    if (batch.empty()) throw std::invalid_argument("sequence must have at least one time step");
    const Eigen::Index n = batch.front().rows();
    const Eigen::Index d = p.input_dim();
    if (n < 1) throw std::invalid_argument("batch must hold at least one example");
    for (const auto& x : batch) {
        if (x.rows() != n) throw std::invalid_argument("time steps disagree on batch size");
        if (x.cols() != d)
            throw std::invalid_argument("input has " + std::to_string(x.cols()) + " features, model expects " +
                                        std::to_string(d));
    }
    const std::size_t steps = batch.size();

    ForwardResult res;
    auto& cache = res.cache;
    cache.training = training;
    cache.batch = n;
    cache.steps = steps;
    if (training) cache.params_fingerprint = fingerprint(p);

    // batchnorm over the feature axis, statistics pooled over batch and time
    const auto& bn = p.batchnorm;
    Matrix mean, var;
    if (training) {
        const double m = static_cast<double>(n) * static_cast<double>(steps);
        mean = Matrix::Zero(1, d);
        for (const auto& x : batch) mean += x.colwise().sum();
        mean /= m;
        var = Matrix::Zero(1, d);
        for (const auto& x : batch) var += (x.rowwise() - mean.row(0)).array().square().matrix().colwise().sum();
        var /= m;
        cache.batch_mean = mean;
        cache.batch_var = var;
    } else {
        mean = bn.running_mean;
        var = bn.running_var;
    }
    const Eigen::RowVectorXd inv_std = (var.array() + bn.epsilon).rsqrt().matrix();

    Sequence layer_in(steps);
    cache.xhat.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix xhat = ((batch[t].rowwise() - mean.row(0)).array().rowwise() * inv_std.array()).matrix();
        layer_in[t] = add_row((xhat.array().rowwise() * bn.gamma.row(0).array()).matrix(), bn.beta);
        cache.xhat[t] = std::move(xhat);
    }

    cache.lstm.resize(p.lstm.size());
    for (std::size_t l = 0; l < p.lstm.size(); ++l) {
        const auto& layer = p.lstm[l];
        const Eigen::Index u = layer.units();
        auto& lc = cache.lstm[l];
        lc.input = std::move(layer_in);
        for (Sequence* s : {&lc.h, &lc.c, &lc.i, &lc.f, &lc.g, &lc.o, &lc.tanh_c}) s->resize(steps);

        for (std::size_t t = 0; t < steps; ++t) {
            Matrix z = add_row(lc.input[t] * layer.W, layer.b);
            if (t > 0) z.noalias() += lc.h[t - 1] * layer.U;
            lc.i[t] = sigmoid(z.middleCols(0, u));
            lc.f[t] = sigmoid(z.middleCols(u, u));
            lc.g[t] = z.middleCols(2 * u, u).array().tanh().matrix();
            lc.o[t] = sigmoid(z.middleCols(3 * u, u));
            Matrix c = lc.i[t].cwiseProduct(lc.g[t]);
            if (t > 0) c += lc.f[t].cwiseProduct(lc.c[t - 1]);
            lc.tanh_c[t] = c.array().tanh().matrix();
            lc.h[t] = lc.o[t].cwiseProduct(lc.tanh_c[t]);
            lc.c[t] = std::move(c);
        }
        layer_in = lc.h;
    }

    cache.trunk_out = add_row(cache.lstm.back().h.back() * p.trunk.W, p.trunk.b);
    if (p.trunk.activation == Activation::Tanh) cache.trunk_out = cache.trunk_out.array().tanh().matrix();

    cache.heads_out.resize(n, 3);
    for (int k = 0; k < 3; ++k) {
        const auto& h = p.heads[static_cast<std::size_t>(k)];
        Eigen::VectorXd out = (cache.trunk_out * h.W).col(0).array() + h.b(0, 0);
        if (h.activation == Activation::Tanh) out = out.array().tanh().matrix();
        cache.heads_out.col(k) = out;
    }
    res.predictions = cache.heads_out;
    return res;
}

void update_running_stats(ModelParams& p, const ForwardCache& cache)
{
    if (!cache.training) throw std::invalid_argument("running statistics need a training-mode cache");
    auto& bn = p.batchnorm;
    bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * cache.batch_mean;
    bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * cache.batch_var;
}

Gradients backward(const ModelParams& p, const ForwardCache& cache, const Matrix& dpred)
{
    if (!cache.training) throw std::invalid_argument("backward needs a training-mode forward cache");
    if (cache.params_fingerprint != fingerprint(p))
        throw std::invalid_argument("forward cache is stale: parameters changed since the forward pass");
    const Eigen::Index n = cache.batch;
    if (dpred.rows() != n || dpred.cols() != 3)
        throw std::invalid_argument("prediction gradient must be batch x 3");

    Gradients grads;
    auto& g = grads.params;
    g = zeros_like(p);

    // heads
    Matrix d_trunk = Matrix::Zero(n, p.trunk.W.cols());
    for (int k = 0; k < 3; ++k) {
        const auto& h = p.heads[static_cast<std::size_t>(k)];
        Eigen::VectorXd dz = dpred.col(k);
        if (h.activation == Activation::Tanh)
            dz = dz.cwiseProduct((1.0 - cache.heads_out.col(k).array().square()).matrix());
        auto& gh = g.heads[static_cast<std::size_t>(k)];
        gh.W = cache.trunk_out.transpose() * dz;
        gh.b(0, 0) = dz.sum();
        d_trunk.noalias() += dz * h.W.transpose();
    }

    // trunk
    if (p.trunk.activation == Activation::Tanh)
        d_trunk = d_trunk.cwiseProduct((1.0 - cache.trunk_out.array().square()).matrix());
    const Matrix& last_h = cache.lstm.back().h.back();
    g.trunk.W = last_h.transpose() * d_trunk;
    g.trunk.b = d_trunk.colwise().sum();

    // LSTM stack, top to bottom. d_out[t] is the gradient arriving at h[t] from above.
    const std::size_t steps = cache.steps;
    Sequence d_out(steps);
    for (std::size_t t = 0; t < steps; ++t) d_out[t] = Matrix::Zero(n, p.lstm.back().units());
    d_out.back() = d_trunk * p.trunk.W.transpose();

    for (std::size_t l = p.lstm.size(); l-- > 0;) {
        const auto& layer = p.lstm[l];
        const auto& lc = cache.lstm[l];
        auto& gl = g.lstm[l];
        const Eigen::Index u = layer.units();
        Sequence d_in(steps);
        Matrix dh_next = Matrix::Zero(n, u);
        Matrix dc_next = Matrix::Zero(n, u);
        Matrix dz(n, 4 * u);

        for (std::size_t t = steps; t-- > 0;) {
            const Matrix dh = d_out[t] + dh_next;
            const Matrix d_o = dh.cwiseProduct(lc.tanh_c[t]);
            Matrix dc = dh.cwiseProduct(lc.o[t]).cwiseProduct((1.0 - lc.tanh_c[t].array().square()).matrix());
            dc += dc_next;

            const auto& i = lc.i[t].array();
            const auto& f = lc.f[t].array();
            const auto& gg = lc.g[t].array();
            const auto& o = lc.o[t].array();
            dz.middleCols(0, u) = (dc.array() * gg * i * (1.0 - i)).matrix();
            if (t > 0)
                dz.middleCols(u, u) = (dc.array() * lc.c[t - 1].array() * f * (1.0 - f)).matrix();
            else
                dz.middleCols(u, u).setZero();
            dz.middleCols(2 * u, u) = (dc.array() * i * (1.0 - gg.square())).matrix();
            dz.middleCols(3 * u, u) = (d_o.array() * o * (1.0 - o)).matrix();

            gl.W.noalias() += lc.input[t].transpose() * dz;
            if (t > 0) gl.U.noalias() += lc.h[t - 1].transpose() * dz;
            gl.b += dz.colwise().sum();
            d_in[t] = dz * layer.W.transpose();
            dh_next = dz * layer.U.transpose();
            dc_next = dc.cwiseProduct(lc.f[t]);
        }
        d_out = std::move(d_in);
    }

    // batchnorm: d_out now holds gradients with respect to the normalized outputs
    const auto& bn = p.batchnorm;
    const Eigen::Index d = p.input_dim();
    const double m = static_cast<double>(n) * static_cast<double>(steps);
    const Eigen::RowVectorXd inv_std = (cache.batch_var.array() + bn.epsilon).rsqrt().matrix();
    Eigen::RowVectorXd sum_dxhat = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd sum_dxhat_xhat = Eigen::RowVectorXd::Zero(d);
    Sequence dxhat(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        g.batchnorm.gamma += d_out[t].cwiseProduct(cache.xhat[t]).colwise().sum();
        g.batchnorm.beta += d_out[t].colwise().sum();
        dxhat[t] = (d_out[t].array().rowwise() * bn.gamma.row(0).array()).matrix();
        sum_dxhat += dxhat[t].colwise().sum();
        sum_dxhat_xhat += dxhat[t].cwiseProduct(cache.xhat[t]).colwise().sum();
    }
    grads.input.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix dx = (m * dxhat[t]).rowwise() - sum_dxhat;
        dx -= (cache.xhat[t].array().rowwise() * sum_dxhat_xhat.array()).matrix();
        grads.input[t] = ((dx.array().rowwise() * inv_std.array()) / m).matrix();
    }
    return grads;
}

RmspropState RmspropState::for_params(const ModelParams& p, double learning_rate, double rho, double epsilon)
{
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("RMSprop rho must lie in (0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("RMSprop epsilon must be positive");
    RmspropState s;
    s.accumulators = zeros_like(p);
    s.rho = rho;
    s.learning_rate = learning_rate;
    s.epsilon = epsilon;
    return s;
}

void rmsprop_step(ModelParams& p, const ModelParams& grads, RmspropState& state)
{
    auto params = trainable_tensors(p);
    const auto gs = trainable_tensors(grads);
    auto accs = trainable_tensors(state.accumulators);
    if (params.size() != gs.size() || params.size() != accs.size())
        throw std::invalid_argument("RMSprop: parameter, gradient and accumulator layouts differ");
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& w = *params[k].second;
        const Matrix& gr = *gs[k].second;
        Matrix& acc = *accs[k].second;
        if (gr.rows() != w.rows() || gr.cols() != w.cols() || acc.rows() != w.rows() || acc.cols() != w.cols())
            throw std::invalid_argument("RMSprop: shape mismatch for " + params[k].first);
        acc = state.rho * acc + (1.0 - state.rho) * gr.cwiseAbs2();
        w.array() -= state.learning_rate * gr.array() / (acc.array().sqrt() + state.epsilon);
    }
}

Sequence as_sequence(Matrix x)
{
    Sequence s;
    s.push_back(std::move(x));
    return s;
}

}  // namespace ser::nn
