#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ser::nn {

using Matrix = Eigen::MatrixXd;

/// A batch of sequences: element t holds the n x d inputs at time step t.
using Sequence = std::vector<Matrix>;

struct BatchNormParams {
    Matrix gamma;  // 1 x d
    Matrix beta;   // 1 x d
    Matrix running_mean;
    Matrix running_var;
    double epsilon = 1e-5;
    double momentum = 0.99;
};

/// Gate blocks are stored side by side in the order below, so W is
/// in x 4u, U is u x 4u and b is 1 x 4u.
enum class Gate { Input = 0, Forget = 1, Cell = 2, Output = 3 };

struct LstmLayerParams {
    Matrix W;
    Matrix U;
    Matrix b;

    Eigen::Index units() const { return U.rows(); }
    Eigen::Index input_dim() const { return W.rows(); }

    auto input_weights(Gate g) { return W.middleCols(static_cast<int>(g) * units(), units()); }
    auto input_weights(Gate g) const { return W.middleCols(static_cast<int>(g) * units(), units()); }
    auto recurrent_weights(Gate g) { return U.middleCols(static_cast<int>(g) * units(), units()); }
    auto recurrent_weights(Gate g) const { return U.middleCols(static_cast<int>(g) * units(), units()); }
    auto bias(Gate g) { return b.middleCols(static_cast<int>(g) * units(), units()); }
    auto bias(Gate g) const { return b.middleCols(static_cast<int>(g) * units(), units()); }
};

enum class Activation { Linear, Tanh };

struct DenseParams {
    Matrix W;  // in x out
    Matrix b;  // 1 x out
    Activation activation = Activation::Linear;
};

/// batchnorm -> LSTM stack (all but the last return sequences) -> dense trunk -> 3 tanh heads.
struct ModelParams {
    BatchNormParams batchnorm;
    std::vector<LstmLayerParams> lstm;
    DenseParams trunk;
    std::array<DenseParams, 3> heads;

    Eigen::Index input_dim() const { return batchnorm.gamma.cols(); }
    std::vector<Eigen::Index> lstm_units() const;
    /// Throws std::invalid_argument if layer shapes do not chain.
    void validate() const;
};

/// Every trainable tensor with a stable name, in a fixed order.
std::vector<std::pair<std::string, Matrix*>> trainable_tensors(ModelParams& p);
std::vector<std::pair<std::string, const Matrix*>> trainable_tensors(const ModelParams& p);

/// Same shapes as `p`, all zero (running statistics included).
ModelParams zeros_like(const ModelParams& p);

/// Fingerprint over all trainable values; used to detect stale caches.
std::uint64_t fingerprint(const ModelParams& p);

inline constexpr std::array<Eigen::Index, 3> kDefaultLstmUnits{256, 256, 256};
inline constexpr Eigen::Index kDefaultDenseUnits = 64;

/// Glorot-uniform weights from a seeded generator, forget-gate bias 1, other
/// biases 0, batchnorm gamma 1 / beta 0 / running stats (0, 1).
ModelParams init_params(Eigen::Index input_dim, const std::vector<Eigen::Index>& lstm_units, std::uint64_t seed,
                        Eigen::Index dense_units = kDefaultDenseUnits);

struct LstmCache {
    Sequence input;
    Sequence h;  // h[t] after step t
    Sequence c;
    Sequence i, f, g, o;
    Sequence tanh_c;
};

struct ForwardCache {
    bool training = false;
    std::uint64_t params_fingerprint = 0;
    Eigen::Index batch = 0;
    std::size_t steps = 0;
    Matrix batch_mean;  // 1 x d, training only
    Matrix batch_var;
    Sequence xhat;
    std::vector<LstmCache> lstm;
    Matrix trunk_out;  // n x dense
    Matrix heads_out;  // n x 3
};

struct ForwardResult {
    Matrix predictions;  // n x 3, columns valence, arousal, dominance
    ForwardCache cache;
};

/// Training mode normalizes with the batch statistics over batch and time;
/// inference mode uses the running statistics. `p` is never modified.
ForwardResult forward(const ModelParams& p, const Sequence& batch, bool training);

/// Moves the running statistics towards the batch statistics held in a training cache.
void update_running_stats(ModelParams& p, const ForwardCache& cache);

struct Gradients {
    ModelParams params;  // running statistics are left at zero
    Sequence input;
};

/// Exact gradients of a scalar loss whose derivative with respect to the
/// predictions is `dpred` (n x 3). Requires a training-mode cache made with `p`.
Gradients backward(const ModelParams& p, const ForwardCache& cache, const Matrix& dpred);

struct RmspropState {
    ModelParams accumulators;
    double rho = 0.9;
    double learning_rate = 0.001;
    double epsilon = 1e-7;

    static RmspropState for_params(const ModelParams& p, double learning_rate = 0.001, double rho = 0.9,
                                   double epsilon = 1e-7);
};

/// acc <- rho acc + (1 - rho) g^2;  param <- param - lr g / (sqrt(acc) + eps).
void rmsprop_step(ModelParams& p, const ModelParams& grads, RmspropState& state);

/// Wraps one n x d matrix as a length-1 sequence.
Sequence as_sequence(Matrix x);

}  // namespace ser::nn
