#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ser/feature_csv.hpp"
#include "ser/features.hpp"
#include "ser/losses.hpp"
#include "ser/metrics.hpp"
#include "ser/nn.hpp"

namespace ser {

struct Utterance {
    std::string id;
    int session = 0;
    FeatureVector features;
    EmotionTriple labels_raw;  // annotator scale [1, 5]
};

struct DatasetSplit {
    std::vector<Utterance> train;
    std::vector<Utterance> validation;
    std::vector<Utterance> test;
};

struct TrainConfig {
    LossKind loss = LossKind::Ccc;
    MultitaskWeights weights = MultitaskWeights::from_alpha_beta(0.1, 0.5);
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    std::vector<Eigen::Index> lstm_units{nn::kDefaultLstmUnits.begin(), nn::kDefaultLstmUnits.end()};
    Eigen::Index dense_units = nn::kDefaultDenseUnits;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct ExperimentResult {
    TrainConfig config;
    EvaluationReport test;
    EvaluationReport validation;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

struct TrainOutcome {
    nn::ModelParams params;
    ExperimentResult result;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// l' = (l - 3) / 2, mapping [1, 5] onto [-1, 1]. Throws std::out_of_range outside [1, 5].
EmotionTriple scale_labels(const EmotionTriple& raw);
EmotionTriple unscale_labels(const EmotionTriple& scaled);

/// Test partition is the whole of `test_session`; the remaining utterances
/// are shuffled with `seed` and floor(val_fraction * remaining) go to validation.
DatasetSplit loso_split(const std::vector<Utterance>& data, int test_session, double val_fraction, std::uint64_t seed);

/// Called with the ids of every training batch, before the update is applied.
using BatchObserver = std::function<void(const std::vector<std::string>& ids)>;

/// Mini-batch RMSprop training with early stopping on the validation loss.
/// Returns the best-validation parameters and their test/validation reports.
TrainOutcome train(const DatasetSplit& split, const TrainConfig& cfg, const BatchObserver& observer = {});

/// Inference-mode predictions in [-1, 1] for each utterance, in order.
std::vector<EmotionTriple> predict(const nn::ModelParams& p, const std::vector<Utterance>& data);
EvaluationReport evaluate_model(const nn::ModelParams& p, const std::vector<Utterance>& data);

// Weight search over alpha, beta in {0.0, 0.1, ..., 1.0} with alpha + beta <= 1.

struct GridCell {
    double alpha = 0.0;
    double beta = 0.0;
    std::optional<EvaluationReport> validation;
    std::string error;
};

struct GridSearchResult {
    double alpha = 0.0;
    double beta = 0.0;
    MultitaskWeights weights;
    std::vector<GridCell> table;
};

/// The 66 lattice points, alpha-major then beta ascending.
std::vector<std::pair<double, double>> weight_lattice();

/// Scores one weighting; returns the validation report used for selection.
using CellScorer = std::function<EvaluationReport(const MultitaskWeights&)>;

/// Picks the cell with the highest validation ccc_mean; ties go to the smaller
/// alpha, then the smaller beta. Throwing cells are recorded and skipped.
GridSearchResult grid_search_weights(const CellScorer& score);
GridSearchResult grid_search_weights(const DatasetSplit& split, const TrainConfig& base,
                                     std::size_t cell_max_epochs = 30);

void write_grid_csv(std::ostream& out, const GridSearchResult& g);

// Corpus manifest and experiment matrix.

struct ManifestEntry {
    std::string id;
    int session = 0;
    EmotionTriple labels_raw;
    std::string wav_path;  // may be empty when features come from a CSV
};

/// `id,session,valence,arousal,dominance,wav_path_or_blank` with a header row.
std::vector<ManifestEntry> parse_manifest(std::istream& in);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries);

/// Joins manifest rows with features by id. Throws std::invalid_argument if an id has no features.
std::vector<Utterance> join_features(const std::vector<ManifestEntry>& manifest, const std::vector<IdFeatures>& features);

struct Dataset {
    std::string name;
    std::vector<ManifestEntry> manifest;
    int test_session = 0;
    std::optional<MultitaskWeights> weights;  // overrides the base config when set
};

struct FeatureSet {
    std::string name;
    std::function<std::vector<IdFeatures>(const Dataset&)> extract;
};

struct MatrixRow {
    std::string dataset;
    std::string feature_set;
    LossKind loss = LossKind::Ccc;
    std::optional<ExperimentResult> result;
    std::string error;
    bool best = false;  // highest ccc_mean within its (dataset, feature set) part
};

inline constexpr std::array<LossKind, 3> kAllLosses{LossKind::Mse, LossKind::Mae, LossKind::Ccc};

/// One row per (dataset, feature set, loss); failures are recorded and the matrix continues.
std::vector<MatrixRow> run_matrix(const std::vector<Dataset>& datasets, const std::vector<FeatureSet>& feature_sets,
                                  const TrainConfig& base, double val_fraction = 0.2,
                                  const std::vector<LossKind>& losses = {kAllLosses.begin(), kAllLosses.end()});

inline constexpr const char* kMatrixCsvHeader =
    "dataset,feature_set,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean,best,error";
void write_matrix_csv(std::ostream& out, const std::vector<MatrixRow>& rows);

/// Seeded standard-normal features; labels_raw = 3 + 2 tanh(M f + noise) with
/// M ~ N(0, 1/d) per entry (3 x d) and noise std 0.3; sessions 1..5 round-robin.
std::vector<Utterance> synthetic_corpus(std::uint64_t seed, std::size_t n, std::size_t d);

}  // namespace ser
