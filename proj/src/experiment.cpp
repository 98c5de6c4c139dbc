#include "ser/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace ser {

namespace {

constexpr std::size_t kInferenceChunk = 256;

nn::Matrix feature_matrix(const std::vector<Utterance>& data, std::size_t begin, std::size_t end)
{
    const auto d = static_cast<Eigen::Index>(data.at(begin).features.values.size());
    nn::Matrix x(static_cast<Eigen::Index>(end - begin), d);
    for (std::size_t i = begin; i < end; ++i) {
        const auto& v = data[i].features.values;
        if (static_cast<Eigen::Index>(v.size()) != d)
            throw std::invalid_argument("utterance " + data[i].id + " has a different feature dimension");
        x.row(static_cast<Eigen::Index>(i - begin)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return x;
}

nn::Matrix scaled_label_matrix(const std::vector<Utterance>& data)
{
    nn::Matrix y(static_cast<Eigen::Index>(data.size()), 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto s = scale_labels(data[i].labels_raw);
        for (int k = 0; k < 3; ++k) y(static_cast<Eigen::Index>(i), k) = s[static_cast<std::size_t>(k)];
    }
    return y;
}

double weight_of(const MultitaskWeights& w, int k) { return k == 0 ? w.w_v : k == 1 ? w.w_a : w.w_d; }

// Weighted multitask loss of predictions against labels, one pass per dimension.
double total_loss(LossKind kind, const MultitaskWeights& w, const nn::Matrix& pred, const nn::Matrix& gold)
{
    std::array<double, 3> l{};
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd x = pred.col(k), y = gold.col(k);
        l[static_cast<std::size_t>(k)] = loss_value(kind, BatchPair(x, y));
    }
    return multitask_total(l[0], l[1], l[2], w);
}

nn::Matrix predict_matrix(const nn::ModelParams& p, const std::vector<Utterance>& data)
{
    nn::Matrix out(static_cast<Eigen::Index>(data.size()), 3);
    for (std::size_t b = 0; b < data.size(); b += kInferenceChunk) {
        const std::size_t e = std::min(data.size(), b + kInferenceChunk);
        const auto res = nn::forward(p, nn::as_sequence(feature_matrix(data, b, e)), false);
        out.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b)) = res.predictions;
    }
    return out;
}

std::vector<EmotionTriple> to_triples(const nn::Matrix& m)
{
    std::vector<EmotionTriple> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1), m(i, 2)};
    return out;
}

std::vector<EmotionTriple> scaled_gold(const std::vector<Utterance>& data)
{
    std::vector<EmotionTriple> out;
    out.reserve(data.size());
    for (const auto& u : data) out.push_back(scale_labels(u.labels_raw));
    return out;
}

}  // namespace

void TrainConfig::validate() const
{
    weights.validate();
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
    if (patience > max_epochs) throw std::invalid_argument("patience must not exceed max_epochs");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning_rate must be positive");
    if (lstm_units.empty()) throw std::invalid_argument("at least one LSTM layer is required");
    if (dense_units < 1) throw std::invalid_argument("dense_units must be at least 1");
}

EmotionTriple scale_labels(const EmotionTriple& raw)
{
    EmotionTriple s;
    for (std::size_t k = 0; k < 3; ++k) {
        const double v = raw[k];
        if (!(v >= 1.0 && v <= 5.0))
            throw std::out_of_range(std::string(kDimensionNames[k]) + " label " + std::to_string(v) +
                                    " lies outside [1, 5]");
        s[k] = (v - 3.0) / 2.0;
    }
    return s;
}

EmotionTriple unscale_labels(const EmotionTriple& scaled)
{
    EmotionTriple r;
    for (std::size_t k = 0; k < 3; ++k) r[k] = 2.0 * scaled[k] + 3.0;
    return r;
}

DatasetSplit loso_split(const std::vector<Utterance>& data, int test_session, double val_fraction, std::uint64_t seed)
{
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must lie in (0, 1)");
    DatasetSplit split;
    std::vector<Utterance> rest;
    for (const auto& u : data) (u.session == test_session ? split.test : rest).push_back(u);
    if (split.test.empty()) throw std::invalid_argument("session " + std::to_string(test_session) + " not present");
    if (rest.empty()) throw std::invalid_argument("no utterances outside the test session");

    std::mt19937_64 rng(seed);
    std::shuffle(rest.begin(), rest.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(rest.size())));
    split.validation.assign(std::make_move_iterator(rest.begin()),
                            std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_val)));
    split.train.assign(std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_val)),
                       std::make_move_iterator(rest.end()));
    return split;
}

std::vector<EmotionTriple> predict(const nn::ModelParams& p, const std::vector<Utterance>& data)
{
    if (data.empty()) return {};
    return to_triples(predict_matrix(p, data));
}

EvaluationReport evaluate_model(const nn::ModelParams& p, const std::vector<Utterance>& data)
{
    return evaluate(predict(p, data), scaled_gold(data));
}

TrainOutcome train(const DatasetSplit& split, const TrainConfig& cfg, const BatchObserver& observer)
{
    cfg.validate();
    if (split.train.empty()) throw TrainingError("training partition is empty");
    if (split.validation.empty()) throw TrainingError("validation partition is empty");
    if (split.test.empty()) throw TrainingError("test partition is empty");

    const nn::Matrix x_train = feature_matrix(split.train, 0, split.train.size());
    const nn::Matrix y_train = scaled_label_matrix(split.train);
    const nn::Matrix y_val = scaled_label_matrix(split.validation);
    const auto d = x_train.cols();
    for (const auto* part : {&split.validation, &split.test})
        for (const auto& u : *part)
            if (static_cast<Eigen::Index>(u.features.values.size()) != d)
                throw std::invalid_argument("utterance " + u.id + " has a different feature dimension");

    std::unordered_set<std::string> test_ids;
    for (const auto& u : split.test) test_ids.insert(u.id);

    nn::ModelParams params = nn::init_params(d, cfg.lstm_units, cfg.seed, cfg.dense_units);
    auto state = nn::RmspropState::for_params(params, cfg.learning_rate);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    TrainOutcome out;
    out.result.config = cfg;
    nn::ModelParams best = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;

    std::vector<std::size_t> order(split.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::string> batch_ids;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t e = std::min(order.size(), b + cfg.batch_size);
            const auto n = static_cast<Eigen::Index>(e - b);
            nn::Matrix xb(n, d), yb(n, 3);
            batch_ids.clear();
            for (std::size_t i = b; i < e; ++i) {
                const auto r = static_cast<Eigen::Index>(i - b);
                xb.row(r) = x_train.row(static_cast<Eigen::Index>(order[i]));
                yb.row(r) = y_train.row(static_cast<Eigen::Index>(order[i]));
                const auto& id = split.train[order[i]].id;
                if (test_ids.contains(id)) throw TrainingError("test utterance " + id + " reached a training batch");
                batch_ids.push_back(id);
            }
            if (observer) observer(batch_ids);

            auto fwd = nn::forward(params, nn::as_sequence(std::move(xb)), true);
            std::array<double, 3> l{};
            nn::Matrix dpred(n, 3);
            for (int k = 0; k < 3; ++k) {
                const Eigen::VectorXd pk = fwd.predictions.col(k), yk = yb.col(k);
                const BatchPair pair(pk, yk);
                l[static_cast<std::size_t>(k)] = loss_value(cfg.loss, pair);
                const auto grad = loss_gradient(cfg.loss, pair);
                if (grad)
                    dpred.col(k) = weight_of(cfg.weights, k) * *grad;
                else
                    dpred.col(k).setZero();
            }
            const double total = multitask_total(l[0], l[1], l[2], cfg.weights);
            if (!std::isfinite(total))
                throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));

            const auto grads = nn::backward(params, fwd.cache, dpred);
            nn::rmsprop_step(params, grads.params, state);
            nn::update_running_stats(params, fwd.cache);
            loss_sum += total;
            ++batches;
        }

        const double val_loss = total_loss(cfg.loss, cfg.weights, predict_matrix(params, split.validation), y_val);
        if (!std::isfinite(val_loss))
            throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
        out.result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val_loss});

        if (val_loss < best_val) {
            best_val = val_loss;
            best = params;
            out.result.best_epoch = epoch;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }

    out.params = std::move(best);
    out.result.validation = evaluate_model(out.params, split.validation);
    out.result.test = evaluate_model(out.params, split.test);
    return out;
}

std::vector<std::pair<double, double>> weight_lattice()
{
    std::vector<std::pair<double, double>> cells;
    for (int a = 0; a <= 10; ++a)
        for (int b = 0; a + b <= 10; ++b) cells.emplace_back(a / 10.0, b / 10.0);
    return cells;
}

GridSearchResult grid_search_weights(const CellScorer& score)
{
    GridSearchResult g;
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& [alpha, beta] : weight_lattice()) {
        GridCell cell{alpha, beta, std::nullopt, {}};
        try {
            cell.validation = score(MultitaskWeights::from_alpha_beta(alpha, beta));
            // lattice order is alpha-major, beta ascending, so strict > keeps the tie-break
            if (std::isfinite(cell.validation->ccc_mean) && cell.validation->ccc_mean > best) {
                best = cell.validation->ccc_mean;
                g.alpha = alpha;
                g.beta = beta;
                found = true;
            }
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        g.table.push_back(std::move(cell));
    }
    if (!found) throw TrainingError("every weight-search cell failed");
    g.weights = MultitaskWeights::from_alpha_beta(g.alpha, g.beta);
    return g;
}

GridSearchResult grid_search_weights(const DatasetSplit& split, const TrainConfig& base, std::size_t cell_max_epochs)
{
    base.validate();
    TrainConfig cfg = base;
    cfg.max_epochs = std::min(base.max_epochs, cell_max_epochs);
    cfg.patience = std::min(base.patience, cfg.max_epochs);
    return grid_search_weights([&](const MultitaskWeights& w) {
        TrainConfig c = cfg;
        c.weights = w;
        return train(split, c).result.validation;
    });
}

void write_grid_csv(std::ostream& out, const GridSearchResult& g)
{
    out << "alpha,beta,ccc_v,ccc_a,ccc_d,ccc_mean,selected,error\n";
    for (const auto& c : g.table) {
        out << csv::format_fixed(c.alpha, 1) << ',' << csv::format_fixed(c.beta, 1);
        if (c.validation) {
            for (double v : {c.validation->ccc_v, c.validation->ccc_a, c.validation->ccc_d, c.validation->ccc_mean})
                out << ',' << csv::format_fixed(v, 3);
        } else {
            out << ",,,,";
        }
        out << ',' << (c.alpha == g.alpha && c.beta == g.beta ? 1 : 0) << ',' << c.error << '\n';
    }
}

std::vector<ManifestEntry> parse_manifest(std::istream& in)
{
    std::vector<ManifestEntry> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    const auto header = csv::split(line);
    if (header.size() < 5 || header[0] != "id") throw CsvError("manifest header must be id,session,valence,arousal,dominance[,wav_path]");

    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split(line);
        if (cells.size() < 5 || cells.size() > 6)
            throw CsvError("manifest line " + std::to_string(line_no) + ": expected 5 or 6 columns");
        ManifestEntry e;
        e.id = cells[0];
        if (!seen.insert(e.id).second) throw CsvError("manifest has duplicate id '" + e.id + "'");
        try {
            const double s = csv::parse_double(cells[1]);
            if (s != std::floor(s)) throw CsvError("session must be an integer");
            e.session = static_cast<int>(s);
            for (std::size_t k = 0; k < 3; ++k) e.labels_raw[k] = csv::parse_double(cells[2 + k]);
        } catch (const CsvError& err) {
            throw CsvError("manifest line " + std::to_string(line_no) + ": " + err.what());
        }
        if (cells.size() == 6) e.wav_path = cells[5];
        rows.push_back(std::move(e));
    }
    return rows;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path.string());
    return parse_manifest(in);
}

void write_manifest(std::ostream& out, const std::vector<ManifestEntry>& entries)
{
    out << "id,session,valence,arousal,dominance,wav_path\n";
    for (const auto& e : entries)
        out << e.id << ',' << e.session << ',' << csv::format_double(e.labels_raw.valence) << ','
            << csv::format_double(e.labels_raw.arousal) << ',' << csv::format_double(e.labels_raw.dominance) << ','
            << e.wav_path << '\n';
}

std::vector<Utterance> join_features(const std::vector<ManifestEntry>& manifest, const std::vector<IdFeatures>& features)
{
    std::unordered_map<std::string, const FeatureVector*> by_id;
    for (const auto& [id, fv] : features) by_id.emplace(id, &fv);
    std::vector<Utterance> out;
    out.reserve(manifest.size());
    for (const auto& e : manifest) {
        const auto it = by_id.find(e.id);
        if (it == by_id.end()) throw std::invalid_argument("no features for utterance " + e.id);
        out.push_back({e.id, e.session, *it->second, e.labels_raw});
    }
    return out;
}

std::vector<MatrixRow> run_matrix(const std::vector<Dataset>& datasets, const std::vector<FeatureSet>& feature_sets,
                                  const TrainConfig& base, double val_fraction, const std::vector<LossKind>& losses)
{
    std::vector<MatrixRow> rows;
    for (const auto& ds : datasets) {
        for (const auto& fs : feature_sets) {
            const std::size_t first = rows.size();
            std::optional<DatasetSplit> split;
            std::string setup_error;
            try {
                split = loso_split(join_features(ds.manifest, fs.extract(ds)), ds.test_session, val_fraction, base.seed);
            } catch (const std::exception& e) {
                setup_error = e.what();
            }
            for (LossKind loss : losses) {
                MatrixRow row{ds.name, fs.name, loss, std::nullopt, setup_error, false};
                if (split) {
                    TrainConfig cfg = base;
                    cfg.loss = loss;
                    if (ds.weights) cfg.weights = *ds.weights;
                    try {
                        row.result = train(*split, cfg).result;
                    } catch (const std::exception& e) {
                        row.error = e.what();
                    }
                }
                rows.push_back(std::move(row));
            }
            std::optional<std::size_t> best;
            for (std::size_t i = first; i < rows.size(); ++i)
                if (rows[i].result && (!best || rows[i].result->test.ccc_mean > rows[*best].result->test.ccc_mean))
                    best = i;
            if (best) rows[*best].best = true;
        }
    }
    return rows;
}

void write_matrix_csv(std::ostream& out, const std::vector<MatrixRow>& rows)
{
    out << kMatrixCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.feature_set << ',' << table_label(r.loss);
        if (r.result) {
            const auto& t = r.result->test;
            for (double v : {t.ccc_v, t.ccc_a, t.ccc_d, t.ccc_mean, t.mse_mean, t.mae_mean})
                out << ',' << csv::format_fixed(v, 3);
        } else {
            out << ",,,,,,";
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << ',' << (r.best ? 1 : 0) << ',' << err << '\n';
    }
}

std::vector<Utterance> synthetic_corpus(std::uint64_t seed, std::size_t n, std::size_t d)
{
    if (n < 50) throw std::invalid_argument("synthetic corpus needs at least 50 utterances");
    if (d < 4) throw std::invalid_argument("synthetic corpus needs at least 4 features");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);

    nn::Matrix m(3, static_cast<Eigen::Index>(d));
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * unit(rng);

    std::vector<Utterance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Utterance u;
        char id[32];
        std::snprintf(id, sizeof id, "syn%05zu", i);
        u.id = id;
        u.session = static_cast<int>(i % 5) + 1;
        u.features.source = FeatureSource::External;
        u.features.values.resize(d);
        for (auto& v : u.features.values) v = unit(rng);
        const Eigen::Map<const Eigen::VectorXd> f(u.features.values.data(), static_cast<Eigen::Index>(d));
        const Eigen::Vector3d z = m * f;
        for (std::size_t k = 0; k < 3; ++k)
            u.labels_raw[k] = std::clamp(3.0 + 2.0 * std::tanh(z(static_cast<Eigen::Index>(k)) + noise(rng)), 1.0, 5.0);
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace ser
