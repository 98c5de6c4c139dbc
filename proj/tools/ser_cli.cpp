// Command-line driver: feature extraction, training, evaluation, weight search,
// the experiment matrix, the synthetic benchmark and scatter export.
//
// Exit codes: 0 success, 1 data failure (including partial), 2 bad arguments or config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ser/bench.hpp"
#include "ser/checkpoint.hpp"
#include "ser/experiment.hpp"
#include "ser/feature_csv.hpp"
#include "ser/features.hpp"
#include "ser/scatter.hpp"
#include "ser/wav.hpp"

namespace fs = std::filesystem;
using namespace ser;

namespace {

constexpr int kOk = 0;
constexpr int kDataFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string manifest;
    std::string wav_dir;
    std::string features = "paa";
    std::string config;
    std::string out = ".";
    std::string checkpoint;
    std::optional<std::string> loss;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::uint64_t> seed;
    int test_session = 5;
    double frame_ms = 50.0;
    double hop_ms = 25.0;
    std::size_t cell_epochs = 30;
    std::size_t repeats = 5;
    std::size_t utterances = 500;
    std::size_t dims = 20;
    std::vector<std::string> datasets;
    std::vector<std::string> feature_sets;
    std::vector<std::string> dataset_weights;
};

// Config file fields mirror TrainConfig; flags given on the command line win.
struct RunConfig {
    TrainConfig train;
    double val_fraction = 0.2;
};

RunConfig load_config(const Options& o, TrainConfig base = {})
{
    RunConfig rc{base, 0.2};
    auto& t = rc.train;
    double alpha = 0.1, beta = 0.5;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw UsageError("cannot open config " + o.config);
        nlohmann::json j;
        try {
            in >> j;
            for (const auto& [key, v] : j.items()) {
                if (key == "loss") t.loss = parse_loss_kind(v.get<std::string>());
                else if (key == "alpha") alpha = v.get<double>();
                else if (key == "beta") beta = v.get<double>();
                else if (key == "batch_size") t.batch_size = v.get<std::size_t>();
                else if (key == "max_epochs") t.max_epochs = v.get<std::size_t>();
                else if (key == "patience") t.patience = v.get<std::size_t>();
                else if (key == "learning_rate") t.learning_rate = v.get<double>();
                else if (key == "seed") t.seed = v.get<std::uint64_t>();
                else if (key == "lstm_units") t.lstm_units = v.get<std::vector<Eigen::Index>>();
                else if (key == "dense_units") t.dense_units = v.get<Eigen::Index>();
                else if (key == "val_fraction") rc.val_fraction = v.get<double>();
                else throw UsageError("unknown config field '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("bad config " + o.config + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw UsageError("bad config " + o.config + ": " + e.what());
        }
        if (!j.contains("alpha") && !j.contains("beta")) {
            alpha = base.weights.w_v;
            beta = base.weights.w_a;
        }
    } else {
        alpha = base.weights.w_v;
        beta = base.weights.w_a;
    }
    try {
        if (o.loss) t.loss = parse_loss_kind(*o.loss);
        if (o.alpha) alpha = *o.alpha;
        if (o.beta) beta = *o.beta;
        if (o.seed) t.seed = *o.seed;
        t.weights = MultitaskWeights::from_alpha_beta(alpha, beta);
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!(rc.val_fraction > 0.0 && rc.val_fraction < 1.0)) throw UsageError("val_fraction must lie in (0, 1)");
    return rc;
}

fs::path out_dir(const Options& o)
{
    fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

fs::path resolve_wav(const Options& o, const std::string& wav)
{
    fs::path p(wav);
    if (p.is_absolute()) return p;
    const fs::path base = o.wav_dir.empty() ? fs::path(o.manifest).parent_path() : fs::path(o.wav_dir);
    return base / p;
}

std::vector<ManifestEntry> read_manifest(const std::string& path)
{
    if (path.empty()) throw UsageError("--manifest is required");
    try {
        return load_manifest(path);
    } catch (const CsvError& e) {
        throw UsageError(e.what());
    }
}

struct Extracted {
    std::vector<IdFeatures> rows;
    std::size_t failures = 0;
};

Extracted extract_paa(const Options& o, const std::vector<ManifestEntry>& manifest)
{
    Extracted ex;
    for (const auto& e : manifest) {
        try {
            if (e.wav_path.empty()) throw std::runtime_error("no wav path");
            const auto w = load_wav(resolve_wav(o, e.wav_path));
            const auto spec = FrameSpec::from_millis(w.sample_rate, o.frame_ms, o.hop_ms);
            ex.rows.emplace_back(e.id, paa_features(w, spec));
        } catch (const std::exception& err) {
            std::cerr << "extract: " << e.id << ": " << err.what() << '\n';
            ++ex.failures;
        }
    }
    return ex;
}

// `paa` or `csv:PATH`; PATH may contain {dataset}.
struct FeatureSpec {
    std::string name;
    bool paa = true;
    std::string csv_path;
};

FeatureSpec parse_feature_spec(const std::string& text)
{
    FeatureSpec f;
    std::string body = text;
    if (const auto eq = text.find('='); eq != std::string::npos) {
        f.name = text.substr(0, eq);
        body = text.substr(eq + 1);
    }
    if (body == "paa") {
        if (f.name.empty()) f.name = "paa";
    } else if (body.rfind("csv:", 0) == 0 && body.size() > 4) {
        f.paa = false;
        f.csv_path = body.substr(4);
        if (f.name.empty()) f.name = fs::path(f.csv_path).stem().string();
    } else {
        throw UsageError("--features must be 'paa' or 'csv:PATH', got '" + text + "'");
    }
    return f;
}

std::string substitute(std::string s, const std::string& dataset)
{
    for (auto pos = s.find("{dataset}"); pos != std::string::npos; pos = s.find("{dataset}"))
        s.replace(pos, 9, dataset);
    return s;
}

// Features for every manifest row that could be resolved; the rest are reported and dropped.
struct Corpus {
    std::vector<Utterance> utterances;
    std::size_t failures = 0;
    std::string feature_name;
};

Corpus build_corpus(const Options& o, const std::vector<ManifestEntry>& manifest, const FeatureSpec& spec,
                    const std::string& dataset = "")
{
    Corpus c;
    c.feature_name = spec.name;
    std::vector<IdFeatures> features;
    if (spec.paa) {
        auto ex = extract_paa(o, manifest);
        features = std::move(ex.rows);
        c.failures = ex.failures;
    } else {
        const auto path = substitute(spec.csv_path, dataset);
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open feature CSV " + path);
        std::string header;
        std::getline(in, header);
        const std::size_t dim = static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
        in.seekg(0);
        features = parse_feature_csv(in, dim, dim == kGemapsHsfDim ? FeatureSource::Gemaps : FeatureSource::External);
    }
    std::map<std::string, const FeatureVector*> by_id;
    for (const auto& [id, fv] : features) by_id[id] = &fv;
    std::vector<ManifestEntry> kept;
    for (const auto& e : manifest) {
        if (by_id.contains(e.id)) {
            kept.push_back(e);
        } else if (!spec.paa) {
            std::cerr << "features: no row for " << e.id << '\n';
            ++c.failures;
        }
    }
    c.utterances = join_features(kept, features);
    return c;
}

DatasetSplit split_corpus(const Corpus& c, const Options& o, const RunConfig& rc)
{
    try {
        return loso_split(c.utterances, o.test_session, rc.val_fraction, rc.train.seed);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void write_report(std::ostream& out, const std::string& features, LossKind loss, const EvaluationReport& r)
{
    out << kReportCsvHeader << '\n' << report_csv_row(features, std::string(table_label(loss)), r) << '\n';
}

int finish(std::size_t failures) { return failures == 0 ? kOk : kDataFailure; }

int cmd_extract(const Options& o)
{
    const auto manifest = read_manifest(o.manifest);
    const auto ex = extract_paa(o, manifest);
    auto out = open_out(out_dir(o) / "features.csv");
    write_feature_csv(out, ex.rows, kPaaHsfDim);
    std::printf("extracted %zu of %zu utterances\n", ex.rows.size(), manifest.size());
    return finish(ex.failures);
}

int cmd_train(const Options& o)
{
    const auto rc = load_config(o);
    const auto corpus = build_corpus(o, read_manifest(o.manifest), parse_feature_spec(o.features));
    const auto split = split_corpus(corpus, o, rc);
    const auto outcome = train(split, rc.train);
    const auto dir = out_dir(o);
    save_checkpoint(dir / "model.json", outcome.params);
    {
        auto h = open_out(dir / "history.csv");
        h << "epoch,train_loss,validation_loss\n";
        for (const auto& e : outcome.result.history)
            h << e.epoch << ',' << csv::format_double(e.train_loss) << ',' << csv::format_double(e.validation_loss)
              << '\n';
    }
    auto r = open_out(dir / "results.csv");
    write_report(r, corpus.feature_name, rc.train.loss, outcome.result.test);
    std::printf("best epoch %zu of %zu, test ccc_mean %.3f\n", outcome.result.best_epoch,
                outcome.result.history.size(), outcome.result.test.ccc_mean);
    return finish(corpus.failures);
}

nn::ModelParams read_checkpoint(const Options& o)
{
    if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
    return load_checkpoint(o.checkpoint);
}

int cmd_eval(const Options& o)
{
    const auto rc = load_config(o);
    const auto params = read_checkpoint(o);
    const auto corpus = build_corpus(o, read_manifest(o.manifest), parse_feature_spec(o.features));
    const auto split = split_corpus(corpus, o, rc);
    const auto report = evaluate_model(params, split.test);
    auto out = open_out(out_dir(o) / "eval.csv");
    write_report(out, corpus.feature_name, rc.train.loss, report);
    std::printf("test ccc_mean %.3f over %zu utterances\n", report.ccc_mean, split.test.size());
    return finish(corpus.failures);
}

int cmd_grid(const Options& o)
{
    const auto rc = load_config(o);
    const auto corpus = build_corpus(o, read_manifest(o.manifest), parse_feature_spec(o.features));
    const auto split = split_corpus(corpus, o, rc);
    const auto g = grid_search_weights(split, rc.train, o.cell_epochs);
    auto out = open_out(out_dir(o) / "grid.csv");
    write_grid_csv(out, g);
    std::size_t failed = 0;
    for (const auto& c : g.table) failed += !c.error.empty();
    std::printf("selected alpha %.1f beta %.1f\n", g.alpha, g.beta);
    return finish(corpus.failures + failed);
}

// NAME=MANIFEST[@SESSION]
Dataset parse_dataset(const std::string& text, int default_session)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--dataset must be NAME=MANIFEST[@SESSION]");
    Dataset d;
    d.name = text.substr(0, eq);
    std::string path = text.substr(eq + 1);
    d.test_session = default_session;
    if (const auto at = path.rfind('@'); at != std::string::npos) {
        try {
            d.test_session = std::stoi(path.substr(at + 1));
        } catch (const std::exception&) {
            throw UsageError("bad session in --dataset " + text);
        }
        path = path.substr(0, at);
    }
    d.manifest = read_manifest(path);
    return d;
}

int cmd_matrix(const Options& o)
{
    const auto rc = load_config(o);
    if (o.datasets.empty()) throw UsageError("matrix needs at least one --dataset");
    std::vector<Dataset> datasets;
    std::map<std::string, std::string> manifest_paths;
    for (const auto& t : o.datasets) {
        datasets.push_back(parse_dataset(t, o.test_session));
        manifest_paths[datasets.back().name] = t.substr(t.find('=') + 1);
    }
    for (const auto& t : o.dataset_weights) {
        double a = 0, b = 0;
        char name[128];
        if (std::sscanf(t.c_str(), "%127[^=]=%lf,%lf", name, &a, &b) != 3)
            throw UsageError("--weights must be NAME=ALPHA,BETA");
        auto it = std::find_if(datasets.begin(), datasets.end(), [&](const Dataset& d) { return d.name == name; });
        if (it == datasets.end()) throw UsageError(std::string("--weights names unknown dataset ") + name);
        try {
            it->weights = MultitaskWeights::from_alpha_beta(a, b);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    std::vector<FeatureSpec> specs;
    for (const auto& t : o.feature_sets.empty() ? std::vector<std::string>{o.features} : o.feature_sets)
        specs.push_back(parse_feature_spec(t));

    std::size_t failures = 0;
    std::vector<FeatureSet> sets;
    for (const auto& spec : specs) {
        sets.push_back({spec.name, [&, spec](const Dataset& d) {
                            Options local = o;
                            local.manifest = manifest_paths[d.name];
                            if (const auto at = local.manifest.rfind('@'); at != std::string::npos)
                                local.manifest.resize(at);
                            auto c = build_corpus(local, d.manifest, spec, d.name);
                            failures += c.failures;
                            std::vector<IdFeatures> f;
                            for (auto& u : c.utterances) f.emplace_back(u.id, u.features);
                            return f;
                        }});
    }
    const auto rows = run_matrix(datasets, sets, rc.train, rc.val_fraction);
    auto out = open_out(out_dir(o) / "matrix.csv");
    write_matrix_csv(out, rows);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += !r.result.has_value();
    std::printf("%zu cells, %zu failed\n", rows.size(), failed);
    return finish(failures + failed);
}

int cmd_synth_bench(const Options& o)
{
    if (o.repeats < 1) throw UsageError("--repeats must be at least 1");
    auto cfg = SynthBenchConfig::defaults();
    const auto rc = load_config(o, cfg.train);
    cfg.train = rc.train;
    cfg.val_fraction = rc.val_fraction;
    cfg.seed = rc.train.seed;
    cfg.repeats = o.repeats;
    cfg.utterances = o.utterances;
    cfg.features = o.dims;
    cfg.test_session = o.test_session;
    SynthBenchResult r;
    try {
        r = run_synth_bench(cfg);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    auto out = open_out(out_dir(o) / "synth_bench.csv");
    write_synth_bench_csv(out, r);
    std::size_t failed = 0;
    for (const auto& run : r.runs) failed += !run.test.has_value();
    std::printf("mean ccc_mean: mse %.4f mae %.4f cccl %.4f; cccl wins %zu/%zu vs mse, %zu/%zu vs mae\n",
                r.mean_ccc_mse, r.mean_ccc_mae, r.mean_ccc_ccc, r.ccc_vs_mse.wins, cfg.repeats, r.ccc_vs_mae.wins,
                cfg.repeats);
    return finish(failed);
}

int cmd_scatter(const Options& o)
{
    const auto rc = load_config(o);
    nn::ModelParams params;
    try {
        params = read_checkpoint(o);
    } catch (const CheckpointError& e) {
        std::cerr << "scatter: " << e.what() << '\n';
        return kDataFailure;
    }
    const auto corpus = build_corpus(o, read_manifest(o.manifest), parse_feature_spec(o.features));
    const auto split = split_corpus(corpus, o, rc);
    const auto pred = predict(params, split.test);
    std::vector<ScatterPoint> points;
    for (std::size_t i = 0; i < split.test.size(); ++i)
        points.push_back({split.test[i].id, scale_labels(split.test[i].labels_raw), pred[i]});
    const auto dir = out_dir(o);
    {
        auto out = open_out(dir / "scatter.csv");
        write_scatter_csv(out, points);
    }
    auto svg = open_out(dir / "scatter.svg");
    svg << scatter_svg(points, "session " + std::to_string(o.test_session) + ": gold vs predicted");
    std::printf("%zu points\n", points.size());
    return finish(corpus.failures);
}

void add_train_flags(CLI::App* c, Options& o)
{
    c->add_option("--manifest", o.manifest, "corpus manifest CSV");
    c->add_option("--features", o.features, "paa or csv:PATH");
    c->add_option("--wav-dir", o.wav_dir, "base directory for relative WAV paths");
    c->add_option("--loss", o.loss, "mse, mae or ccc");
    c->add_option("--alpha", o.alpha, "valence weight");
    c->add_option("--beta", o.beta, "arousal weight");
    c->add_option("--test-session", o.test_session, "held-out session");
    c->add_option("--seed", o.seed, "random seed");
    c->add_option("--config", o.config, "JSON training config");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--frame-ms", o.frame_ms, "frame length in ms")->check(CLI::PositiveNumber);
    c->add_option("--hop-ms", o.hop_ms, "hop length in ms")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Speech emotion regression with CCC, MSE and MAE losses"};
    app.require_subcommand(1);
    Options o;

    auto* extract = app.add_subcommand("extract", "pAA features for every manifest row");
    extract->add_option("--manifest", o.manifest, "corpus manifest CSV")->required();
    extract->add_option("--wav-dir", o.wav_dir, "base directory for relative WAV paths");
    extract->add_option("--out", o.out, "output directory");
    extract->add_option("--frame-ms", o.frame_ms, "frame length in ms")->check(CLI::PositiveNumber);
    extract->add_option("--hop-ms", o.hop_ms, "hop length in ms")->check(CLI::PositiveNumber);

    auto* train_cmd = app.add_subcommand("train", "train one model and evaluate it on the held-out session");
    add_train_flags(train_cmd, o);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the held-out session");
    add_train_flags(eval_cmd, o);
    eval_cmd->add_option("--checkpoint", o.checkpoint, "model JSON")->required();
    auto* grid = app.add_subcommand("grid", "search alpha and beta on the validation split");
    add_train_flags(grid, o);
    grid->add_option("--cell-epochs", o.cell_epochs, "epoch budget per cell")->check(CLI::PositiveNumber);
    auto* matrix = app.add_subcommand("matrix", "datasets x feature sets x losses");
    add_train_flags(matrix, o);
    matrix->add_option("--dataset", o.datasets, "NAME=MANIFEST[@SESSION], repeatable");
    matrix->add_option("--feature-set", o.feature_sets, "[NAME=]paa or [NAME=]csv:PATH, repeatable; {dataset} expands");
    matrix->add_option("--weights", o.dataset_weights, "NAME=ALPHA,BETA, repeatable");
    auto* synth = app.add_subcommand("synth-bench", "compare the losses on synthetic corpora");
    synth->add_option("--seed", o.seed, "first repeat seed");
    synth->add_option("--repeats", o.repeats, "number of seeds");
    synth->add_option("--utterances", o.utterances, "corpus size");
    synth->add_option("--dims", o.dims, "feature dimension");
    synth->add_option("--test-session", o.test_session, "held-out session");
    synth->add_option("--config", o.config, "JSON training config");
    synth->add_option("--out", o.out, "output directory");
    auto* scatter = app.add_subcommand("scatter", "valence/arousal scatter of a checkpoint on the held-out session");
    add_train_flags(scatter, o);
    scatter->add_option("--checkpoint", o.checkpoint, "model JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*extract) return cmd_extract(o);
        if (*train_cmd) return cmd_train(o);
        if (*eval_cmd) return cmd_eval(o);
        if (*grid) return cmd_grid(o);
        if (*matrix) return cmd_matrix(o);
        if (*synth) return cmd_synth_bench(o);
        if (*scatter) return cmd_scatter(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataFailure;
    }
    return kUsage;
}
