#include <doctest.h>

#include <set>
#include <sstream>

#include "ser/experiment.hpp"

using namespace ser;

namespace {

TrainConfig small_config(LossKind loss = LossKind::Ccc)
{
    TrainConfig c;
    c.loss = loss;
    c.lstm_units = {6, 6};
    c.dense_units = 4;
    c.max_epochs = 3;
    c.patience = 2;
    c.batch_size = 16;
    c.seed = 7;
    return c;
}

std::vector<Utterance> sized_corpus(const std::vector<std::size_t>& per_session)
{
    std::vector<Utterance> out;
    for (std::size_t s = 0; s < per_session.size(); ++s)
        for (std::size_t i = 0; i < per_session[s]; ++i) {
            Utterance u;
            u.id = "s" + std::to_string(s + 1) + "_" + std::to_string(i);
            u.session = static_cast<int>(s + 1);
            u.features.values = {0.0, 1.0};
            u.labels_raw = {3, 3, 3};
            out.push_back(std::move(u));
        }
    return out;
}

std::set<std::string> ids(const std::vector<Utterance>& v)
{
    std::set<std::string> s;
    for (const auto& u : v) s.insert(u.id);
    return s;
}

}  // namespace

TEST_CASE("label scaling")
{
    CHECK(scale_labels({1, 3, 5}) == EmotionTriple{-1, 0, 1});
    CHECK(scale_labels({2, 4, 2.5}) == EmotionTriple{-0.5, 0.5, -0.25});
    for (double v = 1.0; v <= 5.0; v += 0.0625) {
        const auto back = unscale_labels(scale_labels({v, v, v}));
        CHECK(std::abs(back.valence - v) <= 1e-15);
    }
    CHECK_THROWS_AS(scale_labels({0.99, 3, 3}), std::out_of_range);
    CHECK_THROWS_AS(scale_labels({3, 3, 5.01}), std::out_of_range);
}

TEST_CASE("LOSO split of a 10039-utterance corpus")
{
    // 10039 utterances, the final session holding 2170
    const auto corpus = sized_corpus({1967, 1967, 1967, 1968, 2170});
    REQUIRE(corpus.size() == 10039);
    const auto split = loso_split(corpus, 5, 0.2, 1);
    CHECK(split.test.size() == 2170);
    CHECK(split.train.size() + split.validation.size() == 7869);
    CHECK(split.validation.size() == 1573);
    CHECK(split.train.size() == 6296);
    for (const auto& u : split.test) CHECK(u.session == 5);
    for (const auto* part : {&split.train, &split.validation})
        for (const auto& u : *part) CHECK(u.session != 5);
}

TEST_CASE("split partitions are disjoint and cover the corpus")
{
    const auto corpus = synthetic_corpus(3, 120, 4);
    for (int session = 1; session <= 5; ++session) {
        const auto split = loso_split(corpus, session, 0.25, 9);
        const auto a = ids(split.train), b = ids(split.validation), c = ids(split.test);
        CHECK(a.size() + b.size() + c.size() == corpus.size());
        std::set<std::string> all(a);
        all.insert(b.begin(), b.end());
        all.insert(c.begin(), c.end());
        CHECK(all == ids(corpus));
    }
    CHECK(ids(loso_split(corpus, 2, 0.2, 4).validation) == ids(loso_split(corpus, 2, 0.2, 4).validation));
    CHECK(ids(loso_split(corpus, 2, 0.2, 4).validation) != ids(loso_split(corpus, 2, 0.2, 5).validation));
    CHECK_THROWS_AS(loso_split(corpus, 6, 0.2, 1), std::invalid_argument);
    CHECK_THROWS_AS(loso_split(corpus, 1, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(loso_split(corpus, 1, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(loso_split(sized_corpus({10}), 1, 0.2, 1), std::invalid_argument);
}

TEST_CASE("train config validation")
{
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.patience = c.max_epochs + 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("one epoch with zero patience")
{
    const auto split = loso_split(synthetic_corpus(1, 100, 5), 5, 0.2, 1);
    auto cfg = small_config();
    cfg.max_epochs = 1;
    cfg.patience = 0;
    const auto r = train(split, cfg).result;
    CHECK(r.history.size() == 1);
    CHECK(r.best_epoch == 1);
}

TEST_CASE("training is deterministic and never sees the test session")
{
    const auto split = loso_split(synthetic_corpus(2, 150, 6), 3, 0.2, 2);
    const auto test_ids = ids(split.test);
    std::size_t batches = 0;
    std::size_t leaks = 0;
    const auto a = train(split, small_config(), [&](const std::vector<std::string>& batch) {
        ++batches;
        for (const auto& id : batch) leaks += test_ids.count(id);
    });
    CHECK(batches > 0);
    CHECK(leaks == 0);

    const auto b = train(split, small_config());
    CHECK(nn::fingerprint(a.params) == nn::fingerprint(b.params));
    REQUIRE(a.result.history.size() == b.result.history.size());
    for (std::size_t i = 0; i < a.result.history.size(); ++i) {
        CHECK(a.result.history[i].train_loss == b.result.history[i].train_loss);
        CHECK(a.result.history[i].validation_loss == b.result.history[i].validation_loss);
    }
    CHECK(a.result.test.ccc_mean == b.result.test.ccc_mean);
    CHECK(a.result.history.size() <= small_config().max_epochs);
}

TEST_CASE("a leaked test utterance aborts training")
{
    auto split = loso_split(synthetic_corpus(2, 100, 4), 1, 0.2, 2);
    split.train.push_back(split.test.front());
    CHECK_THROWS_AS(train(split, small_config()), TrainingError);
}

TEST_CASE("empty partitions are rejected")
{
    auto split = loso_split(synthetic_corpus(2, 100, 4), 1, 0.2, 2);
    split.validation.clear();
    CHECK_THROWS_AS(train(split, small_config()), TrainingError);
}

TEST_CASE("returned parameters are those of the best validation epoch")
{
    const auto split = loso_split(synthetic_corpus(5, 150, 6), 4, 0.2, 5);
    auto cfg = small_config(LossKind::Mse);
    cfg.max_epochs = 6;
    cfg.patience = 6;
    const auto out = train(split, cfg);
    double best = 1e300;
    std::size_t best_epoch = 0;
    for (const auto& h : out.result.history)
        if (h.validation_loss < best) {
            best = h.validation_loss;
            best_epoch = h.epoch;
        }
    CHECK(out.result.best_epoch == best_epoch);
    const auto again = evaluate_model(out.params, split.validation);
    CHECK(again.mse_mean == out.result.validation.mse_mean);
}

TEST_CASE("weight lattice and grid search")
{
    const auto lattice = weight_lattice();
    CHECK(lattice.size() == 66);
    CHECK(lattice.front() == std::pair{0.0, 0.0});
    auto on_lattice = [&](double a, double b) {
        for (const auto& [x, y] : lattice)
            if (std::abs(x - a) < 1e-12 && std::abs(y - b) < 1e-12) return true;
        return false;
    };
    CHECK(on_lattice(0.1, 0.5));
    CHECK(on_lattice(0.3, 0.6));
    CHECK_FALSE(on_lattice(0.5, 0.6));

    SUBCASE("ties resolve to (0, 0)")
    {
        const auto g = grid_search_weights([](const MultitaskWeights&) {
            return EvaluationReport::from_dimensions({0.5, 0.5, 0.5}, {0, 0, 0}, {0, 0, 0});
        });
        CHECK(g.table.size() == 66);
        CHECK(g.alpha == 0.0);
        CHECK(g.beta == 0.0);
    }
    SUBCASE("maximum is found and failing cells are recorded")
    {
        const auto g = grid_search_weights([](const MultitaskWeights& w) {
            if (w.w_d > 0.95) throw TrainingError("diverged");
            const double s = 1.0 - std::abs(w.w_v - 0.3) - std::abs(w.w_a - 0.6);
            return EvaluationReport::from_dimensions({s, s, s}, {0, 0, 0}, {0, 0, 0});
        });
        CHECK(g.alpha == doctest::Approx(0.3));
        CHECK(g.beta == doctest::Approx(0.6));
        std::size_t failed = 0;
        for (const auto& c : g.table) failed += !c.error.empty();
        CHECK(failed == 1);
        std::ostringstream csv;
        write_grid_csv(csv, g);
        const auto text = csv.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 67);
    }
    SUBCASE("all cells failing is an error")
    {
        CHECK_THROWS_AS(grid_search_weights([](const MultitaskWeights&) -> EvaluationReport {
                            throw TrainingError("nope");
                        }),
                        TrainingError);
    }
}

TEST_CASE("grid search over real training explores every cell")
{
    const auto split = loso_split(synthetic_corpus(6, 60, 4), 5, 0.2, 6);
    auto base = small_config();
    base.lstm_units = {2};
    base.dense_units = 2;
    const auto g = grid_search_weights(split, base, 1);
    CHECK(g.table.size() == 66);
    bool present = false;
    for (const auto& c : g.table) {
        CHECK(c.error.empty());
        present |= c.alpha == g.alpha && c.beta == g.beta;
    }
    CHECK(present);
}

TEST_CASE("manifest parsing and joining")
{
    std::istringstream in("id,session,valence,arousal,dominance,wav_path\na,1,1,3,5,x.wav\nb,2,2.5,2,4,\n");
    const auto m = parse_manifest(in);
    REQUIRE(m.size() == 2);
    CHECK(m[0].wav_path == "x.wav");
    CHECK(m[1].wav_path.empty());
    CHECK(m[1].labels_raw == EmotionTriple{2.5, 2, 4});

    std::stringstream round;
    write_manifest(round, m);
    const auto again = parse_manifest(round);
    CHECK(again.size() == 2);
    CHECK(again[0].labels_raw == m[0].labels_raw);

    std::vector<IdFeatures> feats{{"b", {{1, 2}, FeatureSource::External}}, {"a", {{3, 4}, FeatureSource::External}}};
    const auto joined = join_features(m, feats);
    CHECK(joined[0].id == "a");
    CHECK(joined[0].features.values == std::vector<double>{3, 4});
    feats.pop_back();
    CHECK_THROWS_AS(join_features(m, feats), std::invalid_argument);

    std::istringstream dup("id,session,valence,arousal,dominance\na,1,1,1,1\na,1,1,1,1\n");
    CHECK_THROWS_AS(parse_manifest(dup), CsvError);
    std::istringstream fractional("id,session,valence,arousal,dominance\na,1.5,1,1,1\n");
    CHECK_THROWS_AS(parse_manifest(fractional), CsvError);
}

TEST_CASE("experiment matrix shape")
{
    auto manifest_of = [](const std::vector<Utterance>& c) {
        std::vector<ManifestEntry> m;
        for (const auto& u : c) m.push_back({u.id, u.session, u.labels_raw, ""});
        return m;
    };
    const auto c1 = synthetic_corpus(11, 60, 4);
    const auto c2 = synthetic_corpus(12, 60, 4);
    auto features_of = [](const std::vector<Utterance>& c) {
        std::vector<IdFeatures> f;
        for (const auto& u : c) f.emplace_back(u.id, u.features);
        return f;
    };
    const std::vector<Dataset> datasets{{"one", manifest_of(c1), 5, std::nullopt},
                                        {"two", manifest_of(c2), 5, MultitaskWeights::from_alpha_beta(0.3, 0.6)}};
    const std::vector<FeatureSet> features{
        {"raw", [&](const Dataset& d) { return features_of(d.name == "one" ? c1 : c2); }},
        {"broken", [](const Dataset&) -> std::vector<IdFeatures> { throw CsvError("missing file"); }}};
    auto base = small_config();
    base.max_epochs = 1;
    base.patience = 1;

    const auto rows = run_matrix(datasets, features, base);
    REQUIRE(rows.size() == 12);
    for (std::size_t part = 0; part < 4; ++part) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < 3; ++i) best += rows[part * 3 + i].best;
        const bool broken = rows[part * 3].feature_set == "broken";
        CHECK(best == (broken ? 0u : 1u));
        for (std::size_t i = 0; i < 3; ++i) CHECK(rows[part * 3 + i].result.has_value() == !broken);
    }
    CHECK(rows[0].loss == LossKind::Mse);
    CHECK(rows[2].loss == LossKind::Ccc);
    CHECK(rows[6].result->config.weights.w_v == doctest::Approx(0.3));

    std::ostringstream csv;
    write_matrix_csv(csv, rows);
    const auto text = csv.str();
    CHECK(text.rfind(kMatrixCsvHeader, 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 13);
    CHECK(text.find("missing file") != std::string::npos);

    const auto single = run_matrix({datasets[0]}, {features[0]}, base, 0.2, {LossKind::Ccc});
    REQUIRE(single.size() == 1);
    CHECK(single[0].best);
}

TEST_CASE("synthetic corpus")
{
    const auto a = synthetic_corpus(42, 500, 20);
    const auto b = synthetic_corpus(42, 500, 20);
    REQUIRE(a.size() == 500);
    std::array<std::size_t, 6> per_session{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].features.values == b[i].features.values);
        CHECK(a[i].labels_raw == b[i].labels_raw);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(a[i].labels_raw[k] >= 1.0);
            CHECK(a[i].labels_raw[k] <= 5.0);
        }
        ++per_session[static_cast<std::size_t>(a[i].session)];
    }
    for (int s = 1; s <= 5; ++s) CHECK(per_session[static_cast<std::size_t>(s)] == 100);
    CHECK(synthetic_corpus(43, 500, 20)[0].labels_raw != a[0].labels_raw);
    CHECK(ids(a).size() == 500);
    CHECK_THROWS_AS(synthetic_corpus(1, 49, 20), std::invalid_argument);
    CHECK_THROWS_AS(synthetic_corpus(1, 50, 3), std::invalid_argument);
}

TEST_CASE("CCC-loss training on the synthetic corpus" * doctest::timeout(300))
{
    // full-size network, 50 epochs; calibrated at test ccc_mean ~0.93 for this seed
    const auto split = loso_split(synthetic_corpus(0, 500, 20), 5, 0.2, 0);
    TrainConfig cfg;
    cfg.max_epochs = 50;
    const auto r = train(split, cfg).result;
    MESSAGE("test ccc_mean ", r.test.ccc_mean, " after ", r.history.size(), " epochs");
    CHECK(r.test.ccc_mean > 0.5);
}
