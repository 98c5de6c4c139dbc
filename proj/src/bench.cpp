#include "ser/bench.hpp"

#include <ostream>

namespace ser {

namespace {

void tally(Tally& t, const SynthBenchRun& ccc, const SynthBenchRun& other)
{
    if (!ccc.test || !other.test) {
        ++t.ties;
        return;
    }
    const double a = ccc.test->ccc_mean, b = other.test->ccc_mean;
    if (a > b)
        ++t.wins;
    else if (a < b)
        ++t.losses;
    else
        ++t.ties;
}

double mean_of(const std::vector<SynthBenchRun>& runs, LossKind k)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : runs)
        if (r.loss == k && r.test) {
            sum += r.test->ccc_mean;
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

SynthBenchConfig SynthBenchConfig::defaults()
{
    SynthBenchConfig c;
    c.train.max_epochs = 50;
    c.train.patience = 10;
    c.train.batch_size = 32;
    return c;
}

SynthBenchResult run_synth_bench(const SynthBenchConfig& cfg)
{
    if (cfg.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
    SynthBenchResult out;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t seed = cfg.seed + r;
        const auto split = loso_split(synthetic_corpus(seed, cfg.utterances, cfg.features), cfg.test_session,
                                      cfg.val_fraction, seed);
        const std::size_t first = out.runs.size();
        for (LossKind loss : kAllLosses) {
            SynthBenchRun run{seed, loss, std::nullopt, {}};
            TrainConfig tc = cfg.train;
            tc.loss = loss;
            tc.seed = seed;
            try {
                run.test = train(split, tc).result.test;
            } catch (const std::exception& e) {
                run.error = e.what();
            }
            out.runs.push_back(std::move(run));
        }
        const auto& mse = out.runs[first];
        const auto& mae = out.runs[first + 1];
        const auto& ccc = out.runs[first + 2];
        tally(out.ccc_vs_mse, ccc, mse);
        tally(out.ccc_vs_mae, ccc, mae);
    }
    out.mean_ccc_mse = mean_of(out.runs, LossKind::Mse);
    out.mean_ccc_mae = mean_of(out.runs, LossKind::Mae);
    out.mean_ccc_ccc = mean_of(out.runs, LossKind::Ccc);
    return out;
}

void write_synth_bench_csv(std::ostream& out, const SynthBenchResult& r)
{
    out << "kind,seed,loss,ccc_v,ccc_a,ccc_d,ccc_mean,mse_mean,mae_mean,"
           "mean_ccc_mse,mean_ccc_mae,mean_ccc_ccc,"
           "ccc_wins_vs_mse,ccc_losses_vs_mse,ties_vs_mse,ccc_wins_vs_mae,ccc_losses_vs_mae,ties_vs_mae,error\n";
    for (const auto& run : r.runs) {
        out << "run," << run.seed << ',' << to_string(run.loss);
        if (run.test) {
            const auto& t = *run.test;
            for (double v : {t.ccc_v, t.ccc_a, t.ccc_d, t.ccc_mean, t.mse_mean, t.mae_mean})
                out << ',' << csv::format_fixed(v, 6);
        } else {
            out << ",,,,,,";
        }
        std::string err = run.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << ",,,,,,,,,," << err << '\n';
    }
    const auto seed = r.runs.empty() ? 0 : r.runs.front().seed;
    out << "summary," << seed << ",,,,,,,," << csv::format_fixed(r.mean_ccc_mse, 6) << ','
        << csv::format_fixed(r.mean_ccc_mae, 6) << ',' << csv::format_fixed(r.mean_ccc_ccc, 6) << ','
        << r.ccc_vs_mse.wins << ',' << r.ccc_vs_mse.losses << ',' << r.ccc_vs_mse.ties << ',' << r.ccc_vs_mae.wins
        << ',' << r.ccc_vs_mae.losses << ',' << r.ccc_vs_mae.ties << ",\n";
}

}  // namespace ser
