#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ser/experiment.hpp"

namespace ser {

/// Trains one model per loss on the same synthetic split for each repeat and
/// tallies how often CCC loss beats MSE and MAE on test ccc_mean.
struct SynthBenchConfig {
    std::uint64_t seed = 0;
    std::size_t repeats = 5;
    std::size_t utterances = 500;
    std::size_t features = 20;
    int test_session = 5;
    double val_fraction = 0.2;
    TrainConfig train;  // loss is overridden per run

    static SynthBenchConfig defaults();
};

struct SynthBenchRun {
    std::uint64_t seed = 0;
    LossKind loss = LossKind::Ccc;
    std::optional<EvaluationReport> test;
    std::string error;
};

struct Tally {
    std::size_t wins = 0;
    std::size_t losses = 0;
    std::size_t ties = 0;  // includes repeats where either run failed
};

struct SynthBenchResult {
    std::vector<SynthBenchRun> runs;  // repeat-major, losses in MSE, MAE, CCC order
    Tally ccc_vs_mse;
    Tally ccc_vs_mae;
    double mean_ccc_mse = 0.0;  // mean test ccc_mean over successful runs
    double mean_ccc_mae = 0.0;
    double mean_ccc_ccc = 0.0;
};

SynthBenchResult run_synth_bench(const SynthBenchConfig& cfg);

/// Result rows (`kind=run`) followed by one `kind=summary` row.
void write_synth_bench_csv(std::ostream& out, const SynthBenchResult& r);

}  // namespace ser
