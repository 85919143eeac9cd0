#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifb/data.hpp"
#include "lifb/train.hpp"

namespace lifb {

/// One cell family of the ablation grid: a neuron/topology choice trained at
/// every T and seed.
struct AblateVariant {
    std::string name;
    NeuronModel model = NeuronModel::Lifb;
    bool decoupled = false;    // pair-layer topology trained from scratch
    bool kappa_frozen = false; // fixed burst intensity
    double kappa_init = 1.0;
};

/// lif, lifb, posneg, decoupled-scratch, and fixed burst intensities
/// {0.5, 1, 1.5, 2}.
std::vector<AblateVariant> default_ablate_grid();

struct AblateRun {
    std::string variant;
    size_t T = 0;
    uint64_t seed = 0;
    double val_acc = 0;             // best validation accuracy over the run
    double final_kappa_mean = 0;    // NaN when the variant has no burst weights
};

struct AblateConfig {
    NetSpec base;       // model/decoupled/kappa fields are overridden per variant
    TrainConfig train;  // T and seed are overridden per cell
    std::vector<size_t> Ts = {1, 2, 4};
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::vector<AblateVariant> variants = default_ablate_grid();
    bool verbose = false;
};

struct AblateReport {
    std::vector<AblateRun> runs;
};

/// Trains every (variant, T, seed) cell in deterministic order. Weight
/// initialization depends only on the seed (burst intensities draw nothing),
/// so same-seed variants start from identical weights.
AblateReport run_ablation(const AblateConfig& cfg, const LabeledDataset& train_ds,
                          const LabeledDataset& val_ds);

/// Accuracy mean / sample std over seeds for one (variant, T) cell.
double ablate_mean_acc(const AblateReport& rep, const std::string& variant, size_t T);
double ablate_std_acc(const AblateReport& rep, const std::string& variant, size_t T);

/// Every run as one CSV row (machine-readable).
std::string ablate_runs_csv(const AblateReport& rep);

/// Table-shaped summary: one row per variant, one "mean+-std" percent column
/// per T.
std::string ablate_summary_csv(const AblateReport& rep, const std::vector<size_t>& Ts);

} // namespace lifb
