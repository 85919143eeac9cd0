#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifb/checkpoint.hpp"
#include "lifb/data.hpp"
#include "lifb/network.hpp"
#include "lifb/optim.hpp"

namespace lifb {

struct TrainConfig {
    size_t epochs = 10;
    size_t batch_size = 64;
    size_t T = 2;
    uint64_t seed = 1;
    bool shuffle = true;
    OptimConfig optim;
    std::string checkpoint_path; // when set, the best-val-accuracy snapshot is kept here
    bool verbose = false;        // per-epoch progress lines on stdout
};

/// Occupancy fractions of one spiking layer over an evaluation pass. The four
/// fractions sum to 1; `negative` is nonzero only for posneg layers, `burst`
/// only for lifb layers (pair layers emit pure binary rows).
struct LayerFiring {
    std::string name;
    double rest = 0;
    double regular = 0;
    double burst = 0;
    double negative = 0;
};

struct EvalMetrics {
    double loss = 0;
    double accuracy = 0;
    std::vector<LayerFiring> firing;
};

struct EpochMetrics {
    size_t epoch = 0;
    double lr_scale = 1;
    double train_loss = 0;
    double train_acc = 0;
    double val_loss = 0;
    double val_acc = 0;
    std::vector<LayerFiring> firing;      // from the val pass
    std::vector<double> kappa_mean;       // per spiking layer; 1+wb for pairs, NaN for lif/posneg
    std::vector<std::string> kappa_names; // layer names, parallel to kappa_mean
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    double best_val_acc = 0;
    size_t best_epoch = 0;
};

/// Forward-only pass over the dataset: top-1 accuracy, mean loss, per-layer
/// firing fractions. Side-effect free; two calls give identical metrics.
EvalMetrics evaluate(Network& net, const LabeledDataset& ds, size_t T, size_t batch_size = 256);

/// Deterministic training loop: seeded batch order, SGD with momentum, step
/// lr decay (x0.1 at 50% and 75% of epochs), per-epoch validation, best
/// checkpoint retention, abort on non-finite loss.
TrainResult train(Network& net, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                  const TrainConfig& cfg);

/// Step-decay factor for a given epoch (1, then 0.1, then 0.01).
double lr_decay_scale(size_t epoch, size_t total_epochs);

std::string metrics_to_csv(const std::vector<EpochMetrics>& history);

} // namespace lifb
