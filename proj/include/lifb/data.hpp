#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifb/rng.hpp"
#include "lifb/tensor.hpp"

namespace lifb {

/// Images plus integer labels. Pixel values are [0,1] straight after loading;
/// call normalize() (with train-split stats) before feeding a network.
struct LabeledDataset {
    Tensor images; // [N,C,H,W]
    std::vector<int> labels;
    std::string split;
    size_t classes = 0;

    size_t size() const { return labels.size(); }
    void validate() const;
};

/// Per-channel normalization statistics. Computed on the train split and
/// reused verbatim for the test split.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Parses the big-endian IDX pair (image magic 0x00000803, label magic
/// 0x00000801), scales pixels to [0,1], and sets classes to max(label)+1.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes the dataset back to the IDX pair; pixels are stored as
/// round(v*255) bytes, so byte-derived datasets round-trip exactly.
void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path);

NormStats compute_norm_stats(const LabeledDataset& ds);
void normalize(LabeledDataset& ds, const NormStats& stats);

/// Two Gaussian blobs in d dimensions (means +-1.5 on axis 0, sigma 0.5, a
/// 6-sigma gap), images shaped [n,1,1,d]. Labels alternate 0,1,0,1,...
LabeledDataset synth_gaussians(size_t n, size_t d, uint64_t seed);

/// 8x8 single-bar images: class 0 draws a horizontal bar, class 1 a vertical
/// bar, on a faint noise background. Exactly n/2 samples per class.
LabeledDataset synth_bars(size_t n, uint64_t seed);

/// Deterministic batch order for one epoch: a (seed, epoch)-keyed shuffle (or
/// the identity order), chunked into batches with the last partial kept.
std::vector<std::vector<size_t>> epoch_batches(size_t n, size_t batch_size, uint64_t seed,
                                               size_t epoch, bool shuffle);

/// Copies the selected rows into a batch tensor plus label vector.
void gather_batch(const LabeledDataset& ds, const std::vector<size_t>& indices, Tensor& images,
                  std::vector<int>& labels);

} // namespace lifb
