#include "lifb/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace lifb {

void LabeledDataset::validate() const {
    if (images.ndim() != 4) {
        throw std::invalid_argument("dataset images must be [N,C,H,W], got " + images.shape_str());
    }
    if (images.dim(0) != labels.size()) {
        throw std::invalid_argument("dataset has " + std::to_string(images.dim(0)) +
                                    " images but " + std::to_string(labels.size()) + " labels");
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || size_t(labels[i]) >= classes) {
            throw std::invalid_argument("label " + std::to_string(labels[i]) + " at index " +
                                        std::to_string(i) + " outside [0," +
                                        std::to_string(classes) + ")");
        }
    }
}

static std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

static uint32_t read_be32(const std::vector<uint8_t>& b, size_t off, const std::string& path) {
    if (off + 4 > b.size()) throw std::runtime_error(path + ": truncated header");
    return (uint32_t(b[off]) << 24) | (uint32_t(b[off + 1]) << 16) | (uint32_t(b[off + 2]) << 8) |
           uint32_t(b[off + 3]);
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const std::vector<uint8_t> ib = read_bytes(images_path);
    const uint32_t imagic = read_be32(ib, 0, images_path);
    if (imagic != 0x00000803u) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08x", imagic);
        throw std::runtime_error(images_path + ": magic " + buf +
                                 " is not an IDX3 ubyte image file (expected 0x00000803)");
    }
    const size_t n = read_be32(ib, 4, images_path);
    const size_t h = read_be32(ib, 8, images_path);
    const size_t w = read_be32(ib, 12, images_path);
    Tensor images({n, 1, h, w}); // Tensor construction rejects overflowing or zero dims
    const size_t pixels = images.size();
    if (16 + pixels != ib.size()) {
        throw std::runtime_error(images_path + ": payload holds " + std::to_string(ib.size() - 16) +
                                 " bytes but header promises " + std::to_string(pixels));
    }

    const std::vector<uint8_t> lb = read_bytes(labels_path);
    const uint32_t lmagic = read_be32(lb, 0, labels_path);
    if (lmagic != 0x00000801u) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08x", lmagic);
        throw std::runtime_error(labels_path + ": magic " + buf +
                                 " is not an IDX1 ubyte label file (expected 0x00000801)");
    }
    const size_t ln = read_be32(lb, 4, labels_path);
    if (8 + ln != lb.size()) {
        throw std::runtime_error(labels_path + ": payload holds " + std::to_string(lb.size() - 8) +
                                 " bytes but header promises " + std::to_string(ln));
    }
    if (ln != n) {
        throw std::runtime_error("image count " + std::to_string(n) + " (" + images_path +
                                 ") does not match label count " + std::to_string(ln) + " (" +
                                 labels_path + ")");
    }

    LabeledDataset ds;
    ds.images = std::move(images);
    for (size_t i = 0; i < pixels; ++i) {
        ds.images.data()[i] = real(ib[16 + i]) / real(255);
    }
    ds.labels.resize(n);
    int max_label = 0;
    for (size_t i = 0; i < n; ++i) {
        ds.labels[i] = int(lb[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = size_t(max_label) + 1;
    return ds;
}

static void write_be32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(uint8_t(v >> 24));
    b.push_back(uint8_t(v >> 16));
    b.push_back(uint8_t(v >> 8));
    b.push_back(uint8_t(v));
}

void save_idx(const LabeledDataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    ds.validate();
    if (ds.images.dim(1) != 1) {
        throw std::invalid_argument("save_idx: IDX3 stores single-channel images, got " +
                                    ds.images.shape_str());
    }
    std::vector<uint8_t> ib;
    write_be32(ib, 0x00000803u);
    write_be32(ib, uint32_t(ds.images.dim(0)));
    write_be32(ib, uint32_t(ds.images.dim(2)));
    write_be32(ib, uint32_t(ds.images.dim(3)));
    for (size_t i = 0; i < ds.images.size(); ++i) {
        const double v = std::clamp(double(ds.images.data()[i]), 0.0, 1.0);
        ib.push_back(uint8_t(std::lround(v * 255.0)));
    }
    std::vector<uint8_t> lb;
    write_be32(lb, 0x00000801u);
    write_be32(lb, uint32_t(ds.labels.size()));
    for (int l : ds.labels) lb.push_back(uint8_t(l));

    std::ofstream fi(images_path, std::ios::binary);
    if (!fi) throw std::runtime_error("cannot write " + images_path);
    fi.write(reinterpret_cast<const char*>(ib.data()), std::streamsize(ib.size()));
    std::ofstream fl(labels_path, std::ios::binary);
    if (!fl) throw std::runtime_error("cannot write " + labels_path);
    fl.write(reinterpret_cast<const char*>(lb.data()), std::streamsize(lb.size()));
}

NormStats compute_norm_stats(const LabeledDataset& ds) {
    ds.validate();
    const size_t N = ds.images.dim(0), C = ds.images.dim(1);
    const size_t S = ds.images.dim(2) * ds.images.dim(3);
    NormStats st;
    st.mean.assign(C, 0.0);
    st.stddev.assign(C, 0.0);
    for (size_t c = 0; c < C; ++c) {
        double sum = 0;
        for (size_t n = 0; n < N; ++n) {
            const real* p = ds.images.data() + (n * C + c) * S;
            for (size_t i = 0; i < S; ++i) sum += double(p[i]);
        }
        const double mean = sum / double(N * S);
        double sq = 0;
        for (size_t n = 0; n < N; ++n) {
            const real* p = ds.images.data() + (n * C + c) * S;
            for (size_t i = 0; i < S; ++i) sq += (double(p[i]) - mean) * (double(p[i]) - mean);
        }
        st.mean[c] = mean;
        st.stddev[c] = std::sqrt(sq / double(N * S));
    }
    return st;
}

void normalize(LabeledDataset& ds, const NormStats& stats) {
    ds.validate();
    const size_t C = ds.images.dim(1);
    if (stats.mean.size() != C || stats.stddev.size() != C) {
        throw std::invalid_argument("normalize: stats cover " + std::to_string(stats.mean.size()) +
                                    " channels, dataset has " + std::to_string(C));
    }
    const size_t N = ds.images.dim(0);
    const size_t S = ds.images.dim(2) * ds.images.dim(3);
    for (size_t c = 0; c < C; ++c) {
        const real mean = real(stats.mean[c]);
        const real inv = real(1.0 / std::max(stats.stddev[c], 1e-8));
        for (size_t n = 0; n < N; ++n) {
            real* p = ds.images.data() + (n * C + c) * S;
            for (size_t i = 0; i < S; ++i) p[i] = (p[i] - mean) * inv;
        }
    }
}

LabeledDataset synth_gaussians(size_t n, size_t d, uint64_t seed) {
    if (n < 4 || n % 2 != 0) {
        throw std::invalid_argument("synth_gaussians: need an even n >= 4, got " +
                                    std::to_string(n));
    }
    if (d < 1) throw std::invalid_argument("synth_gaussians: need d >= 1");
    Rng rng(seed);
    LabeledDataset ds;
    ds.images = Tensor({n, 1, 1, d});
    ds.labels.resize(n);
    ds.classes = 2;
    ds.split = "synth";
    for (size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        ds.labels[i] = label;
        real* p = ds.images.data() + i * d;
        for (size_t j = 0; j < d; ++j) {
            const double mean = (j == 0) ? (label ? 1.5 : -1.5) : 0.0;
            p[j] = real(mean + 0.5 * rng.normal());
        }
    }
    return ds;
}

LabeledDataset synth_bars(size_t n, uint64_t seed) {
    if (n < 4 || n % 2 != 0) {
        throw std::invalid_argument("synth_bars: need an even n >= 4, got " + std::to_string(n));
    }
    Rng rng(seed);
    LabeledDataset ds;
    ds.images = Tensor({n, 1, 8, 8});
    ds.labels.resize(n);
    ds.classes = 2;
    ds.split = "synth";
    for (size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        ds.labels[i] = label;
        real* img = ds.images.data() + i * 64;
        for (size_t j = 0; j < 64; ++j) img[j] = real(0.1 * rng.uniform());
        const size_t pos = rng.index(8);
        for (size_t j = 0; j < 8; ++j) {
            if (label == 0) {
                img[pos * 8 + j] = real(1); // horizontal bar
            } else {
                img[j * 8 + pos] = real(1); // vertical bar
            }
        }
    }
    return ds;
}

std::vector<std::vector<size_t>> epoch_batches(size_t n, size_t batch_size, uint64_t seed,
                                               size_t epoch, bool shuffle) {
    if (batch_size < 1) throw std::invalid_argument("epoch_batches: batch_size must be >= 1");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    if (shuffle) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
        rng.shuffle(order);
    }
    std::vector<std::vector<size_t>> out;
    for (size_t start = 0; start < n; start += batch_size) {
        const size_t end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + std::ptrdiff_t(start), order.begin() + std::ptrdiff_t(end));
    }
    return out;
}

void gather_batch(const LabeledDataset& ds, const std::vector<size_t>& indices, Tensor& images,
                  std::vector<int>& labels) {
    if (indices.empty()) throw std::invalid_argument("gather_batch: empty index set");
    std::vector<size_t> shape = ds.images.shape();
    shape[0] = indices.size();
    images = Tensor(shape);
    labels.resize(indices.size());
    const size_t per = ds.images.size() / ds.images.dim(0);
    for (size_t i = 0; i < indices.size(); ++i) {
        const size_t src = indices[i];
        if (src >= ds.size()) {
            throw std::out_of_range("gather_batch: index " + std::to_string(src) +
                                    " outside dataset of " + std::to_string(ds.size()));
        }
        std::copy_n(ds.images.data() + src * per, per, images.data() + i * per);
        labels[i] = ds.labels[src];
    }
}

} // namespace lifb
