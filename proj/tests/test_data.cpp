#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "lifb/data.hpp"
#include "test_paths.hpp"

using namespace lifb;

namespace {

void write_be32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(uint8_t(v >> 24));
    b.push_back(uint8_t(v >> 16));
    b.push_back(uint8_t(v >> 8));
    b.push_back(uint8_t(v));
}

std::string dump(const std::string& name, const std::vector<uint8_t>& bytes) {
    const std::string path = temp_dir() + "/" + name;
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    return path;
}

// 3 images of 2x2 pixels, labels 0, 2, 1.
std::pair<std::string, std::string> tiny_idx_pair(uint32_t imagic = 0x00000803u,
                                                  uint32_t lmagic = 0x00000801u, size_t drop = 0,
                                                  uint32_t label_count = 3) {
    std::vector<uint8_t> ib;
    write_be32(ib, imagic);
    write_be32(ib, 3);
    write_be32(ib, 2);
    write_be32(ib, 2);
    for (uint8_t px : {0, 51, 102, 255, 10, 20, 30, 40, 1, 2, 3, 4}) ib.push_back(px);
    ib.resize(ib.size() - drop);
    std::vector<uint8_t> lb;
    write_be32(lb, lmagic);
    write_be32(lb, label_count);
    for (uint8_t l : {0, 2, 1}) {
        if (lb.size() - 8 < label_count) lb.push_back(l);
    }
    return {dump("tiny-images-idx3", ib), dump("tiny-labels-idx1", lb)};
}

} // namespace

TEST_CASE("idx loading scales bytes to unit range") {
    auto [ipath, lpath] = tiny_idx_pair();
    LabeledDataset ds = load_idx(ipath, lpath);
    CHECK(ds.images.shape() == std::vector<size_t>{3, 1, 2, 2});
    CHECK(ds.labels == std::vector<int>{0, 2, 1});
    CHECK(ds.classes == 3);
    CHECK(ds.images.at({0, 0, 0, 0}) == real(0));
    CHECK(ds.images.at({0, 0, 0, 1}) == real(51) / real(255));
    CHECK(ds.images.at({0, 0, 1, 1}) == real(1));
    CHECK(ds.images.at({2, 0, 1, 1}) == real(4) / real(255));
    CHECK_NOTHROW(ds.validate());
}

TEST_CASE("idx loading rejects malformed files") {
    // Wrong image magic, reported in hex.
    auto bad_magic = tiny_idx_pair(0x00000802u);
    try {
        load_idx(bad_magic.first, bad_magic.second);
        FAIL("magic accepted");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("0x00000802") != std::string::npos);
    }

    auto truncated = tiny_idx_pair(0x00000803u, 0x00000801u, 2);
    CHECK_THROWS_AS(load_idx(truncated.first, truncated.second), std::runtime_error);

    auto miscount = tiny_idx_pair(0x00000803u, 0x00000801u, 0, 2);
    CHECK_THROWS_AS(load_idx(miscount.first, miscount.second), std::runtime_error);

    auto bad_label_magic = tiny_idx_pair(0x00000803u, 0x00000805u);
    CHECK_THROWS_AS(load_idx(bad_label_magic.first, bad_label_magic.second), std::runtime_error);

    CHECK_THROWS_AS(load_idx(temp_dir() + "/does-not-exist", bad_magic.second),
                    std::runtime_error);
}

TEST_CASE("idx save/load round-trips byte-derived pixels") {
    auto [ipath, lpath] = tiny_idx_pair();
    LabeledDataset ds = load_idx(ipath, lpath);
    const std::string i2 = temp_dir() + "/tiny2-images-idx3";
    const std::string l2 = temp_dir() + "/tiny2-labels-idx1";
    save_idx(ds, i2, l2);
    LabeledDataset ds2 = load_idx(i2, l2);
    REQUIRE(ds2.images.size() == ds.images.size());
    for (size_t i = 0; i < ds.images.size(); ++i) CHECK(ds.images.at(i) == ds2.images.at(i));
    CHECK(ds.labels == ds2.labels);

    LabeledDataset multi;
    multi.images = Tensor({1, 2, 2, 2});
    multi.labels = {0};
    multi.classes = 1;
    CHECK_THROWS_AS(save_idx(multi, i2, l2), std::invalid_argument);
}

TEST_CASE("normalization uses train statistics verbatim on other splits") {
    LabeledDataset train = synth_gaussians(64, 5, 1000);
    LabeledDataset test = synth_gaussians(32, 5, 2000);
    NormStats st = compute_norm_stats(train);
    REQUIRE(st.mean.size() == 1);
    CHECK(st.stddev[0] > 0);

    normalize(train, st);
    NormStats after = compute_norm_stats(train);
    CHECK(std::fabs(after.mean[0]) < 1e-12);
    CHECK(after.stddev[0] == doctest::Approx(1.0).epsilon(1e-10));

    normalize(test, st); // train stats: test moments stay off-center
    NormStats t_after = compute_norm_stats(test);
    CHECK(std::fabs(t_after.mean[0]) > 1e-6);

    NormStats wrong;
    wrong.mean = {0.0, 0.0};
    wrong.stddev = {1.0, 1.0};
    CHECK_THROWS_AS(normalize(test, wrong), std::invalid_argument);
}

TEST_CASE("normalizing a constant channel is guarded against divide-by-zero") {
    LabeledDataset ds;
    ds.images = Tensor({2, 1, 1, 3}, real(0.5));
    ds.labels = {0, 1};
    ds.classes = 2;
    NormStats st = compute_norm_stats(ds);
    CHECK(st.stddev[0] == 0.0);
    normalize(ds, st);
    for (size_t i = 0; i < ds.images.size(); ++i) {
        CHECK(std::isfinite(double(ds.images.at(i))));
        CHECK(ds.images.at(i) == real(0));
    }
}

TEST_CASE("gaussian blobs are linearly separated and deterministic") {
    LabeledDataset a = synth_gaussians(128, 4, 42);
    LabeledDataset b = synth_gaussians(128, 4, 42);
    for (size_t i = 0; i < a.images.size(); ++i) CHECK(a.images.at(i) == b.images.at(i));
    CHECK(a.images.shape() == std::vector<size_t>{128, 1, 1, 4});
    CHECK(a.classes == 2);

    // Means sit at +-1.5 with sigma 0.5: axis 0 alone separates every sample.
    for (size_t i = 0; i < 128; ++i) {
        const double x0 = double(a.images.at({i, 0, 0, 0}));
        CHECK((a.labels[i] == 1 ? x0 > 0 : x0 < 0));
        CHECK(a.labels[i] == int(i % 2));
    }
    CHECK_THROWS_AS(synth_gaussians(7, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_gaussians(2, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_gaussians(8, 0, 1), std::invalid_argument);
}

TEST_CASE("bar images draw one full-intensity bar over faint noise") {
    LabeledDataset ds = synth_bars(32, 7);
    CHECK(ds.images.shape() == std::vector<size_t>{32, 1, 8, 8});
    for (size_t i = 0; i < 32; ++i) {
        size_t full_rows = 0, full_cols = 0;
        for (size_t k = 0; k < 8; ++k) {
            bool row_full = true, col_full = true;
            for (size_t j = 0; j < 8; ++j) {
                if (ds.images.at({i, 0, k, j}) != real(1)) row_full = false;
                if (ds.images.at({i, 0, j, k}) != real(1)) col_full = false;
            }
            full_rows += row_full;
            full_cols += col_full;
        }
        if (ds.labels[i] == 0) {
            CHECK(full_rows == 1);
        } else {
            CHECK(full_cols == 1);
        }
        // Background stays faint.
        size_t faint = 0;
        for (size_t j = 0; j < 64; ++j) {
            if (double(ds.images.at({i, 0, j / 8, j % 8})) <= 0.1) ++faint;
        }
        CHECK(faint >= 56 - 8); // all but the bar, minus possible crossings
    }
    CHECK_THROWS_AS(synth_bars(5, 1), std::invalid_argument);
}

TEST_CASE("epoch batching covers every index exactly once") {
    auto batches = epoch_batches(10, 4, 3, 0, true);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[2].size() == 2); // trailing partial batch kept
    std::set<size_t> seen;
    for (const auto& b : batches) {
        for (size_t i : b) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 10);
    CHECK(*seen.rbegin() == 9);
}

TEST_CASE("epoch batching is seeded per epoch and optional") {
    auto a = epoch_batches(32, 8, 5, 0, true);
    auto b = epoch_batches(32, 8, 5, 0, true);
    CHECK(a == b);
    auto c = epoch_batches(32, 8, 5, 1, true);
    CHECK(a != c); // different epoch, different permutation
    auto d = epoch_batches(32, 8, 6, 0, true);
    CHECK(a != d); // different seed too

    auto id = epoch_batches(6, 4, 5, 0, false);
    CHECK(id[0] == std::vector<size_t>{0, 1, 2, 3});
    CHECK(id[1] == std::vector<size_t>{4, 5});

    CHECK_THROWS_AS(epoch_batches(6, 0, 5, 0, true), std::invalid_argument);
}

TEST_CASE("gather_batch copies rows and validates indices") {
    LabeledDataset ds = synth_gaussians(8, 3, 1);
    Tensor images;
    std::vector<int> labels;
    gather_batch(ds, {6, 1}, images, labels);
    CHECK(images.shape() == std::vector<size_t>{2, 1, 1, 3});
    CHECK(labels == std::vector<int>{0, 1});
    for (size_t j = 0; j < 3; ++j) {
        CHECK(images.at({0, 0, 0, j}) == ds.images.at({6, 0, 0, j}));
        CHECK(images.at({1, 0, 0, j}) == ds.images.at({1, 0, 0, j}));
    }
    CHECK_THROWS_AS(gather_batch(ds, {8}, images, labels), std::out_of_range);
    CHECK_THROWS_AS(gather_batch(ds, {}, images, labels), std::invalid_argument);
}

TEST_CASE("dataset validation catches label issues") {
    LabeledDataset ds;
    ds.images = Tensor({2, 1, 1, 2});
    ds.labels = {0, 5};
    ds.classes = 2;
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.labels = {0};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
    ds.images = Tensor({2, 2});
    ds.labels = {0, 1};
    CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
}
