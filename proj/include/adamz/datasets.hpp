#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adamz/errors.hpp"

namespace adamz {

// Feature matrix plus index-aligned labels. Labels are class indices for
// multiclass data and {0, 1} for binary data. Immutable after construction;
// shared freely across parallel simulations.
struct DatasetSplit {
    std::vector<double> features;  // row-major [n x dim]
    std::vector<double> labels;    // [n]
    int n = 0;
    int dim = 0;
    uint64_t seed = 0;

    const double* row(int i) const { return features.data() + static_cast<long>(i) * dim; }
};

struct CirclesConfig {
    int n_samples = 10000;
    double noise = 0.1;    // std of the Gaussian perturbation
    double factor = 0.5;   // inner/outer radius ratio
    uint64_t seed = 0;

    void validate() const;
};

// Two concentric circles: ceil(n/2) points equally angle-spaced on the unit
// circle (label 0) followed by floor(n/2) points at radius `factor`
// (label 1), with i.i.d. Gaussian noise added to both coordinates.
// Unshuffled; splitting shuffles.
DatasetSplit make_circles(const CirclesConfig& cfg);

// IDX ingestion (big-endian headers; image magic 0x00000803, label magic
// 0x00000801). Pixels are scaled to [0,1] by /255. Labels must be in [0,10).
DatasetSplit load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Fixture writers mirroring the IDX encoding; used by tests and selftest.
void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels, int n,
                      int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

// Seeded-shuffle partition into (train, test). test_fraction in (0, 1);
// the test side gets round(test_fraction * n) clamped to [1, n-1].
std::pair<DatasetSplit, DatasetSplit> train_test_split(const DatasetSplit& data,
                                                       double test_fraction, uint64_t seed);

// First n examples after a seeded shuffle.
DatasetSplit take_subset(const DatasetSplit& data, int n, uint64_t seed);

// Per-epoch reshuffled batch index sets; the final partial batch is kept.
// Pure function of (n, batch_size, seed, epoch).
std::vector<std::vector<int>> batch_indices(int n, int batch_size, uint64_t seed, int epoch);

// Materialize one batch.
void gather(const DatasetSplit& data, const std::vector<int>& idx, std::vector<double>& features,
            std::vector<double>& labels);

struct Batch {
    std::vector<double> features;
    std::vector<double> labels;
};

// Materialized per-epoch batches; the train loop uses the index form above,
// this is the convenience view of the same sequence.
std::vector<Batch> batches(const DatasetSplit& data, int batch_size, uint64_t seed, int epoch);

}  // namespace adamz
