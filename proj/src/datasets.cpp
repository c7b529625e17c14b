#include "adamz/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#ifdef ADAMZ_HAVE_ZLIB
#include <zlib.h>
#endif

#include "adamz/rng.hpp"

namespace adamz {

namespace {
constexpr double kTau = 2.0 * 3.141592653589793238462643383279502884;
constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;
}  // namespace

void CirclesConfig::validate() const {
    if (n_samples < 2) throw ValidationError("circles n_samples must be at least 2");
    if (!(noise >= 0.0)) throw ValidationError("circles noise must be non-negative");
    if (!(factor > 0.0 && factor < 1.0)) throw ValidationError("circles factor must lie in (0, 1)");
}

DatasetSplit make_circles(const CirclesConfig& cfg) {
    cfg.validate();
    const int n_outer = (cfg.n_samples + 1) / 2;
    const int n_inner = cfg.n_samples / 2;
    DatasetSplit out;
    out.n = cfg.n_samples;
    out.dim = 2;
    out.seed = cfg.seed;
    out.features.resize(static_cast<size_t>(out.n) * 2);
    out.labels.resize(static_cast<size_t>(out.n));
    for (int i = 0; i < n_outer; ++i) {
        const double a = kTau * i / n_outer;
        out.features[2 * static_cast<size_t>(i)] = std::cos(a);
        out.features[2 * static_cast<size_t>(i) + 1] = std::sin(a);
        out.labels[static_cast<size_t>(i)] = 0.0;
    }
    for (int i = 0; i < n_inner; ++i) {
        const double a = kTau * i / n_inner;
        const size_t r = static_cast<size_t>(n_outer + i);
        out.features[2 * r] = cfg.factor * std::cos(a);
        out.features[2 * r + 1] = cfg.factor * std::sin(a);
        out.labels[r] = 1.0;
    }
    if (cfg.noise > 0.0) {
        Rng rng(Rng::derive(cfg.seed, 0xC14C1E5));
        for (double& v : out.features) v += cfg.noise * rng.gaussian();
    }
    return out;
}

// --- IDX -------------------------------------------------------------------

namespace {

bool ends_with(const std::string& s, const char* suffix) {
    const size_t n = std::string(suffix).size();
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

#ifdef ADAMZ_HAVE_ZLIB
std::vector<uint8_t> gunzip(const std::vector<uint8_t>& in, const std::string& path) {
    z_stream strm{};
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK) {
        throw IoError("zlib initialisation failed for '" + path + "'");
    }
    std::vector<uint8_t> out;
    std::vector<uint8_t> chunk(1 << 16);
    strm.next_in = const_cast<Bytef*>(in.data());
    strm.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        strm.next_out = chunk.data();
        strm.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw IoError("gzip decompression failed for '" + path + "'");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - strm.avail_out));
    }
    inflateEnd(&strm);
    return out;
}
#endif

std::vector<uint8_t> read_file(const std::string& path, IdxError::Code truncated_code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (ends_with(path, ".gz")) {
#ifdef ADAMZ_HAVE_ZLIB
        bytes = gunzip(bytes, path);
#else
        throw IoError("'" + path + "' is gzip-compressed but this build has no zlib");
#endif
    }
    if (bytes.size() < 8) {
        throw IdxError(truncated_code, "'" + path + "' is too short to hold an IDX header");
    }
    return bytes;
}

uint32_t read_u32be(const std::vector<uint8_t>& b, size_t off) {
    return (static_cast<uint32_t>(b[off]) << 24) | (static_cast<uint32_t>(b[off + 1]) << 16) |
           (static_cast<uint32_t>(b[off + 2]) << 8) | static_cast<uint32_t>(b[off + 3]);
}

void write_u32be(std::ofstream& out, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                          static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

DatasetSplit load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path, IdxError::Code::truncated_image_file);
    const uint32_t img_magic = read_u32be(img, 0);
    if (img_magic != kImageMagic) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08X", img_magic);
        throw IdxError(IdxError::Code::bad_image_magic,
                       "image magic is " + std::string(buf) + ", expected 0x00000803 in '" +
                           images_path + "'");
    }
    if (img.size() < 16) {
        throw IdxError(IdxError::Code::truncated_image_file,
                       "image header truncated in '" + images_path + "'");
    }
    const uint32_t n_images = read_u32be(img, 4);
    const uint32_t rows = read_u32be(img, 8);
    const uint32_t cols = read_u32be(img, 12);
    const size_t expect = 16 + static_cast<size_t>(n_images) * rows * cols;
    if (img.size() < expect) {
        throw IdxError(IdxError::Code::truncated_image_file,
                       "image payload truncated in '" + images_path + "': have " +
                           std::to_string(img.size()) + " bytes, header implies " +
                           std::to_string(expect));
    }

    const auto lab = read_file(labels_path, IdxError::Code::truncated_label_file);
    const uint32_t lab_magic = read_u32be(lab, 0);
    if (lab_magic != kLabelMagic) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08X", lab_magic);
        throw IdxError(IdxError::Code::bad_label_magic,
                       "label magic is " + std::string(buf) + ", expected 0x00000801 in '" +
                           labels_path + "'");
    }
    const uint32_t n_labels = read_u32be(lab, 4);
    if (lab.size() < 8 + static_cast<size_t>(n_labels)) {
        throw IdxError(IdxError::Code::truncated_label_file,
                       "label payload truncated in '" + labels_path + "': have " +
                           std::to_string(lab.size()) + " bytes, header implies " +
                           std::to_string(8 + static_cast<size_t>(n_labels)));
    }
    if (n_images != n_labels) {
        throw IdxError(IdxError::Code::count_mismatch,
                       "image count " + std::to_string(n_images) + " does not match label count " +
                           std::to_string(n_labels));
    }

    DatasetSplit out;
    out.n = static_cast<int>(n_images);
    out.dim = static_cast<int>(rows * cols);
    out.features.resize(static_cast<size_t>(out.n) * out.dim);
    out.labels.resize(static_cast<size_t>(out.n));
    for (size_t i = 0; i < out.features.size(); ++i) {
        out.features[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    for (size_t i = 0; i < out.labels.size(); ++i) {
        const uint8_t y = lab[8 + i];
        if (y >= 10) {
            throw IdxError(IdxError::Code::bad_label_value,
                           "label value " + std::to_string(y) + " at index " + std::to_string(i) +
                               " is outside [0, 10)");
        }
        out.labels[i] = static_cast<double>(y);
    }
    return out;
}

void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels, int n,
                      int rows, int cols) {
    if (pixels.size() != static_cast<size_t>(n) * rows * cols) {
        throw ValidationError("pixel buffer does not match n*rows*cols");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_u32be(out, kImageMagic);
    write_u32be(out, static_cast<uint32_t>(n));
    write_u32be(out, static_cast<uint32_t>(rows));
    write_u32be(out, static_cast<uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<long>(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    write_u32be(out, kLabelMagic);
    write_u32be(out, static_cast<uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<long>(labels.size()));
}

// --- splitting / batching -----------------------------------------------------

namespace {

DatasetSplit select(const DatasetSplit& data, const std::vector<int>& idx, uint64_t seed) {
    DatasetSplit out;
    out.n = static_cast<int>(idx.size());
    out.dim = data.dim;
    out.seed = seed;
    out.features.resize(static_cast<size_t>(out.n) * out.dim);
    out.labels.resize(static_cast<size_t>(out.n));
    for (size_t r = 0; r < idx.size(); ++r) {
        const double* src = data.row(idx[r]);
        double* dst = out.features.data() + r * static_cast<size_t>(out.dim);
        for (int j = 0; j < out.dim; ++j) dst[j] = src[j];
        out.labels[r] = data.labels[static_cast<size_t>(idx[r])];
    }
    return out;
}

}  // namespace

std::pair<DatasetSplit, DatasetSplit> train_test_split(const DatasetSplit& data,
                                                       double test_fraction, uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("test_fraction must lie in (0, 1)");
    }
    if (data.n < 2) throw ValidationError("cannot split fewer than 2 examples");
    int n_test = static_cast<int>(std::lround(test_fraction * data.n));
    n_test = std::max(1, std::min(data.n - 1, n_test));
    std::vector<int> idx(static_cast<size_t>(data.n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::derive(seed, 0x5B117));
    rng.shuffle(idx);
    const std::vector<int> train_idx(idx.begin(), idx.end() - n_test);
    const std::vector<int> test_idx(idx.end() - n_test, idx.end());
    return {select(data, train_idx, seed), select(data, test_idx, seed)};
}

DatasetSplit take_subset(const DatasetSplit& data, int n, uint64_t seed) {
    if (n < 1 || n > data.n) throw ValidationError("subset size must lie in [1, n]");
    std::vector<int> idx(static_cast<size_t>(data.n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::derive(seed, 0x5135E7));
    rng.shuffle(idx);
    idx.resize(static_cast<size_t>(n));
    return select(data, idx, seed);
}

std::vector<std::vector<int>> batch_indices(int n, int batch_size, uint64_t seed, int epoch) {
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::derive(seed, 0xBA7C4 + static_cast<uint64_t>(epoch)));
    rng.shuffle(idx);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        batches.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return batches;
}

std::vector<Batch> batches(const DatasetSplit& data, int batch_size, uint64_t seed, int epoch) {
    std::vector<Batch> out;
    for (const auto& idx : batch_indices(data.n, batch_size, seed, epoch)) {
        Batch b;
        gather(data, idx, b.features, b.labels);
        out.push_back(std::move(b));
    }
    return out;
}

void gather(const DatasetSplit& data, const std::vector<int>& idx, std::vector<double>& features,
            std::vector<double>& labels) {
    features.resize(idx.size() * static_cast<size_t>(data.dim));
    labels.resize(idx.size());
    for (size_t r = 0; r < idx.size(); ++r) {
        const double* src = data.row(idx[r]);
        double* dst = features.data() + r * static_cast<size_t>(data.dim);
        for (int j = 0; j < data.dim; ++j) dst[j] = src[j];
        labels[r] = data.labels[static_cast<size_t>(idx[r])];
    }
}

}  // namespace adamz
