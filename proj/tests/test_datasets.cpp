#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "adamz/datasets.hpp"
#include "adamz/rng.hpp"

using namespace adamz;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("adamz-test-" + std::to_string(static_cast<unsigned>(Rng(std::random_device{}()).next_u64() >> 40)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

// E[ ||(r + e1, e2)|| ] with e ~ N(0, sigma^2) iid, by 2-d trapezoid
// quadrature; independent of the generator under test.
double mean_radius_quadrature(double r, double sigma) {
    const int n = 400;
    const double span = 6.0 * sigma;
    const double h = 2.0 * span / n;
    double acc = 0.0, wsum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double a = -span + i * h;
        const double wa = (i == 0 || i == n) ? 0.5 : 1.0;
        const double pa = std::exp(-a * a / (2 * sigma * sigma));
        for (int j = 0; j <= n; ++j) {
            const double b = -span + j * h;
            const double wb = (j == 0 || j == n) ? 0.5 : 1.0;
            const double w = wa * wb * pa * std::exp(-b * b / (2 * sigma * sigma));
            acc += w * std::sqrt((r + a) * (r + a) + b * b);
            wsum += w;
        }
    }
    return acc / wsum;
}

}  // namespace

TEST_CASE("make_circles noise-free geometry, n=4") {
    const DatasetSplit d = make_circles({4, 0.0, 0.5, 1});
    REQUIRE(d.n == 4);
    REQUIRE(d.dim == 2);
    CHECK(d.labels == std::vector<double>{0, 0, 1, 1});
    // outer points at angles 0 and pi on the unit circle
    CHECK(d.features[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d.features[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.features[2] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::fabs(d.features[3]) < 1e-12);
    // inner at radius 0.5
    CHECK(d.features[4] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d.features[6] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("make_circles noise-free radii are exact for every point") {
    const DatasetSplit d = make_circles({101, 0.0, 0.37, 9});
    int outer = 0, inner = 0;
    for (int i = 0; i < d.n; ++i) {
        const double r = std::hypot(d.row(i)[0], d.row(i)[1]);
        if (d.labels[static_cast<size_t>(i)] == 0.0) {
            CHECK(std::fabs(r - 1.0) < 1e-12);
            ++outer;
        } else {
            CHECK(std::fabs(r - 0.37) < 1e-12);
            ++inner;
        }
    }
    // labels balanced to within one (odd n: outer gets the extra point)
    CHECK(outer == 51);
    CHECK(inner == 50);
}

TEST_CASE("make_circles class-conditional mean radius matches the quadrature oracle") {
    const double noise = 0.1, factor = 0.5;
    const DatasetSplit d = make_circles({10000, noise, factor, 77});
    double sum0 = 0.0, sum1 = 0.0;
    int n0 = 0, n1 = 0;
    for (int i = 0; i < d.n; ++i) {
        const double r = std::hypot(d.row(i)[0], d.row(i)[1]);
        if (d.labels[static_cast<size_t>(i)] == 0.0) {
            sum0 += r;
            ++n0;
        } else {
            sum1 += r;
            ++n1;
        }
    }
    // 3 sigma / sqrt(n) band around the quadrature expectation
    const double tol0 = 3.0 * noise / std::sqrt(static_cast<double>(n0));
    const double tol1 = 3.0 * noise / std::sqrt(static_cast<double>(n1));
    CHECK(std::fabs(sum0 / n0 - mean_radius_quadrature(1.0, noise)) < tol0);
    CHECK(std::fabs(sum1 / n1 - mean_radius_quadrature(factor, noise)) < tol1);
}

TEST_CASE("make_circles validation") {
    CHECK_THROWS_AS(make_circles({1, 0.1, 0.5, 0}), ValidationError);
    CHECK_THROWS_AS(make_circles({100, -0.1, 0.5, 0}), ValidationError);
    CHECK_THROWS_AS(make_circles({100, 0.1, 1.0, 0}), ValidationError);
    CHECK_THROWS_AS(make_circles({100, 0.1, 0.0, 0}), ValidationError);
}

TEST_CASE("train_test_split sizes, determinism, partition property") {
    const DatasetSplit d = make_circles({10, 0.05, 0.5, 3});
    auto [train, test] = train_test_split(d, 0.2, 5);
    CHECK(train.n == 8);
    CHECK(test.n == 2);

    auto [train2, test2] = train_test_split(d, 0.2, 5);
    CHECK(train.features == train2.features);
    CHECK(test.labels == test2.labels);

    // union of rows == full set, no overlap (rows are unique points here)
    std::multiset<std::pair<double, double>> seen;
    for (int i = 0; i < train.n; ++i) seen.insert({train.row(i)[0], train.row(i)[1]});
    for (int i = 0; i < test.n; ++i) seen.insert({test.row(i)[0], test.row(i)[1]});
    std::multiset<std::pair<double, double>> all;
    for (int i = 0; i < d.n; ++i) all.insert({d.row(i)[0], d.row(i)[1]});
    CHECK(seen == all);

    CHECK_THROWS_AS(train_test_split(d, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(train_test_split(d, 1.0, 1), ValidationError);
}

TEST_CASE("batch_indices: sizes, determinism, permutation property") {
    const auto batches = batch_indices(250, 100, 11, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 100);
    CHECK(batches[1].size() == 100);
    CHECK(batches[2].size() == 50);

    CHECK(batch_indices(250, 100, 11, 0) == batches);
    CHECK(batch_indices(250, 100, 11, 1) != batches);

    std::set<int> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    CHECK(seen.size() == 250);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 249);

    CHECK_THROWS_AS(batch_indices(10, 0, 1, 0), ValidationError);
}

TEST_CASE("batches materializes the same sequence as the index form") {
    const DatasetSplit d = make_circles({250, 0.05, 0.5, 2});
    const auto bs = batches(d, 100, 9, 1);
    const auto idx = batch_indices(250, 100, 9, 1);
    REQUIRE(bs.size() == idx.size());
    for (size_t i = 0; i < bs.size(); ++i) {
        CHECK(bs[i].labels.size() == idx[i].size());
        for (size_t r = 0; r < idx[i].size(); ++r) {
            CHECK(bs[i].features[2 * r] == d.row(idx[i][r])[0]);
            CHECK(bs[i].labels[r] == d.labels[static_cast<size_t>(idx[i][r])]);
        }
    }
}

TEST_CASE("IDX writer/loader round-trip") {
    TempDir tmp;
    std::vector<uint8_t> pixels(2 * 3 * 3);
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<uint8_t>(13 * i);
    pixels[4] = 255;
    write_idx_images(tmp.file("img.idx"), pixels, 2, 3, 3);
    write_idx_labels(tmp.file("lab.idx"), {7, 2});

    const DatasetSplit d = load_mnist_idx(tmp.file("img.idx"), tmp.file("lab.idx"));
    CHECK(d.n == 2);
    CHECK(d.dim == 9);
    CHECK(d.features[4] == 1.0);  // byte 255 -> 1.0
    for (size_t i = 0; i < pixels.size(); ++i) {
        CHECK(d.features[i] == static_cast<double>(pixels[i]) / 255.0);
    }
    CHECK(d.labels == std::vector<double>{7, 2});
}

TEST_CASE("IDX loader rejects five corrupted variants with distinct errors") {
    TempDir tmp;
    std::vector<uint8_t> pixels(2 * 4 * 4, 9);
    write_idx_images(tmp.file("img.idx"), pixels, 2, 4, 4);
    write_idx_labels(tmp.file("lab.idx"), {1, 2});

    auto corrupt = [&](const char* src, const char* dst, long offset, char byte) {
        std::filesystem::copy_file(tmp.path / src, tmp.path / dst,
                                   std::filesystem::copy_options::overwrite_existing);
        std::fstream f(tmp.file(dst), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(offset);
        f.put(byte);
    };
    auto truncate_to = [&](const char* src, const char* dst, long size) {
        std::ifstream in(tmp.file(src), std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        bytes.resize(static_cast<size_t>(size));
        std::ofstream out(tmp.file(dst), std::ios::binary);
        out.write(bytes.data(), size);
    };

    // 1: bad image magic
    corrupt("img.idx", "bad_magic.idx", 0, '\x07');
    try {
        load_mnist_idx(tmp.file("bad_magic.idx"), tmp.file("lab.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::bad_image_magic);
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }

    // 2: bad label magic
    corrupt("lab.idx", "bad_lab_magic.idx", 1, '\x42');
    try {
        load_mnist_idx(tmp.file("img.idx"), tmp.file("bad_lab_magic.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::bad_label_magic);
    }

    // 3: truncated image payload
    truncate_to("img.idx", "trunc_img.idx", 16 + 20);
    try {
        load_mnist_idx(tmp.file("trunc_img.idx"), tmp.file("lab.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::truncated_image_file);
    }

    // 4: truncated label payload
    truncate_to("lab.idx", "trunc_lab.idx", 9);
    try {
        load_mnist_idx(tmp.file("img.idx"), tmp.file("trunc_lab.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::truncated_label_file);
    }

    // 5: image/label count mismatch
    write_idx_labels(tmp.file("three.idx"), {1, 2, 3});
    try {
        load_mnist_idx(tmp.file("img.idx"), tmp.file("three.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::count_mismatch);
    }

    // labels outside [0, 10) are rejected too
    write_idx_labels(tmp.file("big.idx"), {1, 10});
    try {
        load_mnist_idx(tmp.file("img.idx"), tmp.file("big.idx"));
        FAIL("expected IdxError");
    } catch (const IdxError& e) {
        CHECK(e.code == IdxError::Code::bad_label_value);
    }
}

TEST_CASE("take_subset is a seeded prefix of a shuffle") {
    const DatasetSplit d = make_circles({100, 0.05, 0.5, 3});
    const DatasetSplit s1 = take_subset(d, 30, 4);
    const DatasetSplit s2 = take_subset(d, 30, 4);
    CHECK(s1.features == s2.features);
    CHECK(s1.n == 30);
    CHECK_THROWS_AS(take_subset(d, 0, 1), ValidationError);
    CHECK_THROWS_AS(take_subset(d, 101, 1), ValidationError);
}

#ifdef ADAMZ_HAVE_ZLIB
#include <zlib.h>

TEST_CASE("IDX loader transparently reads .gz files") {
    TempDir tmp;
    std::vector<uint8_t> pixels(2 * 3 * 3);
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<uint8_t>(11 * i);
    write_idx_images(tmp.file("img.idx"), pixels, 2, 3, 3);
    write_idx_labels(tmp.file("lab.idx"), {4, 8});

    auto gz = [&](const char* src, const char* dst) {
        std::ifstream in(tmp.file(src), std::ios::binary);
        const std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        gzFile out = gzopen(tmp.file(dst).c_str(), "wb");
        REQUIRE(out != nullptr);
        gzwrite(out, raw.data(), static_cast<unsigned>(raw.size()));
        gzclose(out);
    };
    gz("img.idx", "img.idx.gz");
    gz("lab.idx", "lab.idx.gz");

    const DatasetSplit raw = load_mnist_idx(tmp.file("img.idx"), tmp.file("lab.idx"));
    const DatasetSplit zipped = load_mnist_idx(tmp.file("img.idx.gz"), tmp.file("lab.idx.gz"));
    CHECK(raw.features == zipped.features);
    CHECK(raw.labels == zipped.labels);
}
#endif
