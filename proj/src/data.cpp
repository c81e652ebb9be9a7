#include "bygars/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "bygars/errors.hpp"

namespace bygars {

void validate(const SyntheticSpec& spec) {
    if (spec.d <= 0) throw ConfigError("task.d must be positive");
    if (spec.n_total <= 0) throw ConfigError("task.N must be positive");
    if (spec.n_test < 0 || spec.n_aux < 0) throw ConfigError("task counts must be nonnegative");
    if (spec.n_test + spec.n_aux >= spec.n_total)
        throw ConfigError("task.n_test + task.n_aux must be smaller than task.N");
    if (!(spec.noise_std >= 0.0)) throw ConfigError("task.noise_std must be nonnegative");
    if (spec.kind == TaskKind::classification && spec.num_classes < 2)
        throw ConfigError("task.K must be at least 2 for classification");
    if (spec.kind == TaskKind::classification && spec.num_classes > 64)
        throw ConfigError("task.K must be at most 64");
}

RegressionData generate_regression(const SyntheticSpec& spec, RngStream& rng) {
    validate(spec);
    RegressionData out;
    out.theta_star.resize(spec.d);
    for (double& v : out.theta_star) v = rng.normal(spec.theta_star_mean, 1.0);

    Dataset& ds = out.dataset;
    ds.kind = TaskKind::regression;
    ds.n = spec.n_total;
    ds.d = spec.d;
    ds.features.resize(static_cast<std::size_t>(ds.n) * ds.d);
    ds.targets.resize(static_cast<std::size_t>(ds.n));
    for (std::int64_t i = 0; i < ds.n; ++i) {
        double* x = ds.features.data() + i * ds.d;
        double y = 0.0;
        for (int k = 0; k < ds.d; ++k) {
            x[k] = rng.normal();
            y += x[k] * out.theta_star[static_cast<std::size_t>(k)];
        }
        if (spec.noise_std > 0.0) y += rng.normal(0.0, spec.noise_std);
        ds.targets[static_cast<std::size_t>(i)] = y;
    }
    return out;
}

namespace {

// Class means: centered, pairwise distance >= kBlobSeparation under unit
// covariance, which puts linear softmax test accuracy well above 95%.
constexpr double kBlobSeparation = 5.65;

std::vector<double> blob_means(int k, int d) {
    std::vector<double> means(static_cast<std::size_t>(k) * d, 0.0);
    if (k <= d) {
        const double c = kBlobSeparation / std::sqrt(2.0);
        for (int j = 0; j < k; ++j) means[static_cast<std::size_t>(j) * d + j] = c;
    } else {
        // More classes than dimensions: spread on a circle in the first
        // two coordinates, radius set by the adjacent-pair distance.
        const double radius = kBlobSeparation / (2.0 * std::sin(M_PI / k));
        for (int j = 0; j < k; ++j) {
            double angle = 2.0 * M_PI * j / k;
            means[static_cast<std::size_t>(j) * d + 0] = radius * std::cos(angle);
            means[static_cast<std::size_t>(j) * d + 1] = radius * std::sin(angle);
        }
    }
    // Center so the no-bias softmax model has its decision cone at the origin.
    for (int c = 0; c < d; ++c) {
        double mean = 0.0;
        for (int j = 0; j < k; ++j) mean += means[static_cast<std::size_t>(j) * d + c];
        mean /= k;
        for (int j = 0; j < k; ++j) means[static_cast<std::size_t>(j) * d + c] -= mean;
    }
    return means;
}

} // namespace

Dataset generate_classification(const SyntheticSpec& spec, RngStream& rng) {
    validate(spec);
    if (spec.kind != TaskKind::classification)
        throw ConfigError("generate_classification requires task.kind = classification");

    Dataset ds;
    ds.kind = TaskKind::classification;
    ds.n = spec.n_total;
    ds.d = spec.d;
    ds.num_classes = spec.num_classes;
    ds.features.resize(static_cast<std::size_t>(ds.n) * ds.d);
    ds.labels.resize(static_cast<std::size_t>(ds.n));

    const std::vector<double> means = blob_means(spec.num_classes, spec.d);
    for (std::int64_t i = 0; i < ds.n; ++i) {
        int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
        ds.labels[static_cast<std::size_t>(i)] = label;
        double* x = ds.features.data() + i * ds.d;
        const double* mu = means.data() + static_cast<std::size_t>(label) * ds.d;
        for (int k = 0; k < ds.d; ++k) x[k] = mu[k] + rng.normal();
    }
    return ds;
}

DataSplit partition(const Dataset& ds, int m, int n_aux, int n_test, RngStream& rng) {
    if (m < 1) throw ConfigError("partition: worker count must be at least 1");
    const std::int64_t n = ds.n;
    if (n_aux + n_test >= n)
        throw ConfigError("partition: n_aux + n_test leaves no training rows");
    if (n - n_aux - n_test < m)
        throw ConfigError("partition: fewer training rows than workers");

    std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::int64_t i = n - 1; i > 0; --i) {
        std::int64_t j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    DataSplit split;
    auto cursor = perm.begin();
    split.test.assign(cursor, cursor + n_test);
    cursor += n_test;
    split.auxiliary.assign(cursor, cursor + n_aux);
    cursor += n_aux;

    const std::int64_t train = n - n_test - n_aux;
    const std::int64_t base = train / m;
    const std::int64_t extra = train % m;
    split.worker_shards.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        std::int64_t size = base + (j < extra ? 1 : 0);
        split.worker_shards[static_cast<std::size_t>(j)].assign(cursor, cursor + size);
        cursor += size;
    }
    return split;
}

std::vector<std::int32_t> sample_batch(std::span<const std::int32_t> indices,
                                       int batch_size, RngStream& rng) {
    const std::int64_t n = static_cast<std::int64_t>(indices.size());
    if (batch_size > n)
        throw ConfigError("sample_batch: batch size exceeds index set size");
    if (batch_size < 0) throw ConfigError("sample_batch: negative batch size");
    // Floyd's sampling: exactly batch_size draws, no shard copy.
    std::vector<std::int32_t> out;
    out.reserve(static_cast<std::size_t>(batch_size));
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
    for (std::int64_t j = n - batch_size; j < n; ++j) {
        std::int64_t pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(j + 1)));
        std::int64_t pos = seen[static_cast<std::size_t>(pick)] ? j : pick;
        seen[static_cast<std::size_t>(pos)] = 1;
        out.push_back(indices[static_cast<std::size_t>(pos)]);
    }
    return out;
}

namespace {
constexpr char kMagic[8] = {'B', 'G', 'D', 'S', '0', '0', '0', '1'};

struct FileCloser {
    std::FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

void write_all(std::FILE* f, const void* p, std::size_t bytes, const std::string& path) {
    if (std::fwrite(p, 1, bytes, f) != bytes)
        throw SimError("dataset write failed: " + path);
}

void read_all(std::FILE* f, void* p, std::size_t bytes, const std::string& path) {
    if (std::fread(p, 1, bytes, f) != bytes)
        throw SimError("dataset read failed or truncated: " + path);
}
} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw SimError("cannot open for writing: " + path);
    FileCloser closer{f};
    write_all(f, kMagic, sizeof kMagic, path);
    std::uint32_t kind = ds.kind == TaskKind::regression ? 0u : 1u;
    std::uint32_t d = static_cast<std::uint32_t>(ds.d);
    std::uint32_t k = static_cast<std::uint32_t>(ds.num_classes);
    std::uint64_t n = static_cast<std::uint64_t>(ds.n);
    write_all(f, &kind, sizeof kind, path);
    write_all(f, &d, sizeof d, path);
    write_all(f, &k, sizeof k, path);
    write_all(f, &n, sizeof n, path);
    write_all(f, ds.features.data(), ds.features.size() * sizeof(double), path);
    if (ds.kind == TaskKind::regression) {
        write_all(f, ds.targets.data(), ds.targets.size() * sizeof(double), path);
    } else {
        std::vector<std::int32_t> labels(ds.labels.begin(), ds.labels.end());
        write_all(f, labels.data(), labels.size() * sizeof(std::int32_t), path);
    }
}

Dataset load_dataset(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw SimError("cannot open for reading: " + path);
    FileCloser closer{f};
    char magic[8];
    read_all(f, magic, sizeof magic, path);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw SimError("not a dataset file (bad magic): " + path);
    std::uint32_t kind = 0, d = 0, k = 0;
    std::uint64_t n = 0;
    read_all(f, &kind, sizeof kind, path);
    read_all(f, &d, sizeof d, path);
    read_all(f, &k, sizeof k, path);
    read_all(f, &n, sizeof n, path);

    Dataset ds;
    ds.kind = kind == 0 ? TaskKind::regression : TaskKind::classification;
    ds.d = static_cast<int>(d);
    ds.num_classes = static_cast<int>(k);
    ds.n = static_cast<std::int64_t>(n);
    ds.features.resize(static_cast<std::size_t>(ds.n) * ds.d);
    read_all(f, ds.features.data(), ds.features.size() * sizeof(double), path);
    if (ds.kind == TaskKind::regression) {
        ds.targets.resize(static_cast<std::size_t>(ds.n));
        read_all(f, ds.targets.data(), ds.targets.size() * sizeof(double), path);
    } else {
        std::vector<std::int32_t> labels(static_cast<std::size_t>(ds.n));
        read_all(f, labels.data(), labels.size() * sizeof(std::int32_t), path);
        ds.labels.assign(labels.begin(), labels.end());
    }
    return ds;
}

} // namespace bygars
