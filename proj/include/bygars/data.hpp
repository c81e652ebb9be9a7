#pragma once

// Synthetic task generation, worker sharding, and mini-batch sampling.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bygars/core.hpp"
#include "bygars/rng.hpp"

namespace bygars {

enum class TaskKind { regression, classification };

struct Dataset {
    TaskKind kind = TaskKind::regression;
    std::int64_t n = 0;
    int d = 0;
    int num_classes = 0;              // classification only
    std::vector<double> features;     // n x d row-major
    std::vector<double> targets;      // regression
    std::vector<int> labels;          // classification, values in [0, K)

    std::span<const double> row(std::int64_t i) const {
        return {features.data() + i * d, static_cast<std::size_t>(d)};
    }
};

struct DataSplit {
    std::vector<std::vector<std::int32_t>> worker_shards;
    std::vector<std::int32_t> auxiliary;
    std::vector<std::int32_t> test;
};

struct SyntheticSpec {
    TaskKind kind = TaskKind::regression;
    int d = 20;
    std::int64_t n_total = 10000;
    int n_test = 2000;
    int n_aux = 250;
    double noise_std = 0.1;
    double theta_star_mean = 1.0;
    int num_classes = 10;
};

void validate(const SyntheticSpec& spec);

// y = x^T theta* + eps, theta* ~ N(theta_star_mean * 1, I), x ~ N(0, I),
// eps ~ N(0, noise_std^2). Returns the dataset and the ground-truth theta*.
struct RegressionData {
    Dataset dataset;
    ParamVector theta_star;
};
RegressionData generate_regression(const SyntheticSpec& spec, RngStream& rng);

// K unit-covariance Gaussian blobs with well-separated, centered means so
// a linear softmax model classifies the attack-free task almost perfectly.
Dataset generate_classification(const SyntheticSpec& spec, RngStream& rng);

// Uniformly random disjoint assignment of all rows into m worker shards
// (sizes within 1 of each other), an auxiliary set, and a test set.
DataSplit partition(const Dataset& ds, int m, int n_aux, int n_test, RngStream& rng);

// Uniform sample of batch_size distinct indices from the given set.
std::vector<std::int32_t> sample_batch(std::span<const std::int32_t> indices,
                                       int batch_size, RngStream& rng);

// Flat binary dataset file (see README for the layout); round-trips
// bit-exactly for determinism audits.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace bygars
