#pragma once

// Shared numeric types: parameter/reputation vectors, the per-round
// gradient batch, step-size schedules, and gradient normalization.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bygars/errors.hpp"

namespace bygars {

// Holds both model parameters (dimension d) and reputation scores
// (dimension m); the dimension is fixed by whoever constructs it.
using ParamVector = std::vector<double>;

// Zero-gradient threshold: vectors at or below this norm pass through
// normalization unchanged instead of being blown up by division.
inline constexpr double kNormEpsilon = 1e-12;

bool all_finite(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

// Compensated (Neumaier) accumulation so the normalized norm lands
// within a few ulps of the target.
double norm2(std::span<const double> v);

// y += c * x
void axpy(double c, std::span<const double> x, std::span<double> y);

void scale_inplace(std::span<double> v, double c);

// Rescales v to target_norm when ||v|| > kNormEpsilon, passes near-zero
// vectors through, and rejects non-finite input.
ParamVector normalize(std::span<const double> v, double target_norm);
void normalize_inplace(std::span<double> v, double target_norm);

// The m gradients received by the server in one round, row j from
// worker worker_ids[j]. Row-major m x d storage.
struct GradientBatch {
    int m = 0;
    int d = 0;
    std::vector<double> data;
    std::vector<int> worker_ids;

    GradientBatch() = default;
    GradientBatch(int m_, int d_)
        : m(m_), d(d_), data(static_cast<std::size_t>(m_) * d_, 0.0), worker_ids(m_) {
        for (int j = 0; j < m_; ++j) worker_ids[j] = j;
    }

    std::span<double> row(int j) {
        return {data.data() + static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d)};
    }
    std::span<const double> row(int j) const {
        return {data.data() + static_cast<std::size_t>(j) * d, static_cast<std::size_t>(d)};
    }
};

// out = H^T q = sum_j q_j h_j  (the reputation-weighted aggregate)
ParamVector weighted_row_sum(const GradientBatch& h, std::span<const double> q);

// out_j = <h_j, g>  (per-worker inner products with the auxiliary gradient)
ParamVector row_dots(const GradientBatch& h, std::span<const double> g);

// Decaying step sizes. gamma drives the parameter update, alpha the
// reputation (meta) update: gamma_t = gamma0 / (1 + beta * t^gamma_exponent),
// alpha_t = alpha0 / (1 + beta_m * t^alpha_exponent).
struct ScheduleSpec {
    double gamma0 = 0.1;
    double beta = 0.01;
    double alpha0 = 0.1;
    double beta_m = 0.01;
    double gamma_exponent = 1.0;
    double alpha_exponent = 0.9;
};

double gamma_at(const ScheduleSpec& s, std::int64_t t);
double alpha_at(const ScheduleSpec& s, std::int64_t t);

void validate(const ScheduleSpec& s);

} // namespace bygars
