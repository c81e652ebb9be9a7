#include "bygars/core.hpp"

#include <cmath>

namespace bygars {

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> v) {
    // Neumaier summation of squares.
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double sq = x * x;
        double t = sum + sq;
        if (std::fabs(sum) >= std::fabs(sq)) {
            comp += (sum - t) + sq;
        } else {
            comp += (sq - t) + sum;
        }
        sum = t;
    }
    return std::sqrt(sum + comp);
}

void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

void scale_inplace(std::span<double> v, double c) {
    for (double& x : v) x *= c;
}

void normalize_inplace(std::span<double> v, double target_norm) {
    if (!all_finite(v)) throw SimError("normalize: non-finite input vector");
    double n = norm2(v);
    if (n <= kNormEpsilon) return;
    scale_inplace(v, target_norm / n);
}

ParamVector normalize(std::span<const double> v, double target_norm) {
    ParamVector out(v.begin(), v.end());
    normalize_inplace(out, target_norm);
    return out;
}

ParamVector weighted_row_sum(const GradientBatch& h, std::span<const double> q) {
    ParamVector out(static_cast<std::size_t>(h.d), 0.0);
    for (int j = 0; j < h.m; ++j) axpy(q[static_cast<std::size_t>(j)], h.row(j), out);
    return out;
}

ParamVector row_dots(const GradientBatch& h, std::span<const double> g) {
    ParamVector out(static_cast<std::size_t>(h.m), 0.0);
    for (int j = 0; j < h.m; ++j) out[static_cast<std::size_t>(j)] = dot(h.row(j), g);
    return out;
}

namespace {
double decay(double base, double rate, double exponent, std::int64_t t) {
    double tp = exponent == 1.0 ? static_cast<double>(t)
                                : std::pow(static_cast<double>(t), exponent);
    return base / (1.0 + rate * tp);
}
} // namespace

double gamma_at(const ScheduleSpec& s, std::int64_t t) {
    return decay(s.gamma0, s.beta, s.gamma_exponent, t);
}

double alpha_at(const ScheduleSpec& s, std::int64_t t) {
    return decay(s.alpha0, s.beta_m, s.alpha_exponent, t);
}

void validate(const ScheduleSpec& s) {
    if (!(s.gamma0 > 0.0)) throw ConfigError("schedules.gamma0 must be positive");
    if (!(s.alpha0 > 0.0)) throw ConfigError("schedules.alpha0 must be positive");
    if (!(s.beta >= 0.0)) throw ConfigError("schedules.beta must be nonnegative");
    if (!(s.beta_m >= 0.0)) throw ConfigError("schedules.beta_m must be nonnegative");
    if (!(s.gamma_exponent >= 0.0)) throw ConfigError("schedules.gamma_exponent must be nonnegative");
    if (!(s.alpha_exponent >= 0.0)) throw ConfigError("schedules.alpha_exponent must be nonnegative");
}

} // namespace bygars
