#pragma once

// Loss functions with closed-form stochastic gradients, the
// full-training-set gradient surrogate for the population gradient, and
// the exact least-squares optimum used as verification ground truth.
//
// mse_linear:     f(w, x, y) = 0.5 (x^T w - y)^2,          model dim d
// softmax_linear: cross-entropy of softmax(W x), W is K x d, model dim K*d
// Both add (l2_reg / 2) ||w||^2 to the loss and l2_reg * w to gradients.

#include <cstdint>
#include <span>
#include <vector>

#include "bygars/core.hpp"
#include "bygars/data.hpp"

namespace bygars {

enum class ObjectiveKind { mse_linear, softmax_linear };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::mse_linear;
    double l2_reg = 0.0;
    int d = 0;
    int num_classes = 0; // softmax only

    int model_dim() const {
        return kind == ObjectiveKind::mse_linear ? d : d * num_classes;
    }

    static Objective for_dataset(const Dataset& ds, double l2_reg);

    // Mean per-example loss over rows plus the l2 term.
    double loss(const Dataset& ds, std::span<const std::int32_t> rows,
                std::span<const double> w) const;

    // Mean per-example gradient over rows plus l2_reg * w. A non-empty
    // label_remap (size K) evaluates classification rows under remapped
    // labels; regression ignores it.
    ParamVector gradient(const Dataset& ds, std::span<const std::int32_t> rows,
                         std::span<const double> w,
                         std::span<const int> label_remap = {}) const;

    // Gradient over the entire training pool; the stand-in for the
    // population gradient in the theorem checks.
    ParamVector population_gradient(const Dataset& ds,
                                    std::span<const std::int32_t> training_rows,
                                    std::span<const double> w) const;

    // Fraction of rows whose argmax logit matches the label.
    double accuracy(const Dataset& ds, std::span<const std::int32_t> rows,
                    std::span<const double> w) const;
};

// Solves (X^T X / N + l2 I) w = X^T y / N over the given rows by a dense
// Cholesky factorization. mse_linear only.
ParamVector closed_form_optimum(const Objective& obj, const Dataset& ds,
                                std::span<const std::int32_t> rows);

} // namespace bygars
