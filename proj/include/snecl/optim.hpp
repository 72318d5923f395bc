#pragma once

#include "snecl/matrix.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace snecl {

enum class OptimizerKind { sgd_momentum, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double momentum = 0.9; // sgd only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; // L2 term added to the gradient

    void validate() const;
};

struct OptimizerState {
    OptimizerSettings settings;
    std::uint64_t step = 0;
    std::vector<Matrix> first;  // momentum / Adam first moment
    std::vector<Matrix> second; // Adam second moment (empty for sgd)
};

/// Zero moment buffers shaped like `params`.
OptimizerState make_optimizer(const OptimizerSettings& settings, std::span<Matrix* const> params);

/// One update of every parameter. SGD follows the heavy-ball form
/// v = mu v + g, p -= lr v; Adam uses bias-corrected moments.
void optimizer_step(OptimizerState& opt, std::span<Matrix* const> params,
                    std::span<const Matrix> grads);

/// Central-difference gradient of `fn` at `point`.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& fn, const Matrix& point,
                        double step);

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
double relative_error(const Matrix& a, const Matrix& b);

} // namespace snecl
