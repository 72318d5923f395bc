#pragma once

#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snecl {

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

struct DenseLayer {
    Matrix weight; // fan_in x fan_out
    Matrix bias;   // 1 x fan_out
    Activation activation = Activation::identity;
};

/// Feed-forward encoder f: R^d -> R^{d_z}.
struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const;
    std::size_t output_dim() const;

    /// Checks that layer shapes chain and every parameter is finite.
    void validate() const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Hidden layers use `hidden_activation`; the output layer is linear.
MlpParams init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                   std::size_t output_dim, Activation hidden_activation, Rng& rng);

enum class BatchNormMode { train, eval };

/// Per-dimension batch normalization applied to the encoder output.
struct BatchNormState {
    Matrix gamma;         // 1 x k
    Matrix beta;          // 1 x k
    Matrix running_mean;  // 1 x k
    Matrix running_var;   // 1 x k
    double momentum = 0.1;
    double epsilon = 1e-5;
    BatchNormMode mode = BatchNormMode::train;

    static BatchNormState identity(std::size_t dims, double momentum = 0.1, double epsilon = 1e-5);
    std::size_t dims() const { return static_cast<std::size_t>(gamma.cols()); }
    void validate() const;
};

/// Intermediates recorded by mlp_forward for the matching mlp_backward call.
struct ForwardCache {
    std::vector<Matrix> inputs;      // input to each layer
    std::vector<Matrix> activations; // post-activation output of each layer
    bool has_bn = false;
    BatchNormMode bn_mode = BatchNormMode::eval;
    Matrix bn_xhat;    // b x k normalized pre-affine values
    Matrix bn_inv_std; // 1 x k
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

/// Evaluates the encoder on a batch. In train mode the batch-norm running
/// statistics are updated in place, so `bn` is mutable.
ForwardResult mlp_forward(const MlpParams& params, BatchNormState* bn, const Matrix& batch);

struct MlpGrads {
    std::vector<Matrix> weight;
    std::vector<Matrix> bias;
    Matrix bn_gamma; // empty when no batch norm
    Matrix bn_beta;
    Matrix input;
};

/// Gradients of L = <grad_output, output> for the forward pass recorded in `cache`.
MlpGrads mlp_backward(const MlpParams& params, const BatchNormState* bn, const ForwardCache& cache,
                      const Matrix& grad_output);

/// Mutable views of every trainable tensor, in a fixed order:
/// W0, b0, W1, b1, ..., then gamma, beta when `bn` is given.
std::vector<Matrix*> parameter_refs(MlpParams& params, BatchNormState* bn);

/// Gradients flattened in the order of parameter_refs.
std::vector<Matrix> flatten_grads(const MlpGrads& grads, bool include_bn);

} // namespace snecl
