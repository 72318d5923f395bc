#include "snecl/mlp.hpp"

#include "snecl/error.hpp"

#include <cmath>

namespace snecl {

std::string to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    }
    return "identity";
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + name + "'");
}

std::size_t MlpParams::input_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows());
}

std::size_t MlpParams::output_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols());
}

void MlpParams::validate() const {
    detail::require(!layers.empty(), "MLP has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const std::string name = "layer " + std::to_string(l);
        require_shape(layer.bias, 1, layer.weight.cols(), name + " bias");
        if (l > 0) {
            detail::require(layers[l - 1].weight.cols() == layer.weight.rows(),
                            name + ": input width does not match previous layer output");
        }
        require_finite(layer.weight, name + " weight");
        require_finite(layer.bias, name + " bias");
    }
}

MlpParams init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                   std::size_t output_dim, Activation hidden_activation, Rng& rng) {
    detail::require(input_dim > 0 && output_dim > 0, "MLP dimensions must be positive");
    MlpParams params;
    std::size_t fan_in = input_dim;
    auto add_layer = [&](std::size_t fan_out, Activation act) {
        detail::require(fan_out > 0, "hidden width must be positive");
        DenseLayer layer;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        layer.weight.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            layer.weight.data()[i] = rng.uniform(-limit, limit);
        }
        layer.bias = Matrix::Zero(1, static_cast<Eigen::Index>(fan_out));
        layer.activation = act;
        params.layers.push_back(std::move(layer));
        fan_in = fan_out;
    };
    for (std::size_t width : hidden) add_layer(width, hidden_activation);
    add_layer(output_dim, Activation::identity);
    return params;
}

BatchNormState BatchNormState::identity(std::size_t dims, double momentum, double epsilon) {
    const auto k = static_cast<Eigen::Index>(dims);
    BatchNormState bn;
    bn.gamma = Matrix::Ones(1, k);
    bn.beta = Matrix::Zero(1, k);
    bn.running_mean = Matrix::Zero(1, k);
    bn.running_var = Matrix::Ones(1, k);
    bn.momentum = momentum;
    bn.epsilon = epsilon;
    return bn;
}

void BatchNormState::validate() const {
    const Eigen::Index k = gamma.cols();
    require_shape(gamma, 1, k, "batch-norm gamma");
    require_shape(beta, 1, k, "batch-norm beta");
    require_shape(running_mean, 1, k, "batch-norm running mean");
    require_shape(running_var, 1, k, "batch-norm running variance");
    detail::require(momentum > 0.0 && momentum <= 1.0, "batch-norm momentum must be in (0, 1]");
    detail::require(epsilon > 0.0, "batch-norm epsilon must be positive");
    detail::require((running_var.array() >= 0.0).all(), "batch-norm running variance is negative");
}

namespace {

void apply_activation(Matrix& m, Activation act) {
    switch (act) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::tanh: m = m.array().tanh().matrix(); break;
    case Activation::identity: break;
    }
}

// d(act)/d(pre) expressed through the post-activation value.
void activation_backward(Matrix& grad, const Matrix& post, Activation act) {
    switch (act) {
    case Activation::relu: grad = (post.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad = (grad.array() * (1.0 - post.array().square())).matrix(); break;
    case Activation::identity: break;
    }
}

} // namespace

ForwardResult mlp_forward(const MlpParams& params, BatchNormState* bn, const Matrix& batch) {
    detail::require(!params.layers.empty(), "MLP has no layers");
    detail::require(static_cast<std::size_t>(batch.cols()) == params.input_dim(),
                    "mlp_forward: batch has " + std::to_string(batch.cols()) +
                        " columns, encoder expects " + std::to_string(params.input_dim()));
    detail::require(batch.rows() >= 1, "mlp_forward: empty batch");

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.inputs.reserve(params.layers.size());
    cache.activations.reserve(params.layers.size());

    Matrix h = batch;
    for (const auto& layer : params.layers) {
        cache.inputs.push_back(h);
        Matrix pre = h * layer.weight;
        pre.rowwise() += layer.bias.row(0);
        apply_activation(pre, layer.activation);
        cache.activations.push_back(pre);
        h = std::move(pre);
    }

    if (bn != nullptr) {
        detail::require(bn->dims() == params.output_dim(),
                        "batch norm width does not match encoder output");
        const Eigen::Index b = h.rows();
        cache.has_bn = true;
        cache.bn_mode = bn->mode;
        RowVector mean;
        RowVector var;
        if (bn->mode == BatchNormMode::train) {
            detail::require(b >= 2, "batch norm in train mode needs at least 2 samples");
            mean = h.colwise().mean();
            const Matrix centered = h.rowwise() - mean;
            var = centered.array().square().colwise().sum().matrix() / static_cast<double>(b);
            const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
            bn->running_mean = (1.0 - bn->momentum) * bn->running_mean + bn->momentum * mean;
            bn->running_var = (1.0 - bn->momentum) * bn->running_var + bn->momentum * unbias * var;
        } else {
            mean = bn->running_mean.row(0);
            var = bn->running_var.row(0);
        }
        cache.bn_inv_std = (var.array() + bn->epsilon).rsqrt().matrix();
        cache.bn_xhat = (h.rowwise() - mean).array().rowwise() * cache.bn_inv_std.row(0).array();
        Matrix out = cache.bn_xhat.array().rowwise() * bn->gamma.row(0).array();
        out.rowwise() += bn->beta.row(0);
        h = std::move(out);
    }

    result.output = std::move(h);
    return result;
}

MlpGrads mlp_backward(const MlpParams& params, const BatchNormState* bn, const ForwardCache& cache,
                      const Matrix& grad_output) {
    const std::size_t n_layers = params.layers.size();
    if (cache.inputs.size() != n_layers || cache.activations.size() != n_layers) {
        throw ValidationError("mlp_backward: cache does not match the network depth");
    }
    if (cache.has_bn != (bn != nullptr)) {
        throw ValidationError("mlp_backward: batch-norm presence differs from the forward pass");
    }
    const Matrix& last = cache.activations.back();
    require_shape(grad_output, last.rows(), last.cols(), "mlp_backward grad_output");
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& w = params.layers[l].weight;
        if (cache.inputs[l].cols() != w.rows() || cache.activations[l].cols() != w.cols() ||
            cache.inputs[l].rows() != last.rows()) {
            throw ValidationError("mlp_backward: stale cache for layer " + std::to_string(l));
        }
    }

    MlpGrads grads;
    grads.weight.resize(n_layers);
    grads.bias.resize(n_layers);

    Matrix g = grad_output;
    if (bn != nullptr) {
        grads.bn_gamma = (g.array() * cache.bn_xhat.array()).colwise().sum().matrix();
        grads.bn_beta = g.colwise().sum();
        const Matrix dxhat = g.array().rowwise() * bn->gamma.row(0).array();
        if (cache.bn_mode == BatchNormMode::train) {
            const auto b = static_cast<double>(g.rows());
            const RowVector sum_dxhat = dxhat.colwise().sum();
            const RowVector sum_dxhat_xhat =
                (dxhat.array() * cache.bn_xhat.array()).colwise().sum().matrix();
            Matrix dx = (b * dxhat).rowwise() - sum_dxhat;
            dx -= (cache.bn_xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
            dx = dx.array().rowwise() * (cache.bn_inv_std.row(0).array() / b);
            g = std::move(dx);
        } else {
            g = dxhat.array().rowwise() * cache.bn_inv_std.row(0).array();
        }
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        activation_backward(g, cache.activations[l], params.layers[l].activation);
        grads.weight[l] = cache.inputs[l].transpose() * g;
        grads.bias[l] = g.colwise().sum();
        g = g * params.layers[l].weight.transpose();
    }
    grads.input = std::move(g);
    return grads;
}

std::vector<Matrix*> parameter_refs(MlpParams& params, BatchNormState* bn) {
    std::vector<Matrix*> refs;
    for (auto& layer : params.layers) {
        refs.push_back(&layer.weight);
        refs.push_back(&layer.bias);
    }
    if (bn != nullptr) {
        refs.push_back(&bn->gamma);
        refs.push_back(&bn->beta);
    }
    return refs;
}

std::vector<Matrix> flatten_grads(const MlpGrads& grads, bool include_bn) {
    std::vector<Matrix> flat;
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        flat.push_back(grads.weight[l]);
        flat.push_back(grads.bias[l]);
    }
    if (include_bn) {
        detail::require(grads.bn_gamma.size() > 0, "flatten_grads: no batch-norm gradients");
        flat.push_back(grads.bn_gamma);
        flat.push_back(grads.bn_beta);
    }
    return flat;
}

} // namespace snecl
