#include "snecl/optim.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <cmath>

namespace snecl {

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd" || name == "sgd-momentum") return OptimizerKind::sgd_momentum;
    throw ValidationError("unknown optimizer '" + name + "'");
}

void OptimizerSettings::validate() const {
    // lr == 0 is accepted and leaves parameters unchanged.
    detail::require(lr >= 0.0 && std::isfinite(lr), "learning rate must be finite and >= 0");
    detail::require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
    detail::require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
    detail::require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
    detail::require(eps > 0.0, "adam epsilon must be positive");
    detail::require(weight_decay >= 0.0, "weight decay must be >= 0");
}

OptimizerState make_optimizer(const OptimizerSettings& settings, std::span<Matrix* const> params) {
    settings.validate();
    OptimizerState opt;
    opt.settings = settings;
    for (const Matrix* p : params) {
        opt.first.push_back(Matrix::Zero(p->rows(), p->cols()));
        if (settings.kind == OptimizerKind::adam) {
            opt.second.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    return opt;
}

void optimizer_step(OptimizerState& opt, std::span<Matrix* const> params,
                    std::span<const Matrix> grads) {
    const auto& s = opt.settings;
    detail::require(params.size() == grads.size() && params.size() == opt.first.size(),
                    "optimizer_step: parameter/gradient/buffer counts differ");
    const bool adam = s.kind == OptimizerKind::adam;
    if (adam) {
        detail::require(opt.second.size() == params.size(), "optimizer_step: missing Adam buffers");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string what = "parameter " + std::to_string(i);
        require_shape(grads[i], params[i]->rows(), params[i]->cols(), what + " gradient");
        require_shape(opt.first[i], params[i]->rows(), params[i]->cols(), what + " buffer");
        require_finite(grads[i], what + " gradient");
    }

    ++opt.step;
    const double t = static_cast<double>(opt.step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        Matrix g = grads[i];
        if (s.weight_decay > 0.0) g += s.weight_decay * p;
        if (adam) {
            opt.first[i] = s.beta1 * opt.first[i] + (1.0 - s.beta1) * g;
            opt.second[i] = s.beta2 * opt.second[i] + (1.0 - s.beta2) * g.cwiseProduct(g);
            const double c1 = 1.0 - std::pow(s.beta1, t);
            const double c2 = 1.0 - std::pow(s.beta2, t);
            const auto m_hat = opt.first[i].array() / c1;
            const auto v_hat = opt.second[i].array() / c2;
            p.array() -= s.lr * m_hat / (v_hat.sqrt() + s.eps);
        } else {
            opt.first[i] = s.momentum * opt.first[i] + g;
            p -= s.lr * opt.first[i];
        }
    }
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& fn, const Matrix& point,
                        double step) {
    detail::require(step > 0.0, "finite_diff_grad: step must be positive");
    Matrix grad(point.rows(), point.cols());
    Matrix x = point;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = x.data()[i];
        x.data()[i] = orig + step;
        const double up = fn(x);
        x.data()[i] = orig - step;
        const double down = fn(x);
        x.data()[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                               std::to_string(i));
        }
        grad.data()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double relative_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max(a.norm(), b.norm());
    if (scale == 0.0) return 0.0;
    return (a - b).norm() / scale;
}

} // namespace snecl
