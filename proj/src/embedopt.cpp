#include "snecl/embedopt.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace snecl {

std::string to_string(Constraint c) {
    return c == Constraint::sphere ? "sphere" : "euclidean";
}

Constraint parse_constraint(const std::string& name) {
    if (name == "sphere") return Constraint::sphere;
    if (name == "euclidean") return Constraint::euclidean;
    throw ValidationError("unknown constraint '" + name + "' (expected sphere or euclidean)");
}

void EmbedOptions::validate() const {
    detail::require(d_z >= 1, "embedding: d_z must be >= 1");
    detail::require(steps >= 1, "embedding: steps must be >= 1");
    detail::require(lr > 0.0 && std::isfinite(lr), "embedding: lr must be > 0");
    detail::require(momentum >= 0.0 && momentum < 1.0, "embedding: momentum must be in [0, 1)");
    q.validate();
}

Matrix project_sphere(const Matrix& z) {
    return normalize_rows(z);
}

EmbedResult optimize_embedding(const SimMatrix& p, const EmbedOptions& options, Rng& rng) {
    options.validate();
    p.validate();
    const auto n = static_cast<Eigen::Index>(p.size());
    detail::require(n >= 2, "embedding: P must have at least two points");

    EmbedResult out;
    out.z.resize(n, static_cast<Eigen::Index>(options.d_z));
    for (Eigen::Index i = 0; i < out.z.size(); ++i) out.z.data()[i] = 0.1 * rng.normal();
    if (options.constraint == Constraint::sphere) out.z = project_sphere(out.z);

    Matrix velocity = Matrix::Zero(out.z.rows(), out.z.cols());
    out.loss_history.reserve(options.steps);
    for (std::size_t step = 0; step < options.steps; ++step) {
        const KlEval eval = kl_match_grad(p, out.z, options.q);
        if (!std::isfinite(eval.value) || !all_finite(eval.grad)) {
            throw NumericError("embedding diverged at step " + std::to_string(step) +
                               " (loss " + std::to_string(eval.value) + ")");
        }
        out.loss_history.push_back(eval.value);
        velocity = options.momentum * velocity - options.lr * eval.grad;
        out.z += velocity;
        if (options.constraint == Constraint::sphere) out.z = project_sphere(out.z);
    }
    return out;
}

Matrix tammes_closed_form(std::size_t n, std::size_t d_z) {
    detail::require(n >= 2, "tammes_closed_form: n must be >= 2");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(d_z);
    if (d_z == 2) {
        Matrix z(rows, 2);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
            z(i, 0) = std::cos(angle);
            z(i, 1) = std::sin(angle);
        }
        return z;
    }
    if (n > d_z + 1) {
        throw ValidationError("tammes_closed_form: no closed form for n = " + std::to_string(n) +
                              ", d_z = " + std::to_string(d_z));
    }
    // Centered standard basis of R^n expressed in an orthonormal (Helmert)
    // basis of the sum-zero hyperplane, which has dimension n - 1 <= d_z.
    Matrix z = Matrix::Zero(rows, cols);
    for (Eigen::Index k = 1; k < rows; ++k) {
        const double kk = static_cast<double>(k);
        const double scale = 1.0 / std::sqrt(kk * (kk + 1.0));
        for (Eigen::Index i = 0; i < k; ++i) z(i, k - 1) = scale;
        z(k, k - 1) = -kk * scale;
    }
    return project_sphere(z);
}

UniformityScore uniformity_score(const Matrix& z) {
    detail::require(z.rows() >= 2, "uniformity_score: needs at least two points");
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        detail::require(std::abs(z.row(i).norm() - 1.0) < 1e-8,
                        "uniformity_score: row " + std::to_string(i) + " is not unit norm");
    }
    const double target = -1.0 / static_cast<double>(z.rows() - 1);
    UniformityScore score;
    double max_cos = -1.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < z.rows(); ++j) {
            const double c = std::clamp(z.row(i).dot(z.row(j)), -1.0, 1.0);
            max_cos = std::max(max_cos, c);
            score.simplex_deviation = std::max(score.simplex_deviation, std::abs(c - target));
        }
    }
    score.min_angle_deg = std::acos(max_cos) * 180.0 / std::numbers::pi;
    return score;
}

std::vector<double> circular_gaps_deg(const Matrix& z2) {
    detail::require(z2.cols() == 2, "circular_gaps_deg: points must be 2-D");
    detail::require(z2.rows() >= 2, "circular_gaps_deg: needs at least two points");
    std::vector<double> angles;
    for (Eigen::Index i = 0; i < z2.rows(); ++i) {
        double a = std::atan2(z2(i, 1), z2(i, 0)) * 180.0 / std::numbers::pi;
        if (a < 0.0) a += 360.0;
        angles.push_back(a);
    }
    std::sort(angles.begin(), angles.end());
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < angles.size(); ++i) gaps.push_back(angles[i + 1] - angles[i]);
    gaps.push_back(360.0 - angles.back() + angles.front());
    return gaps;
}

} // namespace snecl
