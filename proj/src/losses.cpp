#include "snecl/losses.hpp"

#include "snecl/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace snecl {

QBuilder QBuilder::gaussian(Similarity sim, double tau) {
    QBuilder q;
    q.family = Family::gaussian_conditional;
    q.sim = sim;
    q.tau = tau;
    return q;
}

QBuilder QBuilder::student_t(double t_df, double tau) {
    QBuilder q;
    q.family = Family::t_joint;
    q.t_df = t_df;
    q.tau = tau;
    return q;
}

void QBuilder::validate() const {
    detail::require(tau > 0.0 && std::isfinite(tau), "Q builder: tau must be > 0");
    detail::require(t_df > 0.0 && std::isfinite(t_df), "Q builder: t_df must be > 0");
}

SimMatrix QBuilder::build(const Matrix& z) const {
    validate();
    return family == Family::t_joint ? q_t_joint(z, t_df, tau) : q_gaussian_conditional(z, sim, tau);
}

std::string to_string(LossKind k) {
    switch (k) {
    case LossKind::sne_kl: return "sne_kl";
    case LossKind::infonce: return "infonce";
    case LossKind::infonce_weighted: return "infonce_weighted";
    case LossKind::infonce_unnormalized: return "infonce_unnormalized";
    case LossKind::t_simclr: return "t_simclr";
    }
    return "infonce";
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "sne_kl") return LossKind::sne_kl;
    if (name == "infonce") return LossKind::infonce;
    if (name == "infonce_weighted") return LossKind::infonce_weighted;
    if (name == "infonce_unnormalized") return LossKind::infonce_unnormalized;
    if (name == "t_simclr") return LossKind::t_simclr;
    throw ValidationError("unknown loss '" + name + "'");
}

void LossSpec::validate() const {
    detail::require(tau > 0.0 && std::isfinite(tau), "loss: tau must be > 0");
    detail::require(t_df > 0.0 && std::isfinite(t_df), "loss: t_df must be > 0");
    if (kind == LossKind::infonce_unnormalized) {
        detail::require(sim != Similarity::cosine,
                        "infonce_unnormalized cannot use cosine similarity");
    }
    if (kind == LossKind::sne_kl) q.validate();
}

double kl_match(const SimMatrix& p, const SimMatrix& q) {
    detail::require(p.values.rows() == q.values.rows() && p.values.cols() == q.values.cols(),
                    "kl_match: P and Q differ in size");
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
            const double pij = p.values(i, j);
            if (pij == 0.0) continue;
            const double qij = q.values(i, j);
            if (!(qij > 0.0)) {
                throw NumericError("kl_match: Q(" + std::to_string(i) + "," + std::to_string(j) +
                                   ") is zero where P is positive");
            }
            total += pij * (std::log(pij) - std::log(qij));
        }
    }
    return total;
}

Matrix similarity_backward(const Matrix& z, Similarity sim, const Matrix& grad_s) {
    const Matrix g = grad_s + grad_s.transpose();
    switch (sim) {
    case Similarity::inner_product: return g * z;
    case Similarity::cosine: {
        Matrix out(z.rows(), z.cols());
        const Matrix u = normalize_rows(z);
        const Matrix du = g * u;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double norm = z.row(i).norm();
            const double radial = du.row(i).dot(u.row(i));
            out.row(i) = (du.row(i) - radial * u.row(i)) / norm;
        }
        return out;
    }
    case Similarity::neg_sq_euclidean: {
        const Vector rs = g.rowwise().sum();
        return -2.0 * (rs.asDiagonal() * z - g * z);
    }
    }
    return {};
}

namespace {

struct InfoNceOut {
    double value = 0.0;
    Matrix grad; // over interleaved features
};

// Shared core of the InfoNCE family. `weights` has one entry per pair (or is empty).
InfoNceOut infonce_core(const Matrix& anchors, const Matrix& views, std::span<const double> weights,
                        double tau, Similarity sim, bool want_grad) {
    detail::require(anchors.rows() >= 2, "InfoNCE needs at least two pairs");
    detail::require(tau > 0.0 && std::isfinite(tau), "InfoNCE: tau must be > 0");
    const Matrix z = interleave_pairs(anchors, views);
    const Eigen::Index m = z.rows();
    const double n2 = static_cast<double>(m);
    const Matrix s = similarity_matrix(z, sim);

    InfoNceOut out;
    Matrix grad_s;
    if (want_grad) grad_s = Matrix::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index pos = r ^ 1;
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r / 2)];
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < m; ++k) {
            if (k != r) mx = std::max(mx, s(r, k) / tau);
        }
        double total = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (k != r) total += std::exp(s(r, k) / tau - mx);
        }
        const double lse = mx + std::log(total);
        out.value += w * (lse - s(r, pos) / tau) / n2;
        if (want_grad && w != 0.0) {
            for (Eigen::Index k = 0; k < m; ++k) {
                if (k == r) continue;
                const double soft = std::exp(s(r, k) / tau - lse);
                grad_s(r, k) = w * soft / (tau * n2);
            }
            grad_s(r, pos) -= w / (tau * n2);
        }
    }
    if (want_grad) out.grad = similarity_backward(z, sim, grad_s);
    return out;
}

struct TOut {
    double align = 0.0;
    double uniform = 0.0;
    Matrix grad; // interleaved
};

TOut t_simclr_core(const Matrix& anchors, const Matrix& views, double t_df, double tau,
                   bool want_grad) {
    detail::require(anchors.rows() >= 2, "t-SimCLR needs at least two pairs");
    detail::require(t_df > 0.0 && tau > 0.0, "t-SimCLR: t_df and tau must be > 0");
    require_shape(views, anchors.rows(), anchors.cols(), "t-SimCLR views");
    const Matrix z = interleave_pairs(anchors, views);
    const Eigen::Index m = z.rows();
    const double n = static_cast<double>(anchors.rows());
    const double c = tau * t_df;
    const double a = (t_df + 1.0) / 2.0;
    const Matrix d2 = pairwise_sq_dists(z);

    TOut out;
    if (want_grad) out.grad = Matrix::Zero(m, z.cols());

    for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
        const double d = d2(2 * i, 2 * i + 1);
        out.align += a * std::log1p(d / c) / n;
        if (want_grad) {
            const RowVector diff = z.row(2 * i) - z.row(2 * i + 1);
            const RowVector g = (a / n) * (2.0 / c) / (1.0 + d / c) * diff;
            out.grad.row(2 * i) += g;
            out.grad.row(2 * i + 1) -= g;
        }
    }

    // Pairwise weights, each unordered pair counted twice (ordered sum j != k).
    Matrix dw = want_grad ? Matrix::Zero(m, m) : Matrix();
    double total = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = j + 1; k < m; ++k) {
            const double base = 1.0 + d2(j, k) / c;
            const double w = std::pow(base, -a);
            total += 2.0 * w;
            if (want_grad) dw(j, k) = -(a / c) * w / base; // dw/d(d^2)
        }
    }
    if (!(total > 0.0)) throw NumericError("t-SimCLR: pairwise weights underflowed");
    out.uniform = std::log(total);
    if (want_grad) {
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index k = j + 1; k < m; ++k) {
                // d log(total) / dz_j for the two ordered copies of (j, k).
                const RowVector g = (4.0 / total) * dw(j, k) * (z.row(j) - z.row(k));
                out.grad.row(j) += g;
                out.grad.row(k) -= g;
            }
        }
    }
    return out;
}

KlEval kl_grad_impl(const SimMatrix& p, const Matrix& z, const QBuilder& q, bool want_grad) {
    q.validate();
    const Eigen::Index m = z.rows();
    detail::require(static_cast<Eigen::Index>(p.size()) == m,
                    "kl_match_grad: P size differs from the number of features");
    KlEval out;
    const SimMatrix qm = q.build(z);
    out.value = kl_match(p, qm);
    if (!want_grad) return out;

    if (q.family == QBuilder::Family::gaussian_conditional) {
        Matrix grad_s = Matrix::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double row_mass = p.values.row(i).sum();
            for (Eigen::Index j = 0; j < m; ++j) {
                if (i == j) continue;
                grad_s(i, j) = (row_mass * qm.values(i, j) - p.values(i, j)) / q.tau;
            }
        }
        out.grad = similarity_backward(z, q.sim, grad_s);
        return out;
    }

    // Student-t joint Q = w / W: value = const - sum P log w + (sum P) log W.
    const double c = q.tau * q.t_df;
    const double a = (q.t_df + 1.0) / 2.0;
    const Matrix d2 = pairwise_sq_dists(z);
    const double mass = p.values.sum();
    double total = 0.0;
    Matrix w = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            w(i, j) = std::pow(1.0 + d2(i, j) / c, -a);
            total += w(i, j);
        }
    }
    out.grad = Matrix::Zero(m, z.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const double dl_dw = -p.values(i, j) / w(i, j) + mass / total;
            const double dw_dd = -(a / c) * w(i, j) / (1.0 + d2(i, j) / c);
            const RowVector g = 2.0 * dl_dw * dw_dd * (z.row(i) - z.row(j));
            out.grad.row(i) += g;
            out.grad.row(j) -= g;
        }
    }
    return out;
}

LossEval evaluate(const LossSpec& spec, const Matrix& anchors, const Matrix& views,
                  const LossAux& aux, bool want_grad) {
    spec.validate();
    LossEval out;
    auto take_pairs = [&](Matrix&& interleaved) {
        auto [ga, gv] = split_pairs(interleaved);
        out.grad_anchors = std::move(ga);
        out.grad_views = std::move(gv);
    };

    switch (spec.kind) {
    case LossKind::sne_kl: {
        detail::require(aux.target != nullptr, "sne_kl loss needs a target P matrix");
        const bool paired = views.size() > 0;
        const Matrix z = paired ? interleave_pairs(anchors, views) : anchors;
        KlEval kl = kl_grad_impl(*aux.target, z, spec.q, want_grad);
        out.value = kl.value;
        if (want_grad) {
            if (paired) {
                take_pairs(std::move(kl.grad));
            } else {
                out.grad_anchors = std::move(kl.grad);
            }
        }
        return out;
    }
    case LossKind::infonce:
    case LossKind::infonce_unnormalized:
    case LossKind::infonce_weighted: {
        require_shape(views, anchors.rows(), anchors.cols(), "InfoNCE views");
        std::span<const double> weights;
        if (spec.kind == LossKind::infonce_weighted) {
            detail::require(aux.weights.size() == static_cast<std::size_t>(anchors.rows()),
                            "infonce_weighted needs one weight per pair");
            for (double w : aux.weights) {
                detail::require(std::isfinite(w) && w >= 0.0, "pair weights must be >= 0");
            }
            weights = aux.weights;
        }
        InfoNceOut r = infonce_core(anchors, views, weights, spec.tau, spec.sim, want_grad);
        out.value = r.value;
        if (want_grad) take_pairs(std::move(r.grad));
        return out;
    }
    case LossKind::t_simclr: {
        TOut r = t_simclr_core(anchors, views, spec.t_df, spec.tau, want_grad);
        out.value = r.align + r.uniform;
        if (want_grad) take_pairs(std::move(r.grad));
        return out;
    }
    }
    throw ValidationError("unsupported loss kind");
}

} // namespace

KlEval kl_match_grad(const SimMatrix& p, const Matrix& z, const QBuilder& q) {
    return kl_grad_impl(p, z, q, true);
}

double infonce(const Matrix& anchors, const Matrix& views, double tau, Similarity sim) {
    require_shape(views, anchors.rows(), anchors.cols(), "InfoNCE views");
    return infonce_core(anchors, views, {}, tau, sim, false).value;
}

double infonce_weighted(const Matrix& anchors, const Matrix& views, std::span<const double> weights,
                        double tau, Similarity sim) {
    LossSpec spec;
    spec.kind = LossKind::infonce_weighted;
    spec.tau = tau;
    spec.sim = sim;
    LossAux aux;
    aux.weights = weights;
    return evaluate(spec, anchors, views, aux, false).value;
}

double infonce_unnormalized(const Matrix& anchors, const Matrix& views, double tau) {
    return infonce(anchors, views, tau, Similarity::inner_product);
}

double t_simclr_loss(const Matrix& anchors, const Matrix& views, double t_df, double tau) {
    const TOut r = t_simclr_core(anchors, views, t_df, tau, false);
    return r.align + r.uniform;
}

AlignUniform t_simclr_align_uniform(const Matrix& anchors, const Matrix& views, double t_df,
                                    double tau) {
    const TOut r = t_simclr_core(anchors, views, t_df, tau, false);
    return AlignUniform{r.align, r.uniform};
}

LossEval loss_grad(const LossSpec& spec, const Matrix& anchors, const Matrix& views,
                   const LossAux& aux) {
    return evaluate(spec, anchors, views, aux, true);
}

double loss_value(const LossSpec& spec, const Matrix& anchors, const Matrix& views,
                  const LossAux& aux) {
    return evaluate(spec, anchors, views, aux, false).value;
}

} // namespace snecl
