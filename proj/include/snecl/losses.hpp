#pragma once

#include "snecl/matrix.hpp"
#include "snecl/similarity.hpp"

#include <span>
#include <string>

namespace snecl {

/// How a feature-space similarity matrix Q is built from an embedding Z.
struct QBuilder {
    enum class Family { gaussian_conditional, t_joint };

    Family family = Family::gaussian_conditional;
    Similarity sim = Similarity::cosine; // gaussian_conditional only
    double tau = 1.0;
    double t_df = 1.0; // t_joint only

    static QBuilder gaussian(Similarity sim, double tau);
    static QBuilder student_t(double t_df, double tau);

    SimMatrix build(const Matrix& z) const;
    void validate() const;
};

enum class LossKind { sne_kl, infonce, infonce_weighted, infonce_unnormalized, t_simclr };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);

struct LossSpec {
    LossKind kind = LossKind::infonce;
    double tau = 1.0;
    double t_df = 5.0;                   // t_simclr
    Similarity sim = Similarity::cosine; // infonce family
    QBuilder q;                          // sne_kl

    /// Throws on tau/t_df <= 0, or cosine similarity with the unnormalized variant.
    void validate() const;
};

/// sum_ij P_ij log(P_ij / Q_ij) with 0 log 0 = 0.
/// Throws NumericError when Q_ij = 0 where P_ij > 0.
double kl_match(const SimMatrix& p, const SimMatrix& q);

struct KlEval {
    double value = 0.0;
    Matrix grad; // d value / dZ
};

/// kl_match(p, q.build(z)) and its gradient with respect to z.
KlEval kl_match_grad(const SimMatrix& p, const Matrix& z, const QBuilder& q);

/// Symmetric InfoNCE over the 2n features: each feature's denominator runs over
/// all 2n - 1 others, including its own positive.
double infonce(const Matrix& anchors, const Matrix& views, double tau, Similarity sim);

/// (1/2n) sum_i w_i (l(x_i, x_i') + l(x_i', x_i)).
double infonce_weighted(const Matrix& anchors, const Matrix& views, std::span<const double> weights,
                        double tau, Similarity sim);

/// InfoNCE on raw inner products (no normalization of the features).
double infonce_unnormalized(const Matrix& anchors, const Matrix& views, double tau);

/// (1/n) sum_i -log[w(z_i, z_i') / sum_{j != k} w(z~_j, z~_k)] with Student-t
/// weights w(a, b) = (1 + |a - b|^2 / (tau t_df))^(-(t_df+1)/2).
double t_simclr_loss(const Matrix& anchors, const Matrix& views, double t_df, double tau);

struct AlignUniform {
    double align = 0.0;
    double uniform = 0.0;
};

/// The two additive parts of t_simclr_loss: positive-pair alignment and the
/// log of the total pairwise weight.
AlignUniform t_simclr_align_uniform(const Matrix& anchors, const Matrix& views, double t_df,
                                    double tau);

struct LossAux {
    const SimMatrix* target = nullptr;  // sne_kl
    std::span<const double> weights{};  // infonce_weighted
};

struct LossEval {
    double value = 0.0;
    Matrix grad_anchors;
    Matrix grad_views;
};

/// Loss value and exact gradients for any spec. For sne_kl the embedding is
/// interleave_pairs(anchors, views), or `anchors` alone when `views` is empty.
LossEval loss_grad(const LossSpec& spec, const Matrix& anchors, const Matrix& views,
                   const LossAux& aux = {});

double loss_value(const LossSpec& spec, const Matrix& anchors, const Matrix& views,
                  const LossAux& aux = {});

/// Back-propagates dL/dS through S = similarity_matrix(z, sim).
Matrix similarity_backward(const Matrix& z, Similarity sim, const Matrix& grad_s);

} // namespace snecl
