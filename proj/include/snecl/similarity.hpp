#pragma once

#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"
#include "snecl/simdata.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace snecl {

/// How a similarity matrix is normalized.
enum class SimKind {
    conditional,  // every row sums to 1
    joint,        // all entries sum to 1
    unnormalized, // no constraint
};

std::string to_string(SimKind k);
SimKind parse_sim_kind(const std::string& name);

/// Pairwise similarities with a zero diagonal and nonnegative finite entries.
struct SimMatrix {
    Matrix values;
    SimKind kind = SimKind::unnormalized;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    /// Checks shape, zero diagonal, sign, finiteness and the normalization of `kind` (1e-10).
    void validate() const;
};

/// Feature-space similarity used inside softmax-style Q matrices.
enum class Similarity {
    cosine,           // <z_i/|z_i|, z_j/|z_j|>
    neg_sq_euclidean, // -|z_i - z_j|^2
    inner_product,    // <z_i, z_j>
};

std::string to_string(Similarity s);
Similarity parse_similarity(const std::string& name);

/// Full n x n matrix of sim(z_i, z_j), diagonal included.
Matrix similarity_matrix(const Matrix& z, Similarity sim);

/// Gaussian-kernel neighbor probabilities with per-row bandwidth sigma_i:
/// P_{j|i} proportional to exp(-|x_i - x_j|^2 / (2 sigma_i^2)).
SimMatrix p_sne_conditional(const Matrix& x, double bandwidth);
SimMatrix p_sne_conditional(const Matrix& x, std::span<const double> bandwidths);

/// Sparse positive-pair matrix over the interleaved 2n points
/// (row 2i = x_i, row 2i+1 = x_i'): each positive entry equals 1/(2n).
/// Rows therefore sum to 1/(2n) and the total mass is 1; kind = unnormalized.
SimMatrix p_positive_pairs(std::size_t n);

/// Pair weights exp(iou / tau_w), rescaled to mean 1.
std::vector<double> p_weighted_pairs(std::span<const double> ious, double tau_w);

using Density = std::function<double(std::span<const double>)>;

/// Isotropic Gaussian density N(0, sigma^2 I) in the dimension of its argument.
Density gaussian_density(double sigma);

/// values_{ij} = phi(x_i - x_j), diagonal zeroed.
SimMatrix p_noise_induced(const Matrix& x, const Density& phi);

/// Kernel density estimate of p_lambda, the density of lambda (x_a - x_b) for
/// independent draws x_a, x_b from the rows of `x`, evaluated at every pairwise
/// difference x_i - x_j. Uses `draws` Monte Carlo samples and a Gaussian kernel
/// of width `bandwidth`; the result is symmetrized as (V + V^T) / 2.
SimMatrix p_mixup_induced(const Matrix& x, const MixupLambda& lambda, std::size_t draws,
                          double bandwidth, Rng& rng);

/// Rule-of-thumb KDE width: pooled stddev of lambda-differences times draws^(-1/(d+4)).
double mixup_default_bandwidth(const Matrix& x, const MixupLambda& lambda, std::size_t draws,
                               Rng& rng);

/// Row-wise softmax of sim(z_i, z_j) / tau over j != i.
SimMatrix q_gaussian_conditional(const Matrix& z, Similarity sim, double tau);

/// Student-t joint similarities
/// (1 + |z_i - z_j|^2 / (tau t_df))^(-(t_df+1)/2), normalized over ordered pairs.
SimMatrix q_t_joint(const Matrix& z, double t_df, double tau);

/// CSV: header `kind=<kind>` then n rows of n values.
void write_sim_matrix_csv(std::ostream& os, const SimMatrix& m);
SimMatrix read_sim_matrix_csv(std::istream& is);

} // namespace snecl
