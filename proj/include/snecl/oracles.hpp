#pragma once

#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace snecl {

using Permutation = std::vector<int>;

/// Exhaustive comparison of two criteria over all n! assignments pi of
/// feature points to data points, with p_ij = -|x_i - x_j| and
/// q_ij = -|z_i - z_j|:
///   C1(pi)     = sum_{i != j} q_{pi(i) pi(j)} / p_ij
///   frob_sq(pi) = sum_{i != j} (pbar_ij - q_{pi(i) pi(j)})^2, pbar_ij = -1 / p_ij
struct Theorem1Verdict {
    bool sets_identical = false;    // argmin C1 == argmin frob_sq
    bool unsquared_identical = false; // argmin frob_sq == argmin sqrt(frob_sq)
    std::vector<Permutation> argmin_c1;
    std::vector<Permutation> argmin_frob_sq;
    std::vector<Permutation> argmin_frob;
    double identity_spread = 0.0; // max - min over pi of frob_sq - 2 C1
    double identity_value = 0.0;  // frob_sq - 2 C1 at the identity permutation
};

/// Requires 2 <= n <= 8 rows and distinct rows of `x`. Values within
/// `tol * max(1, |min|)` of a criterion's minimum count as minimizers.
Theorem1Verdict theorem1_oracle(const Matrix& x, const Matrix& z, double tol = 1e-9);

struct RearrangementVerdict {
    bool identity_minimizes_ratio = false;  // sum y_pi(i) / x_i
    bool identity_minimizes_sq = false;     // sum (x_i - y_pi(i))^2
    double min_ratio = 0.0;
    double min_sq = 0.0;
};

/// x and y strictly ascending, positive, unit sum of squares; m <= 8.
RearrangementVerdict rearrangement_oracle(std::span<const double> x, std::span<const double> y,
                                          double tol = 1e-12);

/// A random strictly ascending positive vector with unit sum of squares.
std::vector<double> random_ascending_unit(std::size_t m, Rng& rng);

/// kl_match(P~, Q~) - infonce(A, V, 1, cosine) - log(1 / (2n)) for standard
/// normal features of dimension `dim`.
double equivalence_residual(std::size_t n, std::size_t dim, Rng& rng);

/// A finite domain: masses p(x_k) > 0 summing to 1 and a row-stochastic
/// positive-pair kernel p(x' | x).
struct DiscreteDomain {
    std::vector<double> density;
    Matrix conditional;

    void validate() const;
};

/// `cells` equispaced points on [-1, 1], a two-bump density and a Gaussian
/// positive-pair kernel of width `kernel_width`.
DiscreteDomain make_grid_domain(std::size_t cells, double kernel_width = 0.2);

struct CeTerms {
    double expected_ce = 0.0; // E_x H(p(.|x), q_f(.|x))
    double align = 0.0;       // L_a
    double uniform = 0.0;     // L_u
    double residual = 0.0;    // expected_ce - (align + uniform)
};

/// Exact sums over the domain with q_f(x'|x) proportional to p(x') w(f(x), f(x')),
/// w(a, b) = (1 + |a - b|^2 / (tau t_df))^(-(t_df+1)/2).
CeTerms ce_terms(const DiscreteDomain& domain, const Matrix& features, double t_df = 1.0,
                 double tau = 1.0);

/// -sum_x p(x) sum_x' p(x'|x) log p(x'); equals the residual for every f.
double ce_constant(const DiscreteDomain& domain);

struct CeCheck {
    std::vector<double> residuals;
    double spread = 0.0;
    double constant = 0.0;
};

CeCheck ce_decomposition_check(const DiscreteDomain& domain, std::span<const Matrix> features,
                               double t_df = 1.0, double tau = 1.0);

/// Result of one named verification suite.
struct SuiteResult {
    std::string name;
    bool passed = false;
    std::vector<std::string> lines; // human-readable detail, one check per line
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t trials = 0; // 0 = suite default
};

/// Suites: equivalence, theorem1, rearrangement, ce_decomposition, gradients, tammes.
std::vector<std::string> verify_suite_names();
SuiteResult run_verify_suite(const std::string& name, const VerifyOptions& options = {});

/// Max relative error between loss_grad and central differences (step 1e-4)
/// for one loss configuration, over `instances` random problems.
struct GradientCase {
    std::string name;
    double max_rel_error = 0.0;
};
std::vector<GradientCase> loss_gradient_cases(std::size_t instances, Rng& rng);

/// Four aligned positive pairs embedded on the unit sphere in R^3 by direct
/// descent on kl_match with the positive-pair P and a cosine Q. Returns the
/// largest |cos - (-1/3)| over pairs of distinct pair-class means.
struct SimplexEmbeddingResult {
    double max_deviation = 0.0;
    double final_loss = 0.0;
};
SimplexEmbeddingResult simplex_embedding_check(std::uint64_t seed);

} // namespace snecl
