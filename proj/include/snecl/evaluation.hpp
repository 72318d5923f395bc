#pragma once

#include "snecl/config.hpp"
#include "snecl/embedopt.hpp"
#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snecl {

enum class KnnWeighting { uniform, cosine_weighted };
enum class KnnMetric { cosine, euclidean };

std::string to_string(KnnWeighting w);
KnnWeighting parse_knn_weighting(const std::string& name);
std::string to_string(KnnMetric m);
KnnMetric parse_knn_metric(const std::string& name);

struct KnnOptions {
    std::size_t k = 15;
    KnnWeighting weighting = KnnWeighting::cosine_weighted;
    KnnMetric metric = KnnMetric::cosine;
    double vote_temperature = 0.07; // cosine_weighted votes are exp(cos / T)
};

struct Classification {
    std::vector<int> predictions;
    double accuracy = 0.0; // 0 when no query labels are given
};

/// Neighbours are the k most similar references (cosine) or the k closest
/// (euclidean); ties in rank go to the lower reference index. Each neighbour
/// votes 1 (uniform) or exp(cos / T) (cosine_weighted); vote ties go to the
/// lowest class index.
Classification knn_classify(const Matrix& ref_z, std::span<const int> ref_y, const Matrix& query_z,
                            std::span<const int> query_y, const KnnOptions& options = {});

struct ProbeOptions {
    std::size_t epochs = 500;
    double lr = 0.1;
    bool standardize = true; // z-score features with training statistics
};

/// Multinomial logistic regression on frozen features: zero init, full-batch
/// gradient descent, no regularization. Returns test accuracy.
double linear_probe(const Matrix& train_z, std::span<const int> train_y, const Matrix& test_z,
                    std::span<const int> test_y, const ProbeOptions& options = {});

struct LipschitzEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t pairs = 0;
};

using EmbedFn = std::function<Matrix(const Matrix&)>;

/// Monte Carlo mean of |f(x) - f(x')| / |x - x'| over independent pairs of
/// rows of `x`; pairs of identical points are redrawn.
LipschitzEstimate lipschitz_estimate(const EmbedFn& f, const Matrix& x, std::size_t pair_count,
                                     Rng& rng);

enum class OrderVerdict { match, reverse_match, mismatch };
enum class OrderCenter { origin, centroid };

std::string to_string(OrderVerdict v);

/// Angular order of 2-D class means around the origin or their centroid,
/// compared cyclically with `expected` up to rotation and reflection.
OrderVerdict order_cycle_check(const Matrix& z, std::span<const int> labels,
                               std::span<const int> expected, OrderCenter center);

/// Per class, the mean of the rows with that label (classes 0..m-1, all nonempty).
Matrix class_means(const Matrix& z, std::span<const int> labels);

/// Entry (a, b): mean cosine over all pairs (feature of class a, feature of
/// class b), including i = j pairs on the diagonal.
Matrix class_cosine_heatmap(const Matrix& z, std::span<const int> labels);

struct EvalReport {
    std::optional<double> knn_accuracy;
    std::optional<double> probe_accuracy;
    std::optional<double> ood_probe_accuracy;           // probe fit in-distribution, tested shifted
    std::optional<double> ood_retrained_probe_accuracy; // probe refit on shifted features
    std::optional<double> align;
    std::optional<double> uniformity;
    std::optional<UniformityScore> class_mean_uniformity;
    std::optional<LipschitzEstimate> lipschitz;
    std::optional<OrderVerdict> order;
    Matrix heatmap;

    /// `key = value` text; keys are documented in the README.
    KeyValues to_kv() const;
};

/// Heatmap CSV: header `class,c0,...,c{m-1}` then one row per class.
void write_heatmap_csv(std::ostream& os, const Matrix& heatmap);

} // namespace snecl
