#pragma once

#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace snecl {

/// Equal-weight isotropic Gaussian mixture (1/m) sum_c N(mu_c, sigma^2 I).
struct GmmSpec {
    Matrix means; // m x d
    double sigma = 1.0;

    std::size_t components() const { return static_cast<std::size_t>(means.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
    void validate() const;
};

/// m means on a circle of `radius` in the first two coordinates of R^d
/// (mean c at angle 90 + 360 c / m degrees). Requires d >= 2.
Matrix polygon_means(std::size_t m, std::size_t d, double radius);

/// mu_c = (c + 1) * spacing along the first axis of R^d, c = 0..m-1.
Matrix line_means(std::size_t m, std::size_t d, double spacing);

struct LabeledDataset {
    Matrix x;
    std::vector<int> labels;

    std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
    /// 1 + largest label.
    std::size_t num_classes() const;
    /// Throws unless labels match rows and lie in [0, classes) (when classes > 0).
    void validate(std::size_t classes = 0) const;
    LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Positive pairs (x_i, x_i') with optional per-pair weights p_{ii'}.
struct PairBatch {
    Matrix anchors;
    Matrix views;
    std::vector<double> weights;

    std::size_t size() const { return static_cast<std::size_t>(anchors.rows()); }
    void validate() const;
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1] inside the unit square.
struct CropBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    void validate() const;
    friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Mixing coefficient distribution: a fixed lambda or Beta(alpha, beta).
struct MixupLambda {
    bool fixed = false;
    double value = 0.5;
    double alpha = 1.0;
    double beta = 1.0;

    static MixupLambda constant(double lambda);
    static MixupLambda beta_dist(double alpha, double beta);
    double sample(Rng& rng) const;
    void validate() const;
    std::string describe() const;
    static MixupLambda parse(const std::string& text);
};

/// Draws n points; each picks a component uniformly, then x ~ N(mu_c, sigma^2 I).
LabeledDataset gmm_sample(const GmmSpec& spec, std::size_t n, Rng& rng);

/// view_i drawn fresh from the anchor's component, independent of the anchor.
PairBatch augment_resample(const GmmSpec& spec, const LabeledDataset& data, Rng& rng);

/// view_i = x_i + delta, delta ~ N(0, sigma_noise^2 I).
PairBatch augment_gaussian_noise(const LabeledDataset& data, double sigma_noise, Rng& rng);

/// view_i = x_i + lambda (x_j - x_i), partner j uniform over the other rows.
PairBatch augment_mixup(const LabeledDataset& data, const MixupLambda& lambda, Rng& rng);

/// Translates every point by `delta`; labels unchanged.
LabeledDataset mean_shift(const LabeledDataset& data, std::span<const double> delta);

struct CropSampling {
    double scale_min = 0.2;
    double scale_max = 1.0;
    double aspect_min = 3.0 / 4.0;
    double aspect_max = 4.0 / 3.0;
    void validate() const;
};

/// Two independent random-resized-crop style boxes.
std::pair<CropBox, CropBox> sample_crop_pair(Rng& rng, const CropSampling& sampling = {});

/// Intersection over union; 0 for disjoint boxes.
double iou(const CropBox& a, const CropBox& b);

} // namespace snecl
