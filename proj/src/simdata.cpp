#include "snecl/simdata.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace snecl {

void GmmSpec::validate() const {
    detail::require(means.rows() >= 1, "GMM needs at least one component");
    detail::require(means.cols() >= 1, "GMM dimension must be >= 1");
    detail::require(sigma > 0.0 && std::isfinite(sigma), "GMM sigma must be positive");
    require_finite(means, "GMM means");
}

Matrix polygon_means(std::size_t m, std::size_t d, double radius) {
    detail::require(m >= 1, "polygon_means: m must be >= 1");
    detail::require(d >= 2, "polygon_means: needs d >= 2");
    Matrix means = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < m; ++c) {
        const double angle =
            std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(c) / m;
        means(static_cast<Eigen::Index>(c), 0) = radius * std::cos(angle);
        means(static_cast<Eigen::Index>(c), 1) = radius * std::sin(angle);
    }
    return means;
}

Matrix line_means(std::size_t m, std::size_t d, double spacing) {
    detail::require(m >= 1 && d >= 1, "line_means: m and d must be >= 1");
    Matrix means = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < m; ++c) {
        means(static_cast<Eigen::Index>(c), 0) = spacing * static_cast<double>(c + 1);
    }
    return means;
}

std::size_t LabeledDataset::num_classes() const {
    if (labels.empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

void LabeledDataset::validate(std::size_t classes) const {
    detail::require(x.rows() >= 1, "dataset is empty");
    detail::require(labels.size() == size(), "dataset: label count differs from row count");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const bool ok = y >= 0 && (classes == 0 || static_cast<std::size_t>(y) < classes);
        if (!ok) {
            throw ValidationError("dataset: label " + std::to_string(y) + " at row " +
                                  std::to_string(i) + " is out of range");
        }
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        detail::require(rows[r] < size(), "dataset subset: row index out of range");
        out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
        out.labels.push_back(labels[rows[r]]);
    }
    return out;
}

void PairBatch::validate() const {
    require_shape(views, anchors.rows(), anchors.cols(), "pair views");
    detail::require(weights.size() == size(), "pair weights length differs from batch size");
    for (double w : weights) {
        detail::require(std::isfinite(w) && w >= 0.0, "pair weights must be finite and >= 0");
    }
}

void CropBox::validate() const {
    detail::require(x0 < x1 && y0 < y1, "crop box must have positive area");
    detail::require(x0 >= 0.0 && y0 >= 0.0 && x1 <= 1.0 && y1 <= 1.0,
                    "crop box must lie inside the unit square");
}

MixupLambda MixupLambda::constant(double lambda) {
    MixupLambda l;
    l.fixed = true;
    l.value = lambda;
    l.validate();
    return l;
}

MixupLambda MixupLambda::beta_dist(double alpha, double beta) {
    MixupLambda l;
    l.fixed = false;
    l.alpha = alpha;
    l.beta = beta;
    l.validate();
    return l;
}

void MixupLambda::validate() const {
    if (fixed) {
        detail::require(value > 0.0 && value < 1.0, "mixup lambda must lie in (0, 1)");
    } else {
        detail::require(alpha > 0.0 && beta > 0.0, "mixup Beta parameters must be positive");
    }
}

double MixupLambda::sample(Rng& rng) const {
    if (fixed) return value;
    // Beta draws can round to the closed endpoints; keep lambda strictly inside (0, 1).
    return std::clamp(rng.beta(alpha, beta), 1e-12, 1.0 - 1e-12);
}

std::string MixupLambda::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (fixed) {
        os << "fixed:" << value;
    } else {
        os << "beta:" << alpha << ":" << beta;
    }
    return os.str();
}

MixupLambda MixupLambda::parse(const std::string& text) {
    try {
        if (text.rfind("fixed:", 0) == 0) return constant(std::stod(text.substr(6)));
        if (text.rfind("beta:", 0) == 0) {
            const auto rest = text.substr(5);
            const auto colon = rest.find(':');
            if (colon == std::string::npos) throw ValidationError("missing ':'");
            return beta_dist(std::stod(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
        }
    } catch (const std::logic_error&) {
        // fall through to the uniform error below
    }
    throw ValidationError("mixup lambda must be 'fixed:<l>' or 'beta:<a>:<b>', got '" + text + "'");
}

LabeledDataset gmm_sample(const GmmSpec& spec, std::size_t n, Rng& rng) {
    spec.validate();
    detail::require(n >= 1, "gmm_sample: n must be >= 1");
    const auto d = static_cast<Eigen::Index>(spec.dim());
    LabeledDataset data;
    data.x.resize(static_cast<Eigen::Index>(n), d);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(rng.index(spec.components()));
        data.labels[i] = static_cast<int>(c);
        for (Eigen::Index j = 0; j < d; ++j) {
            data.x(static_cast<Eigen::Index>(i), j) = spec.means(c, j) + spec.sigma * rng.normal();
        }
    }
    return data;
}

PairBatch augment_resample(const GmmSpec& spec, const LabeledDataset& data, Rng& rng) {
    spec.validate();
    data.validate(spec.components());
    detail::require(data.dim() == spec.dim(), "augment_resample: dataset/GMM dimension mismatch");
    PairBatch batch;
    batch.anchors = data.x;
    batch.views.resize(data.x.rows(), data.x.cols());
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        const Eigen::Index c = data.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
            batch.views(i, j) = spec.means(c, j) + spec.sigma * rng.normal();
        }
    }
    batch.weights.assign(data.size(), 1.0);
    return batch;
}

PairBatch augment_gaussian_noise(const LabeledDataset& data, double sigma_noise, Rng& rng) {
    detail::require(sigma_noise > 0.0, "augment_gaussian_noise: sigma must be positive");
    PairBatch batch;
    batch.anchors = data.x;
    batch.views = data.x;
    for (Eigen::Index i = 0; i < batch.views.size(); ++i) {
        batch.views.data()[i] += sigma_noise * rng.normal();
    }
    batch.weights.assign(data.size(), 1.0);
    return batch;
}

PairBatch augment_mixup(const LabeledDataset& data, const MixupLambda& lambda, Rng& rng) {
    lambda.validate();
    const std::size_t n = data.size();
    detail::require(n >= 2, "augment_mixup: needs at least two points");
    PairBatch batch;
    batch.anchors = data.x;
    batch.views.resize(data.x.rows(), data.x.cols());
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = rng.index(n - 1);
        if (j >= i) ++j;
        const double l = lambda.sample(rng);
        const auto ri = static_cast<Eigen::Index>(i);
        const auto rj = static_cast<Eigen::Index>(j);
        batch.views.row(ri) = data.x.row(ri) + l * (data.x.row(rj) - data.x.row(ri));
    }
    batch.weights.assign(n, 1.0);
    return batch;
}

LabeledDataset mean_shift(const LabeledDataset& data, std::span<const double> delta) {
    detail::require(delta.size() == data.dim(),
                    "mean_shift: shift has length " + std::to_string(delta.size()) +
                        ", data dimension is " + std::to_string(data.dim()));
    LabeledDataset out = data;
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
        out.x.col(j).array() += delta[static_cast<std::size_t>(j)];
    }
    return out;
}

void CropSampling::validate() const {
    detail::require(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0,
                    "crop scale range must satisfy 0 < min <= max <= 1");
    detail::require(aspect_min > 0.0 && aspect_min <= aspect_max, "invalid crop aspect range");
}

namespace {

CropBox sample_crop(Rng& rng, const CropSampling& s) {
    const double area = rng.uniform(s.scale_min, s.scale_max);
    const double log_lo = std::log(s.aspect_min);
    const double log_hi = std::log(s.aspect_max);
    double w = 0.0;
    double h = 0.0;
    bool placed = false;
    for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
        const double aspect = std::exp(rng.uniform(log_lo, log_hi));
        w = std::sqrt(area * aspect);
        h = std::sqrt(area / aspect);
        placed = w <= 1.0 && h <= 1.0;
    }
    if (!placed) {
        w = std::sqrt(area);
        h = w;
    }
    const double x0 = rng.uniform(0.0, 1.0 - w);
    const double y0 = rng.uniform(0.0, 1.0 - h);
    return CropBox{x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)};
}

} // namespace

std::pair<CropBox, CropBox> sample_crop_pair(Rng& rng, const CropSampling& sampling) {
    sampling.validate();
    CropBox a = sample_crop(rng, sampling);
    CropBox b = sample_crop(rng, sampling);
    return {a, b};
}

double iou(const CropBox& a, const CropBox& b) {
    a.validate();
    b.validate();
    const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

} // namespace snecl
