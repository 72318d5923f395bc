#include "snecl/evaluation.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace snecl {

std::string to_string(KnnWeighting w) {
    return w == KnnWeighting::uniform ? "uniform" : "cosine_weighted";
}

KnnWeighting parse_knn_weighting(const std::string& name) {
    if (name == "uniform") return KnnWeighting::uniform;
    if (name == "cosine_weighted" || name == "cosine") return KnnWeighting::cosine_weighted;
    throw ValidationError("unknown KNN weighting '" + name + "'");
}

std::string to_string(KnnMetric m) {
    return m == KnnMetric::cosine ? "cosine" : "euclidean";
}

KnnMetric parse_knn_metric(const std::string& name) {
    if (name == "cosine") return KnnMetric::cosine;
    if (name == "euclidean") return KnnMetric::euclidean;
    throw ValidationError("unknown KNN metric '" + name + "'");
}

namespace {

int num_classes(std::span<const int> y) {
    int m = 0;
    for (int v : y) {
        detail::require(v >= 0, "labels must be non-negative");
        m = std::max(m, v + 1);
    }
    return m;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

} // namespace

Classification knn_classify(const Matrix& ref_z, std::span<const int> ref_y, const Matrix& query_z,
                            std::span<const int> query_y, const KnnOptions& options) {
    const auto n_ref = static_cast<std::size_t>(ref_z.rows());
    detail::require(n_ref >= 1, "knn: empty reference set");
    detail::require(ref_y.size() == n_ref, "knn: reference labels differ in length from features");
    detail::require(options.k >= 1 && options.k <= n_ref, "knn: k must be in [1, reference size]");
    detail::require(query_z.cols() == ref_z.cols(), "knn: query and reference dimensions differ");
    detail::require(query_y.empty() || query_y.size() == static_cast<std::size_t>(query_z.rows()),
                    "knn: query labels differ in length from features");
    detail::require(options.vote_temperature > 0.0, "knn: vote temperature must be > 0");
    const int m = num_classes(ref_y);

    const Matrix ref_u = normalize_rows(ref_z);
    const Matrix query_u = normalize_rows(query_z);
    Classification out;
    std::vector<std::size_t> idx(n_ref);
    std::vector<double> score(n_ref);
    std::vector<double> cosine(n_ref);
    std::vector<double> votes(static_cast<std::size_t>(m));
    for (Eigen::Index q = 0; q < query_z.rows(); ++q) {
        for (std::size_t r = 0; r < n_ref; ++r) {
            const auto ri = static_cast<Eigen::Index>(r);
            cosine[r] = query_u.row(q).dot(ref_u.row(ri));
            // Larger score = nearer.
            score[r] = options.metric == KnnMetric::cosine
                           ? cosine[r]
                           : -(query_z.row(q) - ref_z.row(ri)).squaredNorm();
        }
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(options.k),
                          idx.end(), [&](std::size_t a, std::size_t b) {
                              return score[a] > score[b] || (score[a] == score[b] && a < b);
                          });
        std::fill(votes.begin(), votes.end(), 0.0);
        for (std::size_t j = 0; j < options.k; ++j) {
            const std::size_t r = idx[j];
            const double w = options.weighting == KnnWeighting::uniform
                                 ? 1.0
                                 : std::exp(cosine[r] / options.vote_temperature);
            votes[static_cast<std::size_t>(ref_y[r])] += w;
        }
        // max_element returns the first maximum, i.e. the lowest class.
        out.predictions.push_back(
            static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
    }
    out.accuracy = accuracy(out.predictions, query_y);
    return out;
}

double linear_probe(const Matrix& train_z, std::span<const int> train_y, const Matrix& test_z,
                    std::span<const int> test_y, const ProbeOptions& options) {
    detail::require(train_z.rows() >= 1, "probe: empty training set");
    detail::require(train_y.size() == static_cast<std::size_t>(train_z.rows()),
                    "probe: training labels differ in length from features");
    detail::require(test_y.size() == static_cast<std::size_t>(test_z.rows()),
                    "probe: test labels differ in length from features");
    detail::require(test_z.cols() == train_z.cols(), "probe: train and test dimensions differ");
    detail::require(options.epochs >= 1 && options.lr > 0.0, "probe: epochs and lr must be positive");
    const int m = std::max(num_classes(train_y), num_classes(test_y));
    detail::require(m >= 2, "probe: needs at least two classes");

    RowVector shift = RowVector::Zero(train_z.cols());
    RowVector scale = RowVector::Ones(train_z.cols());
    if (options.standardize) {
        shift = train_z.colwise().mean();
        const Matrix centered = train_z.rowwise() - shift;
        for (Eigen::Index j = 0; j < train_z.cols(); ++j) {
            const double sd = std::sqrt(centered.col(j).squaredNorm() / train_z.rows());
            scale(j) = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
    }
    auto prepare = [&](const Matrix& z) {
        Matrix out(z.rows(), z.cols() + 1);
        out.leftCols(z.cols()) = ((z.rowwise() - shift).array().rowwise() * scale.array()).matrix();
        out.col(z.cols()).setOnes();
        return out;
    };
    const Matrix xtr = prepare(train_z);
    const Matrix xte = prepare(test_z);

    Matrix onehot = Matrix::Zero(xtr.rows(), m);
    for (Eigen::Index i = 0; i < xtr.rows(); ++i) onehot(i, train_y[static_cast<std::size_t>(i)]) = 1.0;

    Matrix w = Matrix::Zero(xtr.cols(), m);
    const double inv_n = 1.0 / static_cast<double>(xtr.rows());
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        Matrix logits = xtr * w;
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            const double mx = logits.row(i).maxCoeff();
            logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
            logits.row(i) /= logits.row(i).sum();
        }
        w -= options.lr * inv_n * (xtr.transpose() * (logits - onehot));
    }
    require_finite(w, "probe weights");

    const Matrix scores = xte * w;
    std::vector<int> pred(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        pred[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return accuracy(pred, test_y);
}

LipschitzEstimate lipschitz_estimate(const EmbedFn& f, const Matrix& x, std::size_t pair_count,
                                     Rng& rng) {
    detail::require(pair_count >= 2, "lipschitz: needs at least two pairs");
    detail::require(x.rows() >= 2, "lipschitz: needs at least two points");
    bool distinct = false;
    for (Eigen::Index i = 1; i < x.rows() && !distinct; ++i) distinct = x.row(i) != x.row(0);
    detail::require(distinct, "lipschitz: all points are identical");

    const Matrix z = f(x);
    detail::require(z.rows() == x.rows(), "lipschitz: embedding changed the number of rows");
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> ratios;
    ratios.reserve(pair_count);
    while (ratios.size() < pair_count) {
        const auto i = static_cast<Eigen::Index>(rng.index(n));
        const auto j = static_cast<Eigen::Index>(rng.index(n));
        const double dx = (x.row(i) - x.row(j)).norm();
        if (dx == 0.0) continue;
        ratios.push_back((z.row(i) - z.row(j)).norm() / dx);
    }
    LipschitzEstimate est;
    est.pairs = ratios.size();
    est.mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(est.pairs);
    double ss = 0.0;
    for (double r : ratios) ss += (r - est.mean) * (r - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(est.pairs - 1) / static_cast<double>(est.pairs));
    return est;
}

std::string to_string(OrderVerdict v) {
    switch (v) {
    case OrderVerdict::match: return "match";
    case OrderVerdict::reverse_match: return "reverse_match";
    case OrderVerdict::mismatch: return "mismatch";
    }
    return "mismatch";
}

Matrix class_means(const Matrix& z, std::span<const int> labels) {
    detail::require(labels.size() == static_cast<std::size_t>(z.rows()),
                    "class_means: label count differs from row count");
    const int m = num_classes(labels);
    Matrix means = Matrix::Zero(m, z.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        means.row(c) += z.row(i);
        ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < m; ++c) {
        detail::require(counts[static_cast<std::size_t>(c)] > 0,
                        "class " + std::to_string(c) + " has no samples");
        means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    return means;
}

OrderVerdict order_cycle_check(const Matrix& z, std::span<const int> labels,
                               std::span<const int> expected, OrderCenter center) {
    detail::require(z.cols() == 2, "order check: features must be 2-D");
    Matrix means = class_means(z, labels);
    const auto m = static_cast<std::size_t>(means.rows());
    detail::require(m >= 3, "order check: needs at least three classes");
    detail::require(expected.size() == m, "order check: expected order must list every class once");
    std::vector<int> seen(m, 0);
    for (int c : expected) {
        detail::require(c >= 0 && static_cast<std::size_t>(c) < m && seen[static_cast<std::size_t>(c)]++ == 0,
                        "order check: expected order must be a permutation of the classes");
    }
    if (center == OrderCenter::centroid) means.rowwise() -= means.colwise().mean();
    for (std::size_t a = 0; a < m; ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        detail::require(means.row(ai).norm() > 1e-12, "order check: a class mean sits at the center");
        for (std::size_t b = a + 1; b < m; ++b) {
            detail::require((means.row(ai) - means.row(static_cast<Eigen::Index>(b))).norm() > 1e-12,
                            "order check: class means " + std::to_string(a) + " and " +
                                std::to_string(b) + " coincide");
        }
    }

    std::vector<int> observed(m);
    std::iota(observed.begin(), observed.end(), 0);
    std::vector<double> angle(m);
    for (std::size_t c = 0; c < m; ++c) {
        angle[c] = std::atan2(means(static_cast<Eigen::Index>(c), 1), means(static_cast<Eigen::Index>(c), 0));
    }
    std::sort(observed.begin(), observed.end(),
              [&](int a, int b) { return angle[static_cast<std::size_t>(a)] < angle[static_cast<std::size_t>(b)]; });

    auto cyclic_equal = [&](const std::vector<int>& seq) {
        for (std::size_t shift = 0; shift < m; ++shift) {
            bool ok = true;
            for (std::size_t i = 0; i < m && ok; ++i) ok = seq[(i + shift) % m] == expected[i];
            if (ok) return true;
        }
        return false;
    };
    if (cyclic_equal(observed)) return OrderVerdict::match;
    std::reverse(observed.begin(), observed.end());
    if (cyclic_equal(observed)) return OrderVerdict::reverse_match;
    return OrderVerdict::mismatch;
}

Matrix class_cosine_heatmap(const Matrix& z, std::span<const int> labels) {
    // Mean of pairwise cosines = dot product of the class means of unit vectors.
    const Matrix means = class_means(normalize_rows(z), labels);
    Matrix h = means * means.transpose();
    h = (0.5 * (h + h.transpose())).cwiseMax(-1.0).cwiseMin(1.0);
    return h;
}

KeyValues EvalReport::to_kv() const {
    KeyValues kv;
    if (knn_accuracy) kv.set("knn_accuracy", *knn_accuracy);
    if (probe_accuracy) kv.set("probe_accuracy", *probe_accuracy);
    if (ood_probe_accuracy) kv.set("ood_probe_accuracy", *ood_probe_accuracy);
    if (ood_retrained_probe_accuracy) kv.set("ood_retrained_probe_accuracy", *ood_retrained_probe_accuracy);
    if (align) kv.set("align", *align);
    if (uniformity) kv.set("uniformity", *uniformity);
    if (class_mean_uniformity) {
        kv.set("class_mean_min_angle_deg", class_mean_uniformity->min_angle_deg);
        kv.set("class_mean_simplex_deviation", class_mean_uniformity->simplex_deviation);
    }
    if (lipschitz) {
        kv.set("lipschitz_mean", lipschitz->mean);
        kv.set("lipschitz_std_error", lipschitz->std_error);
        kv.set("lipschitz_pairs", static_cast<std::int64_t>(lipschitz->pairs));
    }
    if (order) kv.set("order", to_string(*order));
    if (heatmap.size() > 0) kv.set("heatmap_classes", static_cast<std::int64_t>(heatmap.rows()));
    return kv;
}

void write_heatmap_csv(std::ostream& os, const Matrix& heatmap) {
    os << "class";
    for (Eigen::Index j = 0; j < heatmap.cols(); ++j) os << ",c" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < heatmap.rows(); ++i) {
        os << i;
        for (Eigen::Index j = 0; j < heatmap.cols(); ++j) os << ',' << format_double(heatmap(i, j));
        os << '\n';
    }
}

} // namespace snecl
