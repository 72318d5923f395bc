#include "snecl/experiment.hpp"

#include "snecl/embedopt.hpp"
#include "snecl/error.hpp"
#include "snecl/matrix.hpp"

#include <numeric>
#include <set>

namespace snecl {

namespace {

// Streams of the data seed; fixed so datasets stay stable across releases.
constexpr std::uint64_t train_stream = 1;
constexpr std::uint64_t test_stream = 2;
constexpr std::uint64_t means_stream = 3;
constexpr std::uint64_t align_stream = 4;
constexpr std::uint64_t lipschitz_stream = 5;

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

bool all_classes_present(std::span<const int> labels, std::size_t m) {
    const std::set<int> seen(labels.begin(), labels.end());
    return seen.size() == m;
}

} // namespace

std::string to_string(MeansLayout l) {
    switch (l) {
    case MeansLayout::polygon: return "polygon";
    case MeansLayout::line: return "line";
    case MeansLayout::random: return "random";
    }
    return "polygon";
}

MeansLayout parse_means_layout(const std::string& name) {
    if (name == "polygon") return MeansLayout::polygon;
    if (name == "line") return MeansLayout::line;
    if (name == "random") return MeansLayout::random;
    throw ValidationError("unknown data.layout '" + name + "' (expected polygon, line or random)");
}

void DataConfig::validate() const {
    detail::require(m >= 1, "data.m must be at least 1");
    detail::require(d >= 1, "data.d must be at least 1");
    detail::require(layout != MeansLayout::polygon || d >= 2, "data.layout = polygon needs data.d >= 2");
    detail::require(n >= 1 && test_n >= 1, "data.n and data.test_n must be at least 1");
    detail::require(sigma > 0, "data.sigma must be positive");
}

GmmSpec DataConfig::gmm() const {
    validate();
    GmmSpec g;
    g.sigma = sigma;
    switch (layout) {
    case MeansLayout::polygon: g.means = polygon_means(m, d, radius); break;
    case MeansLayout::line: g.means = line_means(m, d, spacing); break;
    case MeansLayout::random: {
        Rng rng = Rng(seed).split(means_stream);
        g.means = Matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < g.means.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.means.cols(); ++j) g.means(i, j) = rng.normal();
        }
        break;
    }
    }
    return g;
}

LabeledDataset DataConfig::train_set() const {
    Rng rng = Rng(seed).split(train_stream);
    return gmm_sample(gmm(), n, rng);
}

LabeledDataset DataConfig::test_set() const {
    Rng rng = Rng(seed).split(test_stream);
    return gmm_sample(gmm(), test_n, rng);
}

KeyValues DataConfig::to_kv() const {
    KeyValues kv;
    kv.set("data.layout", to_string(layout));
    kv.set("data.m", static_cast<std::int64_t>(m));
    kv.set("data.d", static_cast<std::int64_t>(d));
    kv.set("data.n", static_cast<std::int64_t>(n));
    kv.set("data.test_n", static_cast<std::int64_t>(test_n));
    kv.set("data.radius", radius);
    kv.set("data.spacing", spacing);
    kv.set("data.sigma", sigma);
    kv.set("data.seed", std::to_string(seed));
    return kv;
}

DataConfig DataConfig::from_kv(const KeyValues& kv) {
    DataConfig c;
    c.layout = parse_means_layout(kv.get_string("data.layout", to_string(c.layout)));
    c.m = kv.get_count("data.m", c.m);
    c.d = kv.get_count("data.d", c.d);
    c.n = kv.get_count("data.n", c.n);
    c.test_n = kv.get_count("data.test_n", c.test_n);
    c.radius = kv.get_double("data.radius", c.radius);
    c.spacing = kv.get_double("data.spacing", c.spacing);
    c.sigma = kv.get_double("data.sigma", c.sigma);
    c.seed = kv.get_u64("data.seed", kv.get_u64("seed", c.seed));
    c.validate();
    return c;
}

void EvalOptions::validate() const {
    detail::require(knn.k >= 1, "eval.k must be at least 1");
    detail::require(knn.vote_temperature > 0, "eval.vote_temperature must be positive");
    detail::require(probe.epochs >= 1, "eval.probe_epochs must be at least 1");
    detail::require(probe.lr > 0, "eval.probe_lr must be positive");
}

KeyValues EvalOptions::to_kv() const {
    KeyValues kv;
    kv.set("eval.k", static_cast<std::int64_t>(knn.k));
    kv.set("eval.knn_weighting", to_string(knn.weighting));
    kv.set("eval.knn_metric", knn_metric_auto ? std::string("auto") : to_string(knn.metric));
    kv.set("eval.vote_temperature", knn.vote_temperature);
    kv.set("eval.probe_epochs", static_cast<std::int64_t>(probe.epochs));
    kv.set("eval.probe_lr", probe.lr);
    kv.set("eval.probe_standardize", std::string(probe.standardize ? "true" : "false"));
    kv.set("eval.shift", join_doubles(shift));
    kv.set("eval.lipschitz_pairs", static_cast<std::int64_t>(lipschitz_pairs));
    kv.set("eval.seed", std::to_string(seed));
    return kv;
}

EvalOptions EvalOptions::from_kv(const KeyValues& kv) {
    EvalOptions o;
    o.knn.k = kv.get_count("eval.k", o.knn.k);
    o.knn.weighting = parse_knn_weighting(kv.get_string("eval.knn_weighting", to_string(o.knn.weighting)));
    const std::string metric = kv.get_string("eval.knn_metric", "auto");
    o.knn_metric_auto = metric == "auto";
    if (!o.knn_metric_auto) o.knn.metric = parse_knn_metric(metric);
    o.knn.vote_temperature = kv.get_double("eval.vote_temperature", o.knn.vote_temperature);
    o.probe.epochs = kv.get_count("eval.probe_epochs", o.probe.epochs);
    o.probe.lr = kv.get_double("eval.probe_lr", o.probe.lr);
    o.probe.standardize = kv.get_bool("eval.probe_standardize", o.probe.standardize);
    for (const auto& item : kv.get_list("eval.shift")) {
        KeyValues one;
        one.set("eval.shift", item);
        o.shift.push_back(one.get_double("eval.shift", 0.0));
    }
    o.lipschitz_pairs = kv.get_count("eval.lipschitz_pairs", o.lipschitz_pairs);
    o.seed = kv.get_u64("eval.seed", kv.get_u64("seed", o.seed));
    o.validate();
    return o;
}

KnnMetric default_knn_metric(OutputNorm norm) {
    return norm == OutputNorm::sphere ? KnnMetric::cosine : KnnMetric::euclidean;
}

EvalReport evaluate_encoder(const Encoder& encoder, const LabeledDataset& ref,
                            const LabeledDataset& query, const std::optional<GmmSpec>& gmm,
                            const EvalOptions& options) {
    options.validate();
    detail::require(ref.dim() == encoder.input_dim() && query.dim() == encoder.input_dim(),
                    "eval: data dimension " + std::to_string(query.dim()) +
                        " does not match the encoder input dimension " +
                        std::to_string(encoder.input_dim()));
    const std::size_t m = std::max(ref.num_classes(), query.num_classes());

    EvalReport report;
    const Matrix z_ref = encoder.embed(ref.x);
    const Matrix z_query = encoder.embed(query.x);

    KnnOptions knn = options.knn;
    if (options.knn_metric_auto) knn.metric = default_knn_metric(encoder.norm);
    report.knn_accuracy = knn_classify(z_ref, ref.labels, z_query, query.labels, knn).accuracy;
    report.probe_accuracy = linear_probe(z_ref, ref.labels, z_query, query.labels, options.probe);

    if (!options.shift.empty()) {
        detail::require(options.shift.size() == query.dim(),
                        "eval.shift must list one offset per data dimension");
        const LabeledDataset ref_shift = mean_shift(ref, options.shift);
        const LabeledDataset query_shift = mean_shift(query, options.shift);
        const Matrix zq_shift = encoder.embed(query_shift.x);
        report.ood_probe_accuracy =
            linear_probe(z_ref, ref.labels, zq_shift, query_shift.labels, options.probe);
        report.ood_retrained_probe_accuracy = linear_probe(
            encoder.embed(ref_shift.x), ref_shift.labels, zq_shift, query_shift.labels, options.probe);
    }

    if (gmm) {
        Rng rng = Rng(options.seed).split(align_stream);
        const PairBatch pairs = augment_resample(*gmm, query, rng);
        report.align = mean_pair_cosine(encoder.embed(pairs.anchors), encoder.embed(pairs.views));
    }
    if (query.size() >= 2) report.uniformity = uniformity_metric(z_query);

    const bool complete = all_classes_present(query.labels, m);
    if (complete && encoder.norm == OutputNorm::sphere && m >= 2) {
        report.class_mean_uniformity = uniformity_score(normalize_rows(class_means(z_query, query.labels)));
    }
    if (options.lipschitz_pairs > 0 && query.size() >= 2) {
        Rng rng = Rng(options.seed).split(lipschitz_stream);
        report.lipschitz = lipschitz_estimate([&](const Matrix& x) { return encoder.embed(x); }, query.x,
                                              options.lipschitz_pairs, rng);
    }
    if (complete && encoder.output_dim() == 2 && m >= 3) {
        std::vector<int> expected(m);
        std::iota(expected.begin(), expected.end(), 0);
        const OrderCenter center =
            encoder.norm == OutputNorm::sphere ? OrderCenter::origin : OrderCenter::centroid;
        report.order = order_cycle_check(z_query, query.labels, expected, center);
    }
    if (complete) report.heatmap = class_cosine_heatmap(z_query, query.labels);
    return report;
}

} // namespace snecl
