#pragma once

#include "snecl/config.hpp"
#include "snecl/evaluation.hpp"
#include "snecl/simdata.hpp"
#include "snecl/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snecl {

/// Placement of the mixture means.
///   polygon: polygon_means(m, d, radius)
///   line:    line_means(m, d, spacing)
///   random:  entries i.i.d. N(0, 1), drawn from the data seed
enum class MeansLayout { polygon, line, random };

std::string to_string(MeansLayout l);
MeansLayout parse_means_layout(const std::string& name);

/// Mixture and sample sizes of an experiment, read from `data.*` keys.
struct DataConfig {
    MeansLayout layout = MeansLayout::polygon;
    std::size_t m = 5;
    std::size_t d = 2;
    std::size_t n = 250;      // training (reference) points
    std::size_t test_n = 250; // held-out query points
    double radius = 1.0;
    double spacing = 1.0;
    double sigma = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    GmmSpec gmm() const;
    /// Independent streams of the data seed, so train and test never overlap.
    LabeledDataset train_set() const;
    LabeledDataset test_set() const;

    KeyValues to_kv() const;
    /// `data.seed` falls back to `seed`, then to 0.
    static DataConfig from_kv(const KeyValues& kv);
};

/// Evaluation settings, read from `eval.*` keys.
struct EvalOptions {
    KnnOptions knn;
    bool knn_metric_auto = true; // cosine for sphere outputs, euclidean otherwise
    ProbeOptions probe;
    std::vector<double> shift;   // OOD mean shift; empty disables the OOD probes
    std::size_t lipschitz_pairs = 10000;
    std::uint64_t seed = 0;

    void validate() const;
    KeyValues to_kv() const;
    static EvalOptions from_kv(const KeyValues& kv);
};

KnnMetric default_knn_metric(OutputNorm norm);

/// Embeds `ref` and `query` with the encoder and fills every metric that
/// applies: KNN and probe (fit on ref, scored on query), the two OOD probes
/// when a shift is set, alignment when the mixture is known, uniformity,
/// class-mean uniformity on the sphere, the Lipschitz estimate, the order
/// check at d_z = 2 (expected cycle 0..m-1) and the class cosine heatmap.
EvalReport evaluate_encoder(const Encoder& encoder, const LabeledDataset& ref,
                            const LabeledDataset& query, const std::optional<GmmSpec>& gmm,
                            const EvalOptions& options);

} // namespace snecl
