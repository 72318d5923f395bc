#pragma once

#include "snecl/config.hpp"
#include "snecl/losses.hpp"
#include "snecl/mlp.hpp"
#include "snecl/optim.hpp"
#include "snecl/rng.hpp"
#include "snecl/simdata.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snecl {

enum class AugmentKind { resample, gaussian_noise, mixup };

std::string to_string(AugmentKind k);
AugmentKind parse_augment(const std::string& name);

struct Augmentation {
    AugmentKind kind = AugmentKind::resample;
    double noise_sigma = 0.1;                             // gaussian_noise
    MixupLambda mixup = MixupLambda::beta_dist(1.0, 1.0); // mixup
};

enum class OutputNorm { sphere, batchnorm, none };

std::string to_string(OutputNorm n);
OutputNorm parse_output_norm(const std::string& name);

struct TrainConfig {
    LossSpec loss;
    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::relu;
    std::size_t d_z = 2;
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    OptimizerSettings optimizer;
    Augmentation augment;
    OutputNorm normalize = OutputNorm::sphere;
    double bn_momentum = 0.1;
    bool bn_affine = false; // train gamma/beta of the output batch norm
    double tau_w = 1.0;     // infonce_weighted: IoU weighting strength
    std::uint64_t seed = 0;

    /// Throws ValidationError; t_simclr requires normalize = batchnorm.
    void validate() const;

    /// Flat key/value echo; from_kv(to_kv()) reproduces the config exactly.
    KeyValues to_kv() const;
    /// Missing keys keep their defaults. Unknown keys are ignored.
    static TrainConfig from_kv(const KeyValues& kv);
};

/// Trained feature map: MLP, optional output batch norm, output post-processing.
struct Encoder {
    MlpParams mlp;
    std::optional<BatchNormState> bn;
    OutputNorm norm = OutputNorm::sphere;

    std::size_t input_dim() const { return mlp.input_dim(); }
    std::size_t output_dim() const { return mlp.output_dim(); }

    /// f(x) row by row; batch norm runs in eval mode, sphere rows have unit norm.
    Matrix embed(const Matrix& x) const;
};

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double loss = 0.0;     // mean over the epoch's batches
    double align = 0.0;    // mean positive-pair cosine, eval-mode features
    double uniform = 0.0;  // log mean exp(-2 |u_i - u_j|^2) over unit anchors
};

struct TrainReport {
    TrainConfig config;
    std::vector<EpochStats> history;
    Encoder encoder;
    OptimizerState optimizer;
    Rng rng;
    double wall_seconds = 0.0; // not serialized
};

/// Training input: a dataset, plus the generating mixture when the
/// augmentation resamples from it.
struct TrainData {
    LabeledDataset dataset;
    std::optional<GmmSpec> gmm;
};

struct BatchStep {
    double loss = 0.0;
    std::vector<Matrix> grads; // aligned with trainable_parameters()
};

/// Weights and biases of every layer, then gamma and beta when `cfg.bn_affine`.
std::vector<Matrix*> trainable_parameters(Encoder& enc, const TrainConfig& cfg);

/// Loss of one batch of positive pairs and its gradient with respect to the
/// trainable parameters. Batch norm runs in train mode and updates its
/// running statistics.
BatchStep batch_loss_grad(Encoder& enc, const TrainConfig& cfg, const Matrix& anchors,
                          const Matrix& views, std::span<const double> weights = {});

/// Deterministic given cfg.seed. Throws NumericError naming the epoch on a
/// non-finite loss.
TrainReport train_encoder(const TrainData& data, const TrainConfig& cfg);

/// Mean cosine between rows of `a` and `b`.
double mean_pair_cosine(const Matrix& a, const Matrix& b);

/// log mean_{i<j} exp(-2 |u_i - u_j|^2) on unit-normalized rows.
double uniformity_metric(const Matrix& z);

/// Text checkpoint, first line `snecl-checkpoint <version>`. Floats are
/// written as C99 hex literals, so the round trip is bit-exact.
inline constexpr int checkpoint_version = 1;

void save_checkpoint(const TrainReport& report, const std::string& path);
void write_checkpoint(const TrainReport& report, std::ostream& os);
/// Throws FormatError on a version mismatch (naming both versions) or a
/// truncated or corrupt file.
TrainReport load_checkpoint(const std::string& path);
TrainReport read_checkpoint(std::istream& is);

/// Training log CSV: `epoch,loss,align_metric,uniform_metric`.
void write_training_log(const TrainReport& report, std::ostream& os);

} // namespace snecl
