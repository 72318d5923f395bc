#include "snecl/trainer.hpp"

#include "snecl/error.hpp"
#include "snecl/similarity.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace snecl {

std::string to_string(AugmentKind k) {
    switch (k) {
    case AugmentKind::resample: return "resample";
    case AugmentKind::gaussian_noise: return "gaussian_noise";
    case AugmentKind::mixup: return "mixup";
    }
    return "resample";
}

AugmentKind parse_augment(const std::string& name) {
    if (name == "resample") return AugmentKind::resample;
    if (name == "gaussian_noise" || name == "noise") return AugmentKind::gaussian_noise;
    if (name == "mixup") return AugmentKind::mixup;
    throw ValidationError("unknown augmentation '" + name + "'");
}

std::string to_string(OutputNorm n) {
    switch (n) {
    case OutputNorm::sphere: return "sphere";
    case OutputNorm::batchnorm: return "batchnorm";
    case OutputNorm::none: return "none";
    }
    return "sphere";
}

OutputNorm parse_output_norm(const std::string& name) {
    if (name == "sphere") return OutputNorm::sphere;
    if (name == "batchnorm") return OutputNorm::batchnorm;
    if (name == "none") return OutputNorm::none;
    throw ValidationError("unknown output normalization '" + name + "'");
}

void TrainConfig::validate() const {
    loss.validate();
    optimizer.validate();
    detail::require(d_z >= 1, "train: d_z must be >= 1");
    detail::require(epochs >= 1, "train: epochs must be >= 1");
    detail::require(batch_size >= 2, "train: batch_size must be >= 2");
    for (std::size_t w : hidden) detail::require(w >= 1, "train: hidden widths must be >= 1");
    detail::require(bn_momentum > 0.0 && bn_momentum <= 1.0, "train: bn_momentum must be in (0, 1]");
    detail::require(tau_w > 0.0 && std::isfinite(tau_w), "train: tau_w must be > 0");
    if (augment.kind == AugmentKind::gaussian_noise) {
        detail::require(augment.noise_sigma > 0.0, "train: noise_sigma must be > 0");
    }
    if (augment.kind == AugmentKind::mixup) augment.mixup.validate();
    if (loss.kind == LossKind::t_simclr && normalize != OutputNorm::batchnorm) {
        throw ValidationError("t_simclr requires normalize = batchnorm (without it the loss has "
                              "no minimizer at finite scale)");
    }
}

KeyValues TrainConfig::to_kv() const {
    KeyValues kv;
    kv.set("loss", to_string(loss.kind));
    kv.set("tau", loss.tau);
    kv.set("t_df", loss.t_df);
    kv.set("sim", to_string(loss.sim));
    kv.set("q.family", std::string(loss.q.family == QBuilder::Family::t_joint ? "t_joint"
                                                                              : "gaussian"));
    kv.set("q.sim", to_string(loss.q.sim));
    kv.set("q.tau", loss.q.tau);
    kv.set("q.t_df", loss.q.t_df);
    std::string widths;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i > 0) widths += ",";
        widths += std::to_string(hidden[i]);
    }
    kv.set("hidden", widths);
    kv.set("activation", to_string(activation));
    kv.set("d_z", static_cast<std::int64_t>(d_z));
    kv.set("epochs", static_cast<std::int64_t>(epochs));
    kv.set("batch_size", static_cast<std::int64_t>(batch_size));
    kv.set("optimizer", to_string(optimizer.kind));
    kv.set("lr", optimizer.lr);
    kv.set("momentum", optimizer.momentum);
    kv.set("beta1", optimizer.beta1);
    kv.set("beta2", optimizer.beta2);
    kv.set("adam_eps", optimizer.eps);
    kv.set("weight_decay", optimizer.weight_decay);
    kv.set("augment", to_string(augment.kind));
    kv.set("noise_sigma", augment.noise_sigma);
    kv.set("mixup", augment.mixup.describe());
    kv.set("normalize", to_string(normalize));
    kv.set("bn_momentum", bn_momentum);
    kv.set("bn_affine", std::string(bn_affine ? "true" : "false"));
    kv.set("tau_w", tau_w);
    kv.set("seed", std::to_string(seed));
    return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
    TrainConfig c;
    c.loss.kind = parse_loss_kind(kv.get_string("loss", to_string(c.loss.kind)));
    c.loss.tau = kv.get_double("tau", c.loss.tau);
    c.loss.t_df = kv.get_double("t_df", c.loss.t_df);
    c.loss.sim = parse_similarity(kv.get_string("sim", to_string(c.loss.sim)));
    const std::string family = kv.get_string("q.family", "gaussian");
    if (family == "gaussian") {
        c.loss.q.family = QBuilder::Family::gaussian_conditional;
    } else if (family == "t_joint") {
        c.loss.q.family = QBuilder::Family::t_joint;
    } else {
        throw ValidationError("unknown q.family '" + family + "' (expected gaussian or t_joint)");
    }
    c.loss.q.sim = parse_similarity(kv.get_string("q.sim", to_string(c.loss.q.sim)));
    c.loss.q.tau = kv.get_double("q.tau", c.loss.tau);
    c.loss.q.t_df = kv.get_double("q.t_df", c.loss.q.t_df);
    if (kv.has("hidden")) {
        c.hidden.clear();
        for (const auto& w : kv.get_list("hidden")) {
            KeyValues one;
            one.set("hidden", w);
            c.hidden.push_back(one.get_count("hidden", 0));
        }
    }
    c.activation = parse_activation(kv.get_string("activation", to_string(c.activation)));
    c.d_z = kv.get_count("d_z", c.d_z);
    c.epochs = kv.get_count("epochs", c.epochs);
    c.batch_size = kv.get_count("batch_size", c.batch_size);
    c.optimizer.kind = parse_optimizer(kv.get_string("optimizer", to_string(c.optimizer.kind)));
    c.optimizer.lr = kv.get_double("lr", c.optimizer.lr);
    c.optimizer.momentum = kv.get_double("momentum", c.optimizer.momentum);
    c.optimizer.beta1 = kv.get_double("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = kv.get_double("beta2", c.optimizer.beta2);
    c.optimizer.eps = kv.get_double("adam_eps", c.optimizer.eps);
    c.optimizer.weight_decay = kv.get_double("weight_decay", c.optimizer.weight_decay);
    c.augment.kind = parse_augment(kv.get_string("augment", to_string(c.augment.kind)));
    c.augment.noise_sigma = kv.get_double("noise_sigma", c.augment.noise_sigma);
    if (kv.has("mixup")) c.augment.mixup = MixupLambda::parse(kv.get_string("mixup", ""));
    c.normalize = parse_output_norm(kv.get_string("normalize", to_string(c.normalize)));
    c.bn_momentum = kv.get_double("bn_momentum", c.bn_momentum);
    c.bn_affine = kv.get_bool("bn_affine", c.bn_affine);
    c.tau_w = kv.get_double("tau_w", c.tau_w);
    c.seed = kv.get_u64("seed", c.seed);
    return c;
}

Matrix Encoder::embed(const Matrix& x) const {
    std::optional<BatchNormState> eval_bn = bn;
    if (eval_bn) eval_bn->mode = BatchNormMode::eval;
    ForwardResult fr = mlp_forward(mlp, eval_bn ? &*eval_bn : nullptr, x);
    if (norm == OutputNorm::sphere) return normalize_rows(fr.output);
    return std::move(fr.output);
}

double mean_pair_cosine(const Matrix& a, const Matrix& b) {
    require_shape(b, a.rows(), a.cols(), "mean_pair_cosine");
    detail::require(a.rows() >= 1, "mean_pair_cosine: empty input");
    const Matrix ua = normalize_rows(a);
    const Matrix ub = normalize_rows(b);
    return (ua.array() * ub.array()).sum() / static_cast<double>(a.rows());
}

double uniformity_metric(const Matrix& z) {
    detail::require(z.rows() >= 2, "uniformity_metric: needs at least two rows");
    const Matrix d2 = pairwise_sq_dists(normalize_rows(z));
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < d2.cols(); ++j) {
            total += std::exp(-2.0 * d2(i, j));
            ++count;
        }
    }
    return std::log(total / static_cast<double>(count));
}

namespace {

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

// Gradient through u = z / |z| (row-wise).
Matrix sphere_backward(const Matrix& z, const Matrix& u, const Matrix& grad_u) {
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double radial = grad_u.row(i).dot(u.row(i));
        out.row(i) = (grad_u.row(i) - radial * u.row(i)) / z.row(i).norm();
    }
    return out;
}

PairBatch make_pairs(const TrainData& data, const TrainConfig& cfg, const LabeledDataset& batch,
                     Rng& rng) {
    switch (cfg.augment.kind) {
    case AugmentKind::resample:
        detail::require(data.gmm.has_value(),
                        "resample augmentation needs the generating mixture");
        return augment_resample(*data.gmm, batch, rng);
    case AugmentKind::gaussian_noise: return augment_gaussian_noise(batch, cfg.augment.noise_sigma, rng);
    case AugmentKind::mixup: return augment_mixup(batch, cfg.augment.mixup, rng);
    }
    throw ValidationError("unsupported augmentation");
}

} // namespace

std::vector<Matrix*> trainable_parameters(Encoder& enc, const TrainConfig& cfg) {
    const bool train_bn = enc.bn.has_value() && cfg.bn_affine;
    return parameter_refs(enc.mlp, train_bn ? &*enc.bn : nullptr);
}

BatchStep batch_loss_grad(Encoder& enc, const TrainConfig& cfg, const Matrix& anchors,
                          const Matrix& views, std::span<const double> weights) {
    require_shape(views, anchors.rows(), anchors.cols(), "batch views");
    const Eigen::Index b = anchors.rows();
    BatchNormState* bn = enc.bn ? &*enc.bn : nullptr;
    if (bn) bn->mode = BatchNormMode::train;
    const ForwardResult fr = mlp_forward(enc.mlp, bn, stack_rows(anchors, views));
    Matrix features = fr.output;
    if (enc.norm == OutputNorm::sphere) features = normalize_rows(fr.output);

    SimMatrix target;
    LossAux aux;
    if (cfg.loss.kind == LossKind::sne_kl) {
        target = p_positive_pairs(static_cast<std::size_t>(b));
        aux.target = &target;
    }
    aux.weights = weights;
    const LossEval eval = loss_grad(cfg.loss, features.topRows(b), features.bottomRows(b), aux);

    // sne_kl interleaves anchors and views internally; loss_grad splits them back.
    Matrix grad = stack_rows(eval.grad_anchors, eval.grad_views);
    if (enc.norm == OutputNorm::sphere) grad = sphere_backward(fr.output, features, grad);
    const MlpGrads grads = mlp_backward(enc.mlp, bn, fr.cache, grad);

    BatchStep step;
    step.loss = eval.value;
    step.grads = flatten_grads(grads, bn != nullptr && cfg.bn_affine);
    return step;
}

TrainReport train_encoder(const TrainData& data, const TrainConfig& cfg) {
    cfg.validate();
    data.dataset.validate(data.gmm ? data.gmm->components() : 0);
    detail::require(data.dataset.size() >= 2, "train: dataset needs at least two points");
    const auto started = std::chrono::steady_clock::now();

    TrainReport report;
    report.config = cfg;
    report.rng = Rng(cfg.seed);
    Rng init_rng = report.rng.split(0);
    Rng& rng = report.rng;

    Encoder& enc = report.encoder;
    enc.mlp = init_mlp(data.dataset.dim(), cfg.hidden, cfg.d_z, cfg.activation, init_rng);
    enc.norm = cfg.normalize;
    if (cfg.normalize == OutputNorm::batchnorm) {
        enc.bn = BatchNormState::identity(cfg.d_z, cfg.bn_momentum);
    }
    BatchNormState* bn = enc.bn ? &*enc.bn : nullptr;
    const std::vector<Matrix*> refs = trainable_parameters(enc, cfg);
    report.optimizer = make_optimizer(cfg.optimizer, refs);

    const std::size_t n = data.dataset.size();
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));

        Matrix epoch_anchors(static_cast<Eigen::Index>(n), data.dataset.x.cols());
        Matrix epoch_views(static_cast<Eigen::Index>(n), data.dataset.x.cols());
        Eigen::Index filled = 0;
        double loss_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            if (stop - start < 2) continue; // a single pair has no negatives
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const LabeledDataset batch = data.dataset.subset(rows);
            const PairBatch pairs = make_pairs(data, cfg, batch, rng);
            const auto b = static_cast<Eigen::Index>(rows.size());

            std::vector<double> weights;
            if (cfg.loss.kind == LossKind::infonce_weighted) {
                std::vector<double> ious;
                for (Eigen::Index i = 0; i < b; ++i) {
                    const auto [c1, c2] = sample_crop_pair(rng);
                    ious.push_back(iou(c1, c2));
                }
                weights = p_weighted_pairs(ious, cfg.tau_w);
            }

            const BatchStep step = batch_loss_grad(enc, cfg, pairs.anchors, pairs.views, weights);
            if (!std::isfinite(step.loss)) {
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }
            for (const Matrix& g : step.grads) {
                if (!all_finite(g)) {
                    throw NumericError("training diverged: non-finite gradient at epoch " +
                                       std::to_string(epoch));
                }
            }
            optimizer_step(report.optimizer, refs, step.grads);

            loss_sum += step.loss;
            ++batches;
            epoch_anchors.middleRows(filled, b) = pairs.anchors;
            epoch_views.middleRows(filled, b) = pairs.views;
            filled += b;
        }
        if (bn) bn->mode = BatchNormMode::eval;
        detail::require(batches > 0, "train: no batch with at least two points");

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(batches);
        const Matrix za = enc.embed(epoch_anchors.topRows(filled));
        const Matrix zv = enc.embed(epoch_views.topRows(filled));
        stats.align = mean_pair_cosine(za, zv);
        stats.uniform = uniformity_metric(za);
        if (!std::isfinite(stats.loss) || !std::isfinite(stats.align) ||
            !std::isfinite(stats.uniform)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
        report.history.push_back(stats);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoint
//
//   snecl-checkpoint <version>
//   config <count>            then <count> lines `key = value`
//   mlp <layers>              then per layer `layer <activation>` + weight + bias
//   bn 0 | bn 1 <momentum> <epsilon>  then gamma, beta, running_mean, running_var
//   norm <name>
//   optimizer <kind> <step> <lr> <momentum> <beta1> <beta2> <eps> <weight_decay>
//   first <count> matrices, second <count> matrices
//   rng <seed> <engine state>
//   history <count>           then `<epoch> <loss> <align> <uniform>` lines
//   end
//
// A matrix is `mat <rows> <cols> v...`; every real is a hex float.

namespace {

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

void write_matrix(std::ostream& os, const Matrix& m) {
    os << "mat " << m.rows() << ' ' << m.cols();
    for (Eigen::Index i = 0; i < m.size(); ++i) os << ' ' << hex(m.data()[i]);
    os << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::string word(const char* what) {
        std::string w;
        if (!(is_ >> w)) fail(what);
        return w;
    }

    void expect(const std::string& keyword) {
        const std::string w = word(keyword.c_str());
        if (w != keyword) {
            throw FormatError("corrupt checkpoint: expected '" + keyword + "', found '" + w + "'");
        }
    }

    double real(const char* what) {
        const std::string w = word(what);
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size()) {
            throw FormatError(std::string("corrupt checkpoint: bad number for ") + what);
        }
        return v;
    }

    std::uint64_t count(const char* what) {
        const std::string w = word(what);
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(w, &pos);
            if (pos == w.size()) return v;
        } catch (const std::exception&) {
        }
        throw FormatError(std::string("corrupt checkpoint: bad count for ") + what);
    }

    Matrix matrix(const char* what) {
        expect("mat");
        const auto rows = static_cast<Eigen::Index>(count(what));
        const auto cols = static_cast<Eigen::Index>(count(what));
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = real(what);
        return m;
    }

    std::string line(const char* what) {
        std::string l;
        if (!std::getline(is_ >> std::ws, l)) fail(what);
        return l;
    }

private:
    [[noreturn]] static void fail(const char* what) {
        throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }

    std::istream& is_;
};

} // namespace

void write_checkpoint(const TrainReport& report, std::ostream& os) {
    os << "snecl-checkpoint " << checkpoint_version << '\n';
    const KeyValues kv = report.config.to_kv();
    os << "config " << kv.entries().size() << '\n';
    kv.write(os);

    const Encoder& enc = report.encoder;
    os << "mlp " << enc.mlp.layers.size() << '\n';
    for (const auto& layer : enc.mlp.layers) {
        os << "layer " << to_string(layer.activation) << '\n';
        write_matrix(os, layer.weight);
        write_matrix(os, layer.bias);
    }
    if (enc.bn) {
        os << "bn 1 " << hex(enc.bn->momentum) << ' ' << hex(enc.bn->epsilon) << '\n';
        write_matrix(os, enc.bn->gamma);
        write_matrix(os, enc.bn->beta);
        write_matrix(os, enc.bn->running_mean);
        write_matrix(os, enc.bn->running_var);
    } else {
        os << "bn 0\n";
    }
    os << "norm " << to_string(enc.norm) << '\n';

    const OptimizerState& opt = report.optimizer;
    const OptimizerSettings& s = opt.settings;
    os << "optimizer " << to_string(s.kind) << ' ' << opt.step << ' ' << hex(s.lr) << ' '
       << hex(s.momentum) << ' ' << hex(s.beta1) << ' ' << hex(s.beta2) << ' ' << hex(s.eps) << ' '
       << hex(s.weight_decay) << '\n';
    os << "first " << opt.first.size() << '\n';
    for (const Matrix& m : opt.first) write_matrix(os, m);
    os << "second " << opt.second.size() << '\n';
    for (const Matrix& m : opt.second) write_matrix(os, m);

    os << "rng " << report.rng.serialize() << '\n';
    os << "history " << report.history.size() << '\n';
    for (const EpochStats& e : report.history) {
        os << e.epoch << ' ' << hex(e.loss) << ' ' << hex(e.align) << ' ' << hex(e.uniform) << '\n';
    }
    os << "end\n";
}

void save_checkpoint(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
    write_checkpoint(report, out);
    if (!out) throw FormatError("failed while writing checkpoint '" + path + "'");
}

TrainReport read_checkpoint(std::istream& is) {
    Reader r(is);
    if (r.word("header") != "snecl-checkpoint") {
        throw FormatError("not a snecl checkpoint (missing 'snecl-checkpoint' header)");
    }
    const std::string version = r.word("version");
    if (version != std::to_string(checkpoint_version)) {
        throw FormatError("checkpoint version mismatch: file has version " + version +
                          ", this build reads version " + std::to_string(checkpoint_version));
    }

    TrainReport report;
    r.expect("config");
    const auto n_keys = r.count("config size");
    std::ostringstream cfg_text;
    for (std::uint64_t i = 0; i < n_keys; ++i) cfg_text << r.line("config entry") << '\n';
    std::istringstream cfg_in(cfg_text.str());
    report.config = TrainConfig::from_kv(KeyValues::parse(cfg_in, "checkpoint config"));

    Encoder& enc = report.encoder;
    r.expect("mlp");
    const auto n_layers = r.count("layer count");
    for (std::uint64_t l = 0; l < n_layers; ++l) {
        r.expect("layer");
        DenseLayer layer;
        layer.activation = parse_activation(r.word("activation"));
        layer.weight = r.matrix("layer weight");
        layer.bias = r.matrix("layer bias");
        enc.mlp.layers.push_back(std::move(layer));
    }
    try {
        enc.mlp.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("corrupt checkpoint: ") + e.what());
    }

    r.expect("bn");
    if (r.count("bn flag") == 1) {
        BatchNormState bn;
        bn.momentum = r.real("bn momentum");
        bn.epsilon = r.real("bn epsilon");
        bn.gamma = r.matrix("bn gamma");
        bn.beta = r.matrix("bn beta");
        bn.running_mean = r.matrix("bn running mean");
        bn.running_var = r.matrix("bn running variance");
        bn.mode = BatchNormMode::eval;
        enc.bn = std::move(bn);
    }
    r.expect("norm");
    enc.norm = parse_output_norm(r.word("norm"));

    r.expect("optimizer");
    OptimizerState& opt = report.optimizer;
    opt.settings.kind = parse_optimizer(r.word("optimizer kind"));
    opt.step = r.count("optimizer step");
    opt.settings.lr = r.real("lr");
    opt.settings.momentum = r.real("momentum");
    opt.settings.beta1 = r.real("beta1");
    opt.settings.beta2 = r.real("beta2");
    opt.settings.eps = r.real("eps");
    opt.settings.weight_decay = r.real("weight_decay");
    r.expect("first");
    for (auto k = r.count("moment count"); k > 0; --k) opt.first.push_back(r.matrix("moment"));
    r.expect("second");
    for (auto k = r.count("moment count"); k > 0; --k) opt.second.push_back(r.matrix("moment"));

    r.expect("rng");
    report.rng = Rng::deserialize(r.line("rng state"));

    r.expect("history");
    const auto n_epochs = r.count("history size");
    for (std::uint64_t i = 0; i < n_epochs; ++i) {
        EpochStats e;
        e.epoch = r.count("epoch");
        e.loss = r.real("loss");
        e.align = r.real("align");
        e.uniform = r.real("uniform");
        report.history.push_back(e);
    }
    r.expect("end");
    return report;
}

TrainReport load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

void write_training_log(const TrainReport& report, std::ostream& os) {
    os << "epoch,loss,align_metric,uniform_metric\n";
    for (const EpochStats& e : report.history) {
        os << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.align) << ','
           << format_double(e.uniform) << '\n';
    }
}

} // namespace snecl
