#include "doctest.h"
#include "test_util.hpp"

#include "snecl/error.hpp"
#include "snecl/matrix.hpp"
#include "snecl/mlp.hpp"
#include "snecl/optim.hpp"
#include "snecl/rng.hpp"

#include <cmath>
#include <vector>

using namespace snecl;

namespace {

// Loop-by-loop forward pass, written without Eigen expressions.
Matrix naive_forward(const MlpParams& p, const Matrix& x) {
    std::vector<std::vector<double>> h(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) h[static_cast<std::size_t>(i)].push_back(x(i, j));
    }
    for (const auto& layer : p.layers) {
        for (auto& row : h) {
            std::vector<double> next(static_cast<std::size_t>(layer.weight.cols()));
            for (Eigen::Index o = 0; o < layer.weight.cols(); ++o) {
                double s = layer.bias(0, o);
                for (Eigen::Index k = 0; k < layer.weight.rows(); ++k) {
                    s += row[static_cast<std::size_t>(k)] * layer.weight(k, o);
                }
                if (layer.activation == Activation::relu) s = s > 0 ? s : 0.0;
                if (layer.activation == Activation::tanh) s = std::tanh(s);
                next[static_cast<std::size_t>(o)] = s;
            }
            row = std::move(next);
        }
    }
    Matrix out(x.rows(), static_cast<Eigen::Index>(h.front().size()));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
}

MlpParams identity_net(std::size_t d) {
    MlpParams p;
    DenseLayer l;
    l.weight = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    l.bias = Matrix::Zero(1, static_cast<Eigen::Index>(d));
    p.layers.push_back(l);
    return p;
}

} // namespace

TEST_SUITE("numkit") {

TEST_CASE("rng: identical seeds give identical streams, split is consumption independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(7);
    const Rng child_before = c.split(3);
    for (int i = 0; i < 10; ++i) c.normal();
    CHECK(c.split(3) == child_before);
    CHECK(Rng(7).split(3).next_u64() != Rng(7).split(4).next_u64());
}

TEST_CASE("rng: serialize round trip is bit-exact") {
    Rng a(5);
    for (int i = 0; i < 17; ++i) a.uniform();
    Rng b = Rng::deserialize(a.serialize());
    CHECK(a == b);
    CHECK(a.normal() == b.normal());
}

TEST_CASE("rng: normal moments") {
    Rng r(1);
    const int n = 200000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        s += v;
        ss += v * v;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(ss / n - 1.0) < 0.02);
}

TEST_CASE("mlp_forward: single identity layer returns the batch") {
    Rng r(1);
    const Matrix b = random_matrix(4, 3, r);
    CHECK(mlp_forward(identity_net(3), nullptr, b).output == b);
}

TEST_CASE("mlp_forward: zero relu network outputs zeros") {
    Rng r(2);
    const std::vector<std::size_t> hidden{5};
    MlpParams p = init_mlp(3, hidden, 2, Activation::relu, r);
    for (auto& l : p.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    CHECK(mlp_forward(p, nullptr, random_matrix(6, 3, r)).output.isZero(0.0));
}

TEST_CASE("mlp_forward: two-layer net matches a naive forward pass") {
    Rng r(3);
    const std::vector<std::size_t> hidden{4};
    for (Activation act : {Activation::relu, Activation::tanh}) {
        MlpParams p = init_mlp(2, hidden, 3, act, r);
        for (auto& l : p.layers) l.bias = random_matrix(1, l.bias.cols(), r);
        Matrix x(3, 2);
        x << 0.5, -1.0, 2.0, 0.25, -0.75, 1.5;
        CHECK(max_abs_diff(mlp_forward(p, nullptr, x).output, naive_forward(p, x)) < 1e-12);
    }
}

TEST_CASE("mlp_forward: errors on dimension mismatch and single-row batch norm") {
    Rng r(4);
    const std::vector<std::size_t> hidden{4};
    const MlpParams p = init_mlp(3, hidden, 2, Activation::relu, r);
    CHECK_THROWS_AS(mlp_forward(p, nullptr, Matrix::Zero(2, 5)), ValidationError);
    BatchNormState bn = BatchNormState::identity(2);
    CHECK_THROWS_AS(mlp_forward(p, &bn, Matrix::Zero(1, 3)), ValidationError);
}

TEST_CASE("mlp_forward: batch norm train mode centres every output dimension") {
    Rng r(5);
    const std::vector<std::size_t> hidden{8};
    const MlpParams p = init_mlp(3, hidden, 2, Activation::relu, r);
    BatchNormState bn = BatchNormState::identity(2);
    const Matrix out = mlp_forward(p, &bn, random_matrix(32, 3, r)).output;
    const Matrix mean = out.colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-10);
    const Matrix var = out.array().square().colwise().sum() / 32.0;
    CHECK(var(0, 0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(bn.running_mean.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("mlp_backward: zero upstream gives zero gradients; identity passes gradients through") {
    Rng r(6);
    const std::vector<std::size_t> hidden{4};
    const MlpParams p = init_mlp(3, hidden, 2, Activation::tanh, r);
    const Matrix x = random_matrix(5, 3, r);
    const auto fwd = mlp_forward(p, nullptr, x);
    const MlpGrads g = mlp_backward(p, nullptr, fwd.cache, Matrix::Zero(5, 2));
    for (const auto& w : g.weight) CHECK(w.isZero(0.0));
    CHECK(g.input.isZero(0.0));

    const MlpParams id = identity_net(3);
    const Matrix up = random_matrix(5, 3, r);
    const auto fid = mlp_forward(id, nullptr, x);
    CHECK(mlp_backward(id, nullptr, fid.cache, up).input == up);
}

TEST_CASE("mlp_backward: every parameter gradient matches central differences") {
    Rng r(7);
    const std::vector<std::size_t> hidden{5, 4};
    for (bool use_bn : {false, true}) {
        CAPTURE(use_bn);
        MlpParams p = init_mlp(3, hidden, 2, Activation::tanh, r);
        BatchNormState bn = BatchNormState::identity(2);
        bn.gamma = random_matrix(1, 2, r).array() + 2.0;
        bn.beta = random_matrix(1, 2, r);
        BatchNormState* bnp = use_bn ? &bn : nullptr;
        const Matrix x = random_matrix(6, 3, r);
        const Matrix up = random_matrix(6, 2, r);

        BatchNormState bn_copy = bn;
        const auto fwd = mlp_forward(p, use_bn ? &bn_copy : nullptr, x);
        const auto grads = flatten_grads(mlp_backward(p, bnp, fwd.cache, up), use_bn);
        const auto refs = parameter_refs(p, bnp);
        REQUIRE(refs.size() == grads.size());
        for (std::size_t k = 0; k < refs.size(); ++k) {
            Matrix* target = refs[k];
            const Matrix base = *target;
            auto fn = [&](const Matrix& v) {
                *target = v;
                BatchNormState scratch = bn;
                const double val = (mlp_forward(p, use_bn ? &scratch : nullptr, x).output.array() * up.array()).sum();
                *target = base;
                return val;
            };
            const Matrix fd = finite_diff_grad(fn, base, 1e-4);
            CAPTURE(k);
            // Train-mode batch norm subtracts the batch mean, so the output bias has zero gradient.
            const bool output_bias = use_bn && k == 2 * p.layers.size() - 1;
            if (output_bias) {
                CHECK(grads[k].norm() < 1e-12);
                CHECK(fd.norm() < 1e-8);
            } else {
                CHECK(relative_error(fd, grads[k]) < 1e-5);
            }
        }
        // Input gradient too.
        auto fx = [&](const Matrix& v) {
            BatchNormState scratch = bn;
            return (mlp_forward(p, use_bn ? &scratch : nullptr, v).output.array() * up.array()).sum();
        };
        BatchNormState scratch = bn;
        const auto f2 = mlp_forward(p, use_bn ? &scratch : nullptr, x);
        CHECK(relative_error(finite_diff_grad(fx, x, 1e-4), mlp_backward(p, bnp, f2.cache, up).input) < 1e-5);
    }
}

TEST_CASE("optimizer_step: sgd first step and zero gradients") {
    Matrix p(1, 2);
    p << 1.0, -2.0;
    Matrix g(1, 2);
    g << 0.5, 0.25;
    std::vector<Matrix*> params{&p};
    OptimizerSettings s;
    s.kind = OptimizerKind::sgd_momentum;
    s.lr = 0.1;
    OptimizerState opt = make_optimizer(s, params);
    const std::vector<Matrix> grads{g};
    optimizer_step(opt, params, grads);
    CHECK(p(0, 0) == doctest::Approx(1.0 - 0.05));
    CHECK(p(0, 1) == doctest::Approx(-2.0 - 0.025));
    CHECK(opt.step == 1);

    Matrix q = p;
    OptimizerState fresh = make_optimizer(s, params);
    const std::vector<Matrix> zeros{Matrix::Zero(1, 2)};
    optimizer_step(fresh, params, zeros);
    CHECK(p == q);
}

TEST_CASE("optimizer_step: adam converges on half squared norm") {
    Matrix p(1, 2);
    p << 1.0, 1.0;
    std::vector<Matrix*> params{&p};
    OptimizerSettings s;
    s.kind = OptimizerKind::adam;
    s.lr = 0.05;
    OptimizerState opt = make_optimizer(s, params);
    for (int i = 0; i < 500; ++i) {
        const std::vector<Matrix> grads{p};
        optimizer_step(opt, params, grads);
    }
    CHECK(p.norm() < 1e-3);
}

TEST_CASE("optimizer_step: rejects shape mismatch and non-finite gradients") {
    Matrix p = Matrix::Zero(1, 2);
    std::vector<Matrix*> params{&p};
    OptimizerState opt = make_optimizer(OptimizerSettings{}, params);
    const std::vector<Matrix> wrong{Matrix::Zero(2, 2)};
    CHECK_THROWS_AS(optimizer_step(opt, params, wrong), ValidationError);
    Matrix bad = Matrix::Zero(1, 2);
    bad(0, 1) = std::nan("");
    const std::vector<Matrix> nan_grads{bad};
    CHECK_THROWS_AS(optimizer_step(opt, params, nan_grads), NumericError);
}

TEST_CASE("finite_diff_grad: squared norm and constant functions") {
    Matrix x(1, 2);
    x << 1.0, 2.0;
    const Matrix g = finite_diff_grad([](const Matrix& v) { return v.squaredNorm(); }, x, 1e-4);
    CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(g(0, 1) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(finite_diff_grad([](const Matrix&) { return 3.0; }, x, 1e-4).isZero(0.0));
    CHECK_THROWS_AS(finite_diff_grad([](const Matrix&) { return std::nan(""); }, x, 1e-4), NumericError);
    CHECK_THROWS_AS(finite_diff_grad([](const Matrix&) { return 0.0; }, x, 0.0), ValidationError);
}

TEST_CASE("matrix helpers: interleave round trip and exact symmetric distances") {
    Rng r(8);
    const Matrix a = random_matrix(4, 3, r);
    const Matrix b = random_matrix(4, 3, r);
    const auto [a2, b2] = split_pairs(interleave_pairs(a, b));
    CHECK(a2 == a);
    CHECK(b2 == b);
    const Matrix d = pairwise_sq_dists(a);
    CHECK(d == d.transpose());
    CHECK(d.diagonal().isZero(0.0));
    CHECK_THROWS_AS(normalize_rows(Matrix::Zero(1, 2)), ValidationError);
}

} // TEST_SUITE
