#include "doctest.h"
#include "test_util.hpp"

#include "snecl/error.hpp"
#include "snecl/similarity.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

using namespace snecl;

namespace {

// Softmax over j != i of s_ij, written with explicit loops.
Matrix softmax_rows_offdiag(const Matrix& s) {
    Matrix out = Matrix::Zero(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        double denom = 0;
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            if (j != i) denom += std::exp(s(i, j));
        }
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            if (j != i) out(i, j) = std::exp(s(i, j)) / denom;
        }
    }
    return out;
}

double row_sum_error(const SimMatrix& m) {
    return (m.values.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

} // namespace

TEST_SUITE("similarity") {

TEST_CASE("p_sne_conditional: two points, monotonicity, softmax oracle") {
    Matrix two(2, 2);
    two << 0, 0, 1, 1;
    const SimMatrix p2 = p_sne_conditional(two, 1.0);
    CHECK(p2.values(0, 1) == 1.0);
    CHECK(p2.values(1, 0) == 1.0);

    Matrix line(3, 1);
    line << 0, 1, 2;
    const SimMatrix pl = p_sne_conditional(line, 1.0);
    CHECK(pl.values(0, 1) > pl.values(0, 2));

    Rng r(1);
    const Matrix x = random_matrix(4, 3, r);
    const double sigma = 0.8;
    Matrix s(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) s(i, j) = -(x.row(i) - x.row(j)).squaredNorm() / (2 * sigma * sigma);
    }
    const SimMatrix p = p_sne_conditional(x, sigma);
    CHECK(max_abs_diff(p.values, softmax_rows_offdiag(s)) < 1e-12);
    CHECK(row_sum_error(p) < 1e-10);
    CHECK(p.values.diagonal().isZero(0.0));
    CHECK_THROWS_AS(p_sne_conditional(Matrix::Zero(1, 2), 1.0), ValidationError);
    CHECK_THROWS_AS(p_sne_conditional(x, 0.0), ValidationError);
}

TEST_CASE("p_positive_pairs: entries 1/(2n), total mass 1") {
    const SimMatrix p1 = p_positive_pairs(1);
    CHECK(p1.values(0, 1) == 0.5);
    CHECK(p1.values(1, 0) == 0.5);
    const SimMatrix p3 = p_positive_pairs(3);
    CHECK(p3.values.rows() == 6);
    CHECK((p3.values.array() != 0.0).count() == 6);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(p3.values(i, i ^ 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(p3.values.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p3.kind == SimKind::unnormalized);
}

TEST_CASE("p_weighted_pairs: constant IoU, large tau_w, closed-form ratio") {
    const std::vector<double> same{0.3, 0.3, 0.3};
    for (double w : p_weighted_pairs(same, 0.7)) CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> spread{0.0, 0.25, 1.0};
    for (double w : p_weighted_pairs(spread, 1e6)) CHECK(std::abs(w - 1.0) < 1e-6);
    const std::vector<double> two{0.0, 1.0};
    const auto w = p_weighted_pairs(two, 1.0);
    CHECK(w[1] / w[0] == doctest::Approx(std::numbers::e).epsilon(1e-14));
    CHECK((w[0] + w[1]) / 2 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(p_weighted_pairs(two, 0.0), ValidationError);
}

TEST_CASE("p_noise_induced: mode value, monotone in l2 distance, symmetric") {
    const double s = 0.7;
    Matrix dup(2, 3);
    dup << 1, 2, 3, 1, 2, 3;
    const SimMatrix pd = p_noise_induced(dup, gaussian_density(s));
    CHECK(pd.values(0, 1) == doctest::Approx(std::pow(2 * std::numbers::pi * s * s, -1.5)).epsilon(1e-14));

    Rng r(2);
    const Matrix x = random_matrix(6, 2, r);
    const SimMatrix p = p_noise_induced(x, gaussian_density(s));
    CHECK(p.values == p.values.transpose());
    const Matrix d = pairwise_sq_dists(x);
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) {
            for (Eigen::Index k = 0; k < 6; ++k) {
                if (i == j || i == k || d(i, j) >= d(i, k)) continue;
                CHECK(p.values(i, j) > p.values(i, k));
            }
        }
    }
}

TEST_CASE("p_mixup_induced: mode at zero difference and exact symmetry") {
    Rng r(3);
    Matrix x(4, 1);
    x << 0.0, 0.0, 1.0, 3.0;
    const SimMatrix p = p_mixup_induced(x, MixupLambda::constant(0.5), 2000, 0.2, r);
    CHECK(p.values == p.values.transpose());
    CHECK(p.values(0, 1) == p.values.maxCoeff());
    CHECK_THROWS_AS(p_mixup_induced(x, MixupLambda::constant(0.5), 50, 0.2, r), ValidationError);
    CHECK_THROWS_AS(p_mixup_induced(x, MixupLambda::constant(0.5), 2000, 0.0, r), ValidationError);
}

TEST_CASE("p_mixup_induced: estimate at zero difference agrees with dense convolution") {
    // Two 1-D clusters; rows 0 and 1 coincide, so entry (0, 1) is the estimate at 0.
    Rng gen(4);
    std::vector<double> pts{0.0, 0.0};
    for (int i = 0; i < 6; ++i) pts.push_back(gen.normal(i < 3 ? -1.0 : 1.0, 0.2));
    Matrix x(static_cast<Eigen::Index>(pts.size()), 1);
    for (std::size_t i = 0; i < pts.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = pts[i];

    const double lambda = 0.5;
    const double h = 0.15;
    const std::size_t draws = 20000;
    // Exact KDE expectation: average of N(0; lambda (x_a - x_b), h^2) over all ordered (a, b).
    const auto kernel = [&](double u) { return std::exp(-u * u / (2 * h * h)) / (std::sqrt(2 * std::numbers::pi) * h); };
    double mean = 0, sq = 0;
    const double n2 = static_cast<double>(pts.size() * pts.size());
    for (double a : pts) {
        for (double b : pts) {
            const double k = kernel(lambda * (a - b));
            mean += k / n2;
            sq += k * k / n2;
        }
    }
    const double se = std::sqrt((sq - mean * mean) / static_cast<double>(draws));
    Rng r(5);
    const SimMatrix p = p_mixup_induced(x, MixupLambda::constant(lambda), draws, h, r);
    CHECK(std::abs(p.values(0, 1) - mean) < 3 * se);
}

TEST_CASE("q_gaussian_conditional: two points, identical features, softmax oracle") {
    Rng r(6);
    const Matrix two = random_matrix(2, 3, r);
    for (Similarity sim : {Similarity::cosine, Similarity::neg_sq_euclidean, Similarity::inner_product}) {
        const SimMatrix q = q_gaussian_conditional(two, sim, 0.5);
        CHECK(q.values(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(q.values(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    Matrix same(5, 2);
    same.rowwise() = RowVector::Constant(2, 0.3);
    const SimMatrix qs = q_gaussian_conditional(same, Similarity::cosine, 1.0);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) {
            if (i != j) CHECK(qs.values(i, j) == doctest::Approx(0.25).epsilon(1e-14));
        }
    }

    const Matrix u = normalize_rows(random_matrix(4, 3, r));
    const SimMatrix q = q_gaussian_conditional(u, Similarity::cosine, 1.0);
    CHECK(max_abs_diff(q.values, softmax_rows_offdiag(u * u.transpose())) < 1e-12);
    CHECK(row_sum_error(q) < 1e-10);

    Matrix zero_row = random_matrix(3, 2, r);
    zero_row.row(1).setZero();
    CHECK_THROWS_AS(q_gaussian_conditional(zero_row, Similarity::cosine, 1.0), ValidationError);
}

TEST_CASE("q_gaussian_conditional: neg_sq_euclidean is invariant to a common row shift") {
    Rng r(7);
    const Matrix z = random_matrix(5, 2, r);
    const SimMatrix q = q_gaussian_conditional(z, Similarity::neg_sq_euclidean, 0.7);
    // Adding c to every similarity of a row is the same as scaling numerator and denominator by exp(c / tau).
    Matrix s = -pairwise_sq_dists(z) / 0.7;
    s.array() += 3.0;
    CHECK(max_abs_diff(q.values, softmax_rows_offdiag(s)) < 1e-12);
}

TEST_CASE("q_t_joint: two points, identical features, direct formula, monotone") {
    Rng r(8);
    const SimMatrix q2 = q_t_joint(random_matrix(2, 2, r), 5.0, 1.0);
    CHECK(q2.values(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    const SimMatrix q3 = q_t_joint(Matrix::Ones(3, 2), 1.0, 1.0);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            if (i != j) CHECK(q3.values(i, j) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
        }
    }

    const Matrix z = random_matrix(4, 2, r);
    Matrix w = Matrix::Zero(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            if (i != j) w(i, j) = 1.0 / (1.0 + (z.row(i) - z.row(j)).squaredNorm());
        }
    }
    const SimMatrix q = q_t_joint(z, 1.0, 1.0);
    CHECK(max_abs_diff(q.values, w / w.sum()) < 1e-12);
    CHECK(q.values == q.values.transpose());
    CHECK(std::abs(q.values.sum() - 1.0) < 1e-10);

    const Matrix d = pairwise_sq_dists(z);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            for (Eigen::Index k = 0; k < 4; ++k) {
                if (i != j && i != k && d(i, j) < d(i, k)) CHECK(q.values(i, j) > q.values(i, k));
            }
        }
    }
}

TEST_CASE("SimMatrix: validation and CSV round trip") {
    SimMatrix bad;
    bad.values = Matrix::Ones(2, 2);
    bad.kind = SimKind::unnormalized;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    Rng r(9);
    const SimMatrix q = q_t_joint(random_matrix(4, 2, r), 2.0, 1.0);
    std::stringstream ss;
    write_sim_matrix_csv(ss, q);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "kind=joint");
    ss.seekg(0);
    const SimMatrix back = read_sim_matrix_csv(ss);
    CHECK(back.kind == SimKind::joint);
    CHECK(max_abs_diff(back.values, q.values) < 1e-15);
}

} // TEST_SUITE
