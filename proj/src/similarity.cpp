#include "snecl/similarity.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace snecl {

std::string to_string(SimKind k) {
    switch (k) {
    case SimKind::conditional: return "conditional";
    case SimKind::joint: return "joint";
    case SimKind::unnormalized: return "unnormalized";
    }
    return "unnormalized";
}

SimKind parse_sim_kind(const std::string& name) {
    if (name == "conditional") return SimKind::conditional;
    if (name == "joint") return SimKind::joint;
    if (name == "unnormalized") return SimKind::unnormalized;
    throw ValidationError("unknown similarity-matrix kind '" + name + "'");
}

std::string to_string(Similarity s) {
    switch (s) {
    case Similarity::cosine: return "cosine";
    case Similarity::neg_sq_euclidean: return "neg_sq_euclidean";
    case Similarity::inner_product: return "inner_product";
    }
    return "cosine";
}

Similarity parse_similarity(const std::string& name) {
    if (name == "cosine") return Similarity::cosine;
    if (name == "neg_sq_euclidean") return Similarity::neg_sq_euclidean;
    if (name == "inner_product") return Similarity::inner_product;
    throw ValidationError("unknown similarity '" + name + "'");
}

void SimMatrix::validate() const {
    detail::require(values.rows() == values.cols(), "similarity matrix must be square");
    require_finite(values, "similarity matrix");
    detail::require((values.array() >= 0.0).all(), "similarity matrix has negative entries");
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        detail::require(values(i, i) == 0.0, "similarity matrix diagonal must be zero");
    }
    constexpr double tol = 1e-10;
    if (kind == SimKind::conditional) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            if (std::abs(values.row(i).sum() - 1.0) > tol) {
                throw ValidationError("conditional similarity row " + std::to_string(i) +
                                      " does not sum to 1");
            }
        }
    } else if (kind == SimKind::joint) {
        detail::require(std::abs(values.sum() - 1.0) <= tol,
                        "joint similarity matrix does not sum to 1");
    }
}

Matrix similarity_matrix(const Matrix& z, Similarity sim) {
    switch (sim) {
    case Similarity::cosine: {
        const Matrix u = normalize_rows(z);
        return u * u.transpose();
    }
    case Similarity::inner_product: return z * z.transpose();
    case Similarity::neg_sq_euclidean: return -pairwise_sq_dists(z);
    }
    return {};
}

namespace {

// Softmax of logits over j != i, row by row (max-shifted).
Matrix masked_row_softmax(const Matrix& logits) {
    const Eigen::Index n = logits.rows();
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) mx = std::max(mx, logits(i, j));
        }
        double total = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            out(i, j) = std::exp(logits(i, j) - mx);
            total += out(i, j);
        }
        out.row(i) /= total;
    }
    return out;
}

} // namespace

SimMatrix p_sne_conditional(const Matrix& x, double bandwidth) {
    const std::vector<double> bw(static_cast<std::size_t>(x.rows()), bandwidth);
    return p_sne_conditional(x, bw);
}

SimMatrix p_sne_conditional(const Matrix& x, std::span<const double> bandwidths) {
    detail::require(x.rows() >= 2, "p_sne_conditional: needs n >= 2");
    detail::require(bandwidths.size() == static_cast<std::size_t>(x.rows()),
                    "p_sne_conditional: one bandwidth per row required");
    for (double b : bandwidths) {
        detail::require(b > 0.0 && std::isfinite(b), "p_sne_conditional: bandwidths must be > 0");
    }
    const Matrix d2 = pairwise_sq_dists(x);
    Matrix logits(d2.rows(), d2.cols());
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        const double s = bandwidths[static_cast<std::size_t>(i)];
        logits.row(i) = -d2.row(i) / (2.0 * s * s);
    }
    return SimMatrix{masked_row_softmax(logits), SimKind::conditional};
}

SimMatrix p_positive_pairs(std::size_t n) {
    detail::require(n >= 1, "p_positive_pairs: n must be >= 1");
    const auto m = static_cast<Eigen::Index>(2 * n);
    const double value = 1.0 / static_cast<double>(2 * n);
    Matrix p = Matrix::Zero(m, m);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
        p(2 * k, 2 * k + 1) = value;
        p(2 * k + 1, 2 * k) = value;
    }
    return SimMatrix{std::move(p), SimKind::unnormalized};
}

std::vector<double> p_weighted_pairs(std::span<const double> ious, double tau_w) {
    detail::require(tau_w > 0.0 && std::isfinite(tau_w), "p_weighted_pairs: tau_w must be > 0");
    detail::require(!ious.empty(), "p_weighted_pairs: no pairs");
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : ious) {
        detail::require(v >= 0.0 && v <= 1.0, "p_weighted_pairs: IoU values must lie in [0, 1]");
        mx = std::max(mx, v);
    }
    std::vector<double> w(ious.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ious.size(); ++i) {
        w[i] = std::exp((ious[i] - mx) / tau_w);
        total += w[i];
    }
    const double mean = total / static_cast<double>(w.size());
    for (double& v : w) v /= mean;
    return w;
}

Density gaussian_density(double sigma) {
    detail::require(sigma > 0.0, "gaussian_density: sigma must be positive");
    return [sigma](std::span<const double> u) {
        double sq = 0.0;
        for (double v : u) sq += v * v;
        const double d = static_cast<double>(u.size());
        return std::pow(2.0 * std::numbers::pi * sigma * sigma, -d / 2.0) *
               std::exp(-sq / (2.0 * sigma * sigma));
    };
}

SimMatrix p_noise_induced(const Matrix& x, const Density& phi) {
    const Eigen::Index n = x.rows();
    Matrix v = Matrix::Zero(n, n);
    std::vector<double> diff(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                diff[static_cast<std::size_t>(c)] = x(i, c) - x(j, c);
            }
            const double p = phi(diff);
            if (!std::isfinite(p) || p < 0.0) {
                throw NumericError("p_noise_induced: density returned an invalid value");
            }
            v(i, j) = p;
        }
    }
    return SimMatrix{std::move(v), SimKind::unnormalized};
}

namespace {

Matrix mixup_draws(const Matrix& x, const MixupLambda& lambda, std::size_t draws, Rng& rng) {
    const auto n = static_cast<std::size_t>(x.rows());
    Matrix s(static_cast<Eigen::Index>(draws), x.cols());
    for (std::size_t m = 0; m < draws; ++m) {
        const auto a = static_cast<Eigen::Index>(rng.index(n));
        const auto b = static_cast<Eigen::Index>(rng.index(n));
        const double l = lambda.sample(rng);
        s.row(static_cast<Eigen::Index>(m)) = l * (x.row(a) - x.row(b));
    }
    return s;
}

} // namespace

double mixup_default_bandwidth(const Matrix& x, const MixupLambda& lambda, std::size_t draws,
                               Rng& rng) {
    detail::require(draws >= 2, "mixup_default_bandwidth: needs at least two draws");
    const Matrix s = mixup_draws(x, lambda, draws, rng);
    const RowVector mean = s.colwise().mean();
    const double var = (s.rowwise() - mean).array().square().sum() /
                       static_cast<double>((s.rows() - 1) * s.cols());
    const double d = static_cast<double>(x.cols());
    const double h = std::sqrt(var) * std::pow(static_cast<double>(draws), -1.0 / (d + 4.0));
    return h > 0.0 ? h : 1e-3;
}

SimMatrix p_mixup_induced(const Matrix& x, const MixupLambda& lambda, std::size_t draws,
                          double bandwidth, Rng& rng) {
    detail::require(draws >= 100, "p_mixup_induced: needs at least 100 Monte Carlo draws");
    detail::require(bandwidth > 0.0 && std::isfinite(bandwidth),
                    "p_mixup_induced: bandwidth must be positive");
    detail::require(x.rows() >= 1, "p_mixup_induced: empty dataset");
    lambda.validate();
    const Matrix s = mixup_draws(x, lambda, draws, rng);

    const Eigen::Index n = x.rows();
    const double d = static_cast<double>(x.cols());
    const double norm = std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -d / 2.0) /
                        static_cast<double>(draws);
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    Matrix v = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            double acc = 0.0;
            for (Eigen::Index m = 0; m < s.rows(); ++m) {
                double sq = 0.0;
                for (Eigen::Index c = 0; c < x.cols(); ++c) {
                    const double u = x(i, c) - x(j, c) - s(m, c);
                    sq += u * u;
                }
                acc += std::exp(-sq * inv2h2);
            }
            v(i, j) = norm * acc;
        }
    }
    Matrix sym = 0.5 * (v + v.transpose());
    return SimMatrix{std::move(sym), SimKind::unnormalized};
}

SimMatrix q_gaussian_conditional(const Matrix& z, Similarity sim, double tau) {
    detail::require(z.rows() >= 2, "q_gaussian_conditional: needs n >= 2");
    detail::require(tau > 0.0 && std::isfinite(tau), "q_gaussian_conditional: tau must be > 0");
    const Matrix logits = similarity_matrix(z, sim) / tau;
    return SimMatrix{masked_row_softmax(logits), SimKind::conditional};
}

SimMatrix q_t_joint(const Matrix& z, double t_df, double tau) {
    detail::require(z.rows() >= 2, "q_t_joint: needs n >= 2");
    detail::require(t_df > 0.0 && tau > 0.0, "q_t_joint: t_df and tau must be > 0");
    const Matrix d2 = pairwise_sq_dists(z);
    const double scale = tau * t_df;
    const double power = -(t_df + 1.0) / 2.0;
    Matrix w = Matrix::Zero(d2.rows(), d2.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        for (Eigen::Index j = 0; j < d2.cols(); ++j) {
            if (i == j) continue;
            w(i, j) = std::pow(1.0 + d2(i, j) / scale, power);
            total += w(i, j);
        }
    }
    if (!(total > 0.0)) throw NumericError("q_t_joint: all weights underflowed");
    return SimMatrix{w / total, SimKind::joint};
}

void write_sim_matrix_csv(std::ostream& os, const SimMatrix& m) {
    os << "kind=" << to_string(m.kind) << '\n';
    os.precision(17);
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
            if (j > 0) os << ',';
            os << m.values(i, j);
        }
        os << '\n';
    }
}

SimMatrix read_sim_matrix_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("kind=", 0) != 0) {
        throw FormatError("similarity CSV: missing 'kind=' header");
    }
    SimMatrix m;
    m.kind = parse_sim_kind(line.substr(5));
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                throw FormatError("similarity CSV: bad number '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    m.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
            throw FormatError("similarity CSV: matrix is not square");
        }
        for (Eigen::Index j = 0; j < n; ++j) m.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

} // namespace snecl
