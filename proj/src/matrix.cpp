#include "snecl/matrix.hpp"

#include "snecl/error.hpp"

#include <cmath>
#include <sstream>

namespace snecl {

bool all_finite(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i])) return false;
    }
    return true;
}

void require_finite(const Matrix& m, const std::string& what) {
    if (!all_finite(m)) throw NumericError(what + " contains non-finite values");
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << what << ": expected shape " << rows << "x" << cols << ", got " << m.rows() << "x"
           << m.cols();
        throw ValidationError(os.str());
    }
}

Matrix interleave_pairs(const Matrix& anchors, const Matrix& views) {
    require_shape(views, anchors.rows(), anchors.cols(), "views");
    Matrix out(2 * anchors.rows(), anchors.cols());
    for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
        out.row(2 * i) = anchors.row(i);
        out.row(2 * i + 1) = views.row(i);
    }
    return out;
}

std::pair<Matrix, Matrix> split_pairs(const Matrix& stacked) {
    detail::require(stacked.rows() % 2 == 0, "split_pairs: odd number of rows");
    const Eigen::Index n = stacked.rows() / 2;
    Matrix a(n, stacked.cols());
    Matrix v(n, stacked.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        a.row(i) = stacked.row(2 * i);
        v.row(i) = stacked.row(2 * i + 1);
    }
    return {std::move(a), std::move(v)};
}

Matrix pairwise_sq_dists(const Matrix& z) {
    const Eigen::Index n = z.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                const double diff = z(i, c) - z(j, c);
                s += diff * diff;
            }
            d(i, j) = s;
            d(j, i) = s;
        }
    }
    return d;
}

Matrix normalize_rows(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double norm = z.row(i).norm();
        if (!(norm > 0.0)) {
            throw ValidationError("row " + std::to_string(i) + " has zero norm");
        }
        out.row(i) = z.row(i) / norm;
    }
    return out;
}

} // namespace snecl
