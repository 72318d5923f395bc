#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>

namespace snecl {

/// Dense row-major real matrix; the carrier for data, features and similarities.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

bool all_finite(const Matrix& m);

/// Throws NumericError naming `what` when `m` holds a NaN or infinity.
void require_finite(const Matrix& m, const std::string& what);

/// Throws ValidationError unless `m` is rows x cols.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what);

/// Stacks positive pairs as rows 2i = anchors_i, 2i+1 = views_i.
Matrix interleave_pairs(const Matrix& anchors, const Matrix& views);

/// Inverse of interleave_pairs.
std::pair<Matrix, Matrix> split_pairs(const Matrix& stacked);

/// Pairwise squared Euclidean distances, computed entry by entry (exactly symmetric, zero diagonal).
Matrix pairwise_sq_dists(const Matrix& z);

/// Rows scaled to unit norm; throws ValidationError on a zero row.
Matrix normalize_rows(const Matrix& z);

} // namespace snecl
