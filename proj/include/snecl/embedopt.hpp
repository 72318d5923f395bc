#pragma once

#include "snecl/losses.hpp"
#include "snecl/matrix.hpp"
#include "snecl/rng.hpp"
#include "snecl/similarity.hpp"

#include <cstddef>
#include <vector>

namespace snecl {

enum class Constraint { sphere, euclidean };

std::string to_string(Constraint c);
Constraint parse_constraint(const std::string& name);

struct EmbedOptions {
    std::size_t d_z = 2;
    QBuilder q;
    Constraint constraint = Constraint::sphere;
    std::size_t steps = 500;
    double lr = 0.1;
    double momentum = 0.9;

    void validate() const;
};

struct EmbedResult {
    Matrix z;
    std::vector<double> loss_history; // one entry per step, before the update
};

/// Direct descent on kl_match(P, q.build(Z)) over the rows of Z.
/// Rows start i.i.d. N(0, 1e-2 I). Under the sphere constraint every row is
/// renormalized after each step. Throws NumericError on a non-finite loss.
EmbedResult optimize_embedding(const SimMatrix& p, const EmbedOptions& options, Rng& rng);

/// Rows scaled to unit norm; throws ValidationError on a zero row.
Matrix project_sphere(const Matrix& z);

/// Regular n-gon on the unit circle (d_z = 2), or a regular (n-1)-simplex
/// inscribed in the unit sphere (n <= d_z + 1). Other combinations throw.
/// For d_z = 2 and n <= 3 both families coincide; the polygon is returned.
Matrix tammes_closed_form(std::size_t n, std::size_t d_z);

struct UniformityScore {
    double min_angle_deg = 0.0;     // smallest pairwise angle
    double simplex_deviation = 0.0; // max_{i != j} |cos_ij + 1/(n-1)|
};

/// Requires unit rows (1e-8) and n >= 2.
UniformityScore uniformity_score(const Matrix& z);

/// Angles of 2-D points (in degrees, [0, 360)) sorted ascending, and the
/// n gaps between consecutive angles including the wrap-around gap.
std::vector<double> circular_gaps_deg(const Matrix& z2);

} // namespace snecl
