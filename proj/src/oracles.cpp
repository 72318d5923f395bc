#include "snecl/oracles.hpp"

#include "snecl/embedopt.hpp"
#include "snecl/error.hpp"
#include "snecl/losses.hpp"
#include "snecl/optim.hpp"
#include "snecl/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace snecl {

namespace {

std::vector<Permutation> argmin_set(const std::vector<double>& values,
                                    const std::vector<Permutation>& perms, double tol) {
    const double best = *std::min_element(values.begin(), values.end());
    const double slack = tol * std::max(1.0, std::abs(best));
    std::vector<Permutation> out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] <= best + slack) out.push_back(perms[k]);
    }
    return out;
}

std::vector<Permutation> all_permutations(int n) {
    Permutation p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::vector<Permutation> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

Matrix pairwise_dists(const Matrix& x) {
    return pairwise_sq_dists(x).cwiseSqrt();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

} // namespace

Theorem1Verdict theorem1_oracle(const Matrix& x, const Matrix& z, double tol) {
    const Eigen::Index n = x.rows();
    detail::require(n >= 2 && n <= 8, "theorem1 oracle: n must be in [2, 8]");
    detail::require(z.rows() == n, "theorem1 oracle: X and Z differ in row count");
    const Matrix dx = pairwise_dists(x);
    const Matrix dz = pairwise_dists(z);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            detail::require(dx(i, j) > 0.0, "theorem1 oracle: duplicate data points " +
                                                std::to_string(i) + " and " + std::to_string(j));
        }
    }

    const auto perms = all_permutations(static_cast<int>(n));
    std::vector<double> c1(perms.size());
    std::vector<double> frob_sq(perms.size());
    std::vector<double> frob(perms.size());
    std::vector<double> gap(perms.size());
    for (std::size_t k = 0; k < perms.size(); ++k) {
        const Permutation& pi = perms[k];
        double a = 0.0;
        double b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double p = -dx(i, j);
                const double q = -dz(pi[static_cast<std::size_t>(i)], pi[static_cast<std::size_t>(j)]);
                const double pbar = -1.0 / p;
                a += q / p;
                b += (pbar - q) * (pbar - q);
            }
        }
        c1[k] = a;
        frob_sq[k] = b;
        frob[k] = std::sqrt(b);
        gap[k] = b - 2.0 * a;
    }

    Theorem1Verdict v;
    v.argmin_c1 = argmin_set(c1, perms, tol);
    v.argmin_frob_sq = argmin_set(frob_sq, perms, tol);
    v.argmin_frob = argmin_set(frob, perms, tol);
    v.sets_identical = v.argmin_c1 == v.argmin_frob_sq;
    v.unsquared_identical = v.argmin_frob == v.argmin_frob_sq;
    const auto [lo, hi] = std::minmax_element(gap.begin(), gap.end());
    v.identity_spread = *hi - *lo;
    v.identity_value = gap.front(); // perms[0] is the identity
    return v;
}

RearrangementVerdict rearrangement_oracle(std::span<const double> x, std::span<const double> y,
                                          double tol) {
    const std::size_t m = x.size();
    detail::require(m >= 1 && m <= 8, "rearrangement oracle: length must be in [1, 8]");
    detail::require(y.size() == m, "rearrangement oracle: x and y differ in length");
    for (const auto seq : {x, y}) {
        double ss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            detail::require(seq[i] > 0.0, "rearrangement oracle: entries must be positive");
            detail::require(i == 0 || seq[i] > seq[i - 1],
                            "rearrangement oracle: sequences must be strictly ascending");
            ss += seq[i] * seq[i];
        }
        detail::require(std::abs(ss - 1.0) < 1e-9,
                        "rearrangement oracle: sequences must have unit sum of squares");
    }

    const auto perms = all_permutations(static_cast<int>(m));
    std::vector<double> ratio(perms.size());
    std::vector<double> sq(perms.size());
    for (std::size_t k = 0; k < perms.size(); ++k) {
        double r = 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double yp = y[static_cast<std::size_t>(perms[k][i])];
            r += yp / x[i];
            s += (x[i] - yp) * (x[i] - yp);
        }
        ratio[k] = r;
        sq[k] = s;
    }
    RearrangementVerdict v;
    v.min_ratio = *std::min_element(ratio.begin(), ratio.end());
    v.min_sq = *std::min_element(sq.begin(), sq.end());
    v.identity_minimizes_ratio = ratio.front() <= v.min_ratio + tol * std::max(1.0, v.min_ratio);
    v.identity_minimizes_sq = sq.front() <= v.min_sq + tol * std::max(1.0, v.min_sq);
    return v;
}

std::vector<double> random_ascending_unit(std::size_t m, Rng& rng) {
    detail::require(m >= 1, "random_ascending_unit: m must be >= 1");
    std::vector<double> v;
    for (;;) {
        v.clear();
        for (std::size_t i = 0; i < m; ++i) v.push_back(0.05 + rng.uniform());
        std::sort(v.begin(), v.end());
        if (std::adjacent_find(v.begin(), v.end()) == v.end()) break;
    }
    double norm = 0.0;
    for (double a : v) norm += a * a;
    norm = std::sqrt(norm);
    for (double& a : v) a /= norm;
    return v;
}

double equivalence_residual(std::size_t n, std::size_t dim, Rng& rng) {
    detail::require(n >= 2 && dim >= 1, "equivalence check: needs n >= 2 and dim >= 1");
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(dim);
    Matrix a(rows, cols);
    Matrix v(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    const SimMatrix p = p_positive_pairs(n);
    const SimMatrix q = q_gaussian_conditional(interleave_pairs(a, v), Similarity::cosine, 1.0);
    return kl_match(p, q) - infonce(a, v, 1.0, Similarity::cosine) -
           std::log(1.0 / (2.0 * static_cast<double>(n)));
}

void DiscreteDomain::validate() const {
    const auto g = static_cast<Eigen::Index>(density.size());
    detail::require(g >= 2, "domain: needs at least two cells");
    require_shape(conditional, g, g, "domain conditional");
    double total = 0.0;
    for (std::size_t k = 0; k < density.size(); ++k) {
        detail::require(density[k] > 0.0 && std::isfinite(density[k]),
                        "domain: cell " + std::to_string(k) + " has zero density");
        total += density[k];
    }
    detail::require(std::abs(total - 1.0) < 1e-10, "domain: density must sum to 1");
    for (Eigen::Index i = 0; i < g; ++i) {
        detail::require((conditional.row(i).array() >= 0.0).all(),
                        "domain: conditional entries must be >= 0");
        detail::require(std::abs(conditional.row(i).sum() - 1.0) < 1e-10,
                        "domain: conditional row " + std::to_string(i) + " must sum to 1");
    }
}

DiscreteDomain make_grid_domain(std::size_t cells, double kernel_width) {
    detail::require(cells >= 2, "grid domain: needs at least two cells");
    detail::require(kernel_width > 0.0, "grid domain: kernel width must be > 0");
    const auto g = static_cast<Eigen::Index>(cells);
    std::vector<double> xs(cells);
    for (std::size_t k = 0; k < cells; ++k) xs[k] = -1.0 + 2.0 * static_cast<double>(k) / (cells - 1);

    DiscreteDomain d;
    double total = 0.0;
    for (double x : xs) {
        const double mass = std::exp(-12.5 * (x - 0.4) * (x - 0.4)) +
                            0.6 * std::exp(-8.0 * (x + 0.5) * (x + 0.5)) + 0.05;
        d.density.push_back(mass);
        total += mass;
    }
    for (double& m : d.density) m /= total;

    d.conditional.resize(g, g);
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index j = 0; j < g; ++j) {
            const double diff = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
            d.conditional(i, j) = std::exp(-0.5 * diff * diff / (kernel_width * kernel_width));
        }
        d.conditional.row(i) /= d.conditional.row(i).sum();
    }
    return d;
}

CeTerms ce_terms(const DiscreteDomain& domain, const Matrix& features, double t_df, double tau) {
    domain.validate();
    const auto g = static_cast<Eigen::Index>(domain.density.size());
    require_shape(features, g, features.cols(), "domain features");
    detail::require(t_df > 0.0 && tau > 0.0, "ce_terms: t_df and tau must be > 0");
    const double c = tau * t_df;
    const double a = (t_df + 1.0) / 2.0;
    const Matrix d2 = pairwise_sq_dists(features);

    CeTerms t;
    for (Eigen::Index i = 0; i < g; ++i) {
        const double px = domain.density[static_cast<std::size_t>(i)];
        // log w(f(x), f(x')) for every x'.
        std::vector<double> log_w(static_cast<std::size_t>(g));
        double cf = 0.0;
        for (Eigen::Index j = 0; j < g; ++j) {
            log_w[static_cast<std::size_t>(j)] = -a * std::log1p(d2(i, j) / c);
            cf += domain.density[static_cast<std::size_t>(j)] * std::exp(log_w[static_cast<std::size_t>(j)]);
        }
        const double log_cf = std::log(cf);
        double h = 0.0;
        double la = 0.0;
        for (Eigen::Index j = 0; j < g; ++j) {
            const double pc = domain.conditional(i, j);
            if (pc == 0.0) continue;
            const double log_q =
                std::log(domain.density[static_cast<std::size_t>(j)]) + log_w[static_cast<std::size_t>(j)] - log_cf;
            h -= pc * log_q;
            la -= pc * log_w[static_cast<std::size_t>(j)];
        }
        t.expected_ce += px * h;
        t.align += px * la;
        t.uniform += px * log_cf;
    }
    t.residual = t.expected_ce - (t.align + t.uniform);
    return t;
}

double ce_constant(const DiscreteDomain& domain) {
    domain.validate();
    double c = 0.0;
    for (std::size_t i = 0; i < domain.density.size(); ++i) {
        for (std::size_t j = 0; j < domain.density.size(); ++j) {
            const double pc = domain.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            c -= domain.density[i] * pc * std::log(domain.density[j]);
        }
    }
    return c;
}

CeCheck ce_decomposition_check(const DiscreteDomain& domain, std::span<const Matrix> features,
                               double t_df, double tau) {
    detail::require(!features.empty(), "ce check: needs at least one feature assignment");
    CeCheck out;
    for (const Matrix& f : features) out.residuals.push_back(ce_terms(domain, f, t_df, tau).residual);
    const auto [lo, hi] = std::minmax_element(out.residuals.begin(), out.residuals.end());
    out.spread = *hi - *lo;
    out.constant = ce_constant(domain);
    return out;
}

std::vector<GradientCase> loss_gradient_cases(std::size_t instances, Rng& rng) {
    struct Case {
        std::string name;
        LossSpec spec;
        bool paired = true;
    };
    std::vector<Case> cases;
    auto add = [&](std::string name, LossKind kind, Similarity sim, double tau) {
        LossSpec s;
        s.kind = kind;
        s.sim = sim;
        s.tau = tau;
        cases.push_back({std::move(name), s, true});
    };
    add("infonce/cosine", LossKind::infonce, Similarity::cosine, 0.5);
    add("infonce/neg_sq_euclidean", LossKind::infonce, Similarity::neg_sq_euclidean, 0.7);
    add("infonce/inner_product", LossKind::infonce, Similarity::inner_product, 0.7);
    add("infonce_weighted/cosine", LossKind::infonce_weighted, Similarity::cosine, 0.5);
    add("infonce_weighted/neg_sq_euclidean", LossKind::infonce_weighted,
        Similarity::neg_sq_euclidean, 1.0);
    add("infonce_unnormalized/inner_product", LossKind::infonce_unnormalized,
        Similarity::inner_product, 0.8);
    add("infonce_unnormalized/neg_sq_euclidean", LossKind::infonce_unnormalized,
        Similarity::neg_sq_euclidean, 0.8);
    for (double t_df : {1.0, 5.0}) {
        LossSpec s;
        s.kind = LossKind::t_simclr;
        s.t_df = t_df;
        s.tau = 0.8;
        cases.push_back({"t_simclr/t_df=" + std::to_string(static_cast<int>(t_df)), s, true});
    }
    for (Similarity sim : {Similarity::cosine, Similarity::neg_sq_euclidean, Similarity::inner_product}) {
        LossSpec s;
        s.kind = LossKind::sne_kl;
        s.q = QBuilder::gaussian(sim, 0.6);
        cases.push_back({"sne_kl/gaussian/" + to_string(sim), s, true});
    }
    {
        LossSpec s;
        s.kind = LossKind::sne_kl;
        s.q = QBuilder::student_t(1.0, 1.0);
        cases.push_back({"sne_kl/t_joint/t_df=1", s, true});
        s.q = QBuilder::student_t(3.0, 0.5);
        cases.push_back({"sne_kl/t_joint/t_df=3/dense", s, false});
    }

    std::vector<GradientCase> results;
    for (const Case& c : cases) {
        GradientCase gc{c.name, 0.0};
        for (std::size_t inst = 0; inst < instances; ++inst) {
            const Eigen::Index n = 4;
            const Eigen::Index d = 3;
            Matrix a(n, d);
            Matrix v(n, d);
            for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
            for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
            std::vector<double> weights;
            for (Eigen::Index i = 0; i < n; ++i) weights.push_back(0.2 + 1.6 * rng.uniform());

            SimMatrix target;
            LossAux aux;
            aux.weights = weights;
            Matrix views = v;
            if (c.spec.kind == LossKind::sne_kl) {
                if (c.paired) {
                    target = p_positive_pairs(static_cast<std::size_t>(n));
                } else {
                    views = Matrix();
                    Matrix x(n, 5);
                    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
                    target = p_sne_conditional(x, 1.0);
                }
                aux.target = &target;
            }

            const LossEval eval = loss_grad(c.spec, a, views, aux);
            const Matrix fd_a = finite_diff_grad(
                [&](const Matrix& pa) { return loss_value(c.spec, pa, views, aux); }, a, 1e-4);
            gc.max_rel_error = std::max(gc.max_rel_error, relative_error(eval.grad_anchors, fd_a));
            if (views.size() > 0) {
                const Matrix fd_v = finite_diff_grad(
                    [&](const Matrix& pv) { return loss_value(c.spec, a, pv, aux); }, views, 1e-4);
                gc.max_rel_error = std::max(gc.max_rel_error, relative_error(eval.grad_views, fd_v));
            }
        }
        results.push_back(gc);
    }
    return results;
}

SimplexEmbeddingResult simplex_embedding_check(std::uint64_t seed) {
    constexpr std::size_t pairs = 4;
    const SimMatrix p = p_positive_pairs(pairs);
    EmbedOptions opts;
    opts.d_z = 3;
    opts.q = QBuilder::gaussian(Similarity::cosine, 0.5);
    opts.constraint = Constraint::sphere;
    opts.steps = 3000;
    opts.lr = 0.5;
    opts.momentum = 0.9;
    Rng rng(seed);
    const EmbedResult res = optimize_embedding(p, opts, rng);

    std::vector<int> labels;
    for (std::size_t i = 0; i < pairs; ++i) labels.insert(labels.end(), {static_cast<int>(i), static_cast<int>(i)});
    Matrix means(static_cast<Eigen::Index>(pairs), 3);
    for (Eigen::Index c = 0; c < means.rows(); ++c) means.row(c) = 0.5 * (res.z.row(2 * c) + res.z.row(2 * c + 1));
    means = normalize_rows(means);

    SimplexEmbeddingResult out;
    out.final_loss = res.loss_history.back();
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < means.rows(); ++j) {
            out.max_deviation = std::max(out.max_deviation, std::abs(means.row(i).dot(means.row(j)) + 1.0 / 3.0));
        }
    }
    return out;
}

std::vector<std::string> verify_suite_names() {
    return {"equivalence", "theorem1", "rearrangement", "ce_decomposition", "gradients", "tammes"};
}

namespace {

SuiteResult suite_equivalence(const VerifyOptions& o) {
    SuiteResult r{"equivalence", true, {}};
    const std::size_t draws = o.trials ? o.trials : 10;
    Rng rng = Rng(o.seed).split(1);
    for (std::size_t n : {2, 8, 64}) {
        double worst = 0.0;
        double lo = 1e300;
        double hi = -1e300;
        for (std::size_t t = 0; t < draws; ++t) {
            const double res = equivalence_residual(n, 8, rng);
            worst = std::max(worst, std::abs(res));
            lo = std::min(lo, res);
            hi = std::max(hi, res);
        }
        const bool ok = worst < 1e-10;
        r.passed = r.passed && ok;
        r.lines.push_back((ok ? "PASS" : "FAIL") + std::string(" n=") + std::to_string(n) +
                          " max|residual|=" + fmt(worst) + " spread=" + fmt(hi - lo) +
                          " constant log(1/2n)=" + std::to_string(std::log(0.5 / n)));
    }
    return r;
}

SuiteResult suite_theorem1(const VerifyOptions& o) {
    SuiteResult r{"theorem1", true, {}};
    const std::size_t trials = o.trials ? o.trials : 100;
    Rng rng = Rng(o.seed).split(2);
    std::size_t identical = 0;
    double worst_spread = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(t % 3);
        Matrix x(n, 2);
        Matrix z(n, 2);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
        const Theorem1Verdict v = theorem1_oracle(x, z);
        identical += v.sets_identical ? 1 : 0;
        worst_spread = std::max(worst_spread, v.identity_spread);
    }
    const bool sets_ok = identical == trials;
    const bool id_ok = worst_spread < 1e-9;
    r.passed = sets_ok && id_ok;
    r.lines.push_back(std::string(sets_ok ? "PASS" : "FAIL") + " argmin sets identical in " +
                      std::to_string(identical) + "/" + std::to_string(trials) + " instances");
    r.lines.push_back(std::string(id_ok ? "PASS" : "FAIL") +
                      " max spread of |Pbar - Q|^2 - 2 C1 across permutations = " + fmt(worst_spread));
    return r;
}

SuiteResult suite_rearrangement(const VerifyOptions& o) {
    SuiteResult r{"rearrangement", true, {}};
    const std::size_t trials = o.trials ? o.trials : 50;
    Rng rng = Rng(o.seed).split(3);
    std::size_t good = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t m = 3 + t % 2;
        const auto x = random_ascending_unit(m, rng);
        const auto y = random_ascending_unit(m, rng);
        const RearrangementVerdict v = rearrangement_oracle(x, y);
        good += v.identity_minimizes_ratio && v.identity_minimizes_sq ? 1 : 0;
    }
    r.passed = good == trials;
    r.lines.push_back(std::string(r.passed ? "PASS" : "FAIL") + " identity attains both minima in " +
                      std::to_string(good) + "/" + std::to_string(trials) + " instances");
    return r;
}

SuiteResult suite_ce(const VerifyOptions& o) {
    SuiteResult r{"ce_decomposition", true, {}};
    const std::size_t draws = o.trials ? o.trials : 5;
    Rng rng = Rng(o.seed).split(4);
    for (std::size_t cells : {32, 64}) {
        const DiscreteDomain dom = make_grid_domain(cells);
        std::vector<Matrix> feats;
        for (std::size_t k = 0; k < draws; ++k) {
            Matrix f(static_cast<Eigen::Index>(cells), 2);
            for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = 2.0 * rng.normal();
            feats.push_back(std::move(f));
        }
        const CeCheck c = ce_decomposition_check(dom, feats);
        const double offset = std::abs(c.residuals.front() - c.constant);
        const bool ok = c.spread < 1e-8 && offset < 1e-8;
        r.passed = r.passed && ok;
        r.lines.push_back(std::string(ok ? "PASS" : "FAIL") + " cells=" + std::to_string(cells) +
                          " residual spread=" + fmt(c.spread) + " |residual - ce_constant|=" + fmt(offset));
    }
    return r;
}

SuiteResult suite_gradients(const VerifyOptions& o) {
    SuiteResult r{"gradients", true, {}};
    Rng rng = Rng(o.seed).split(5);
    for (const GradientCase& c : loss_gradient_cases(o.trials ? o.trials : 5, rng)) {
        const bool ok = c.max_rel_error < 1e-5;
        r.passed = r.passed && ok;
        r.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + c.name +
                          " max relative error=" + fmt(c.max_rel_error));
    }
    return r;
}

SuiteResult suite_tammes(const VerifyOptions& o) {
    SuiteResult r{"tammes", true, {}};
    double worst = 0.0;
    for (std::size_t n = 2; n <= 12; ++n) {
        const UniformityScore s = uniformity_score(tammes_closed_form(n, 2));
        worst = std::max(worst, std::abs(s.min_angle_deg - 360.0 / static_cast<double>(n)));
    }
    bool ok = worst < 1e-9;
    r.passed = ok;
    r.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " polygon min angle error (deg, n=2..12)=" + fmt(worst));
    worst = 0.0;
    for (std::size_t d = 1; d <= 6; ++d) {
        for (std::size_t n = 2; n <= d + 1; ++n) {
            if (d == 2) continue;
            worst = std::max(worst, uniformity_score(tammes_closed_form(n, d)).simplex_deviation);
        }
    }
    ok = worst < 1e-12;
    r.passed = r.passed && ok;
    r.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " simplex cosine deviation (n <= d_z + 1)=" + fmt(worst));
    const SimplexEmbeddingResult e = simplex_embedding_check(o.seed);
    ok = e.max_deviation < 1e-2;
    r.passed = r.passed && ok;
    r.lines.push_back(std::string(ok ? "PASS" : "FAIL") +
                      " optimized 4 pairs on S^2: max |cos + 1/3|=" + fmt(e.max_deviation));
    return r;
}

} // namespace

SuiteResult run_verify_suite(const std::string& name, const VerifyOptions& options) {
    if (name == "equivalence") return suite_equivalence(options);
    if (name == "theorem1") return suite_theorem1(options);
    if (name == "rearrangement") return suite_rearrangement(options);
    if (name == "ce_decomposition") return suite_ce(options);
    if (name == "gradients") return suite_gradients(options);
    if (name == "tammes") return suite_tammes(options);
    throw ValidationError("unknown verify suite '" + name + "'");
}

} // namespace snecl
