#include "urnlab/single_ball.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Eigenvalues>

#include "urnlab/errors.hpp"
#include "urnlab/exact.hpp"

namespace urnlab {

namespace {

bool strongly_connected(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    auto reach = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double e = transpose ? m(w, v) : m(v, w);
                if (e > 0 && !seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(false) && reach(true);
}

}  // namespace

SingleBallMatrix single_ball_matrix(const PermutationMeasure& mu) {
    const int d = mu.degree();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
    for (const auto& atom : mu.atoms())
        for (int i = 0; i < d; ++i) u(i, atom.perm(i)) += atom.weight;
    return {std::move(u)};
}

bool is_irreducible(const SingleBallMatrix& U) { return strongly_connected(U.u); }

SingleBallMatrix additive_symmetrization(const SingleBallMatrix& U) {
    return {0.5 * (U.u + U.u.transpose())};
}

double spectral_gap(const SingleBallMatrix& U) {
    if (!is_irreducible(U))
        throw DegenerateModelError("single-ball matrix is reducible: spectral gap is 0");
    const int d = U.dim();
    Eigen::EigenSolver<Eigen::MatrixXd> es(U.u);
    const auto& vals = es.eigenvalues();
    const auto& vecs = es.eigenvectors();

    // Drop exactly one eigenvalue-1 occurrence, the one whose eigenvector is
    // closest to constant. For irreducible U that is the Perron eigenvalue.
    int drop = -1;
    double best_align = -1;
    for (int k = 0; k < d; ++k) {
        if (std::abs(vals(k) - std::complex<double>(1, 0)) > 1e-9) continue;
        Eigen::VectorXcd v = vecs.col(k);
        double align = std::abs(v.sum()) / (std::sqrt(double(d)) * v.norm());
        if (align > best_align) {
            best_align = align;
            drop = k;
        }
    }
    if (drop < 0) {
        // no eigenvalue near 1 found at all; fall back to the closest one
        double bd = std::numeric_limits<double>::infinity();
        for (int k = 0; k < d; ++k) {
            double dist = std::abs(vals(k) - std::complex<double>(1, 0));
            if (dist < bd) {
                bd = dist;
                drop = k;
            }
        }
    }
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k) {
        if (k == drop) continue;
        gap = std::min(gap, 1.0 - vals(k).real());
    }
    return gap;
}

double poincare_gap(const SingleBallMatrix& U) {
    SingleBallMatrix up = additive_symmetrization(U);
    if (!is_irreducible(up))
        throw DegenerateModelError("additive symmetrisation is reducible");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(up.u);
    const auto& w = es.eigenvalues();  // ascending
    const int d = U.dim();
    return 1.0 - w(d - 2);
}

double cheeger_constant(const SingleBallMatrix& U) {
    const int d = U.dim();
    if (d > 24) throw CapExceededError("cheeger enumeration capped at d <= 24");
    const std::uint32_t full = (1u << d) - 1u;
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        int size = std::popcount(mask);
        if (2 * size > d) continue;  // nu(A) = |A|/d must be <= 1/2
        double flow = 0;             // sum over i in A, j not in A of U(i,j)
        for (int i = 0; i < d; ++i) {
            if (!(mask & (1u << i))) continue;
            for (int j = 0; j < d; ++j)
                if (!(mask & (1u << j))) flow += U.u(i, j);
        }
        best = std::min(best, flow / size);  // (flow/d) / (size/d)
    }
    return best;
}

HeavyTree heavy_spanning_tree(const SingleBallMatrix& U) {
    if (!is_irreducible(U))
        throw DegenerateModelError("heavy spanning tree requires an irreducible matrix");
    const int d = U.dim();
    const double phi = cheeger_constant(U);
    const double threshold = phi / d;

    HeavyTree tree;
    std::vector<char> in_tree(static_cast<std::size_t>(d), 0);
    in_tree[0] = 1;
    for (int step = 1; step < d; ++step) {
        int bi = -1, bj = -1;
        double bw = -1;
        for (int i = 0; i < d; ++i) {
            if (!in_tree[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < d; ++j) {
                if (in_tree[static_cast<std::size_t>(j)]) continue;
                if (U.u(i, j) > bw) {
                    bw = U.u(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bw + 1e-12 < threshold)
            throw std::logic_error("heavy spanning tree construction failed");
        in_tree[static_cast<std::size_t>(bj)] = 1;
        tree.edges.emplace_back(bi, bj);
        tree.weights.push_back(bw);
    }
    return tree;
}

double single_ball_mixing_time(const SingleBallMatrix& U, double rate, double eps) {
    if (!is_irreducible(U))
        throw DegenerateModelError("single-ball chain is reducible: never mixes");
    if (eps <= 0 || eps >= 1) throw ConfigError("eps must lie in (0,1)");
    const int d = U.dim();
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(d, 1.0 / d);
    auto dist = [&](double t) {
        Eigen::MatrixXd h = heat_kernel_matrix(U.u, rate * t);
        double worst = 0;
        for (int i = 0; i < d; ++i)
            worst = std::max(worst, total_variation(h.row(i).transpose(), uniform));
        return worst;
    };
    if (dist(0.0) <= eps) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (dist(hi) > eps) {
        lo = hi;
        hi *= 2;
        if (hi > 1e12) throw DegenerateModelError("single-ball mixing time diverges");
    }
    while (hi - lo > 1e-6 * hi) {
        double mid = 0.5 * (lo + hi);
        (dist(mid) > eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SpectralReport analyze_measure(const PermutationMeasure& mu) {
    SpectralReport r;
    r.d = mu.degree();
    SingleBallMatrix U = single_ball_matrix(mu);
    Eigen::EigenSolver<Eigen::MatrixXd> es(U.u);
    for (int k = 0; k < r.d; ++k) r.eigenvalues.push_back(es.eigenvalues()(k));
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() > b.real();
                  return a.imag() > b.imag();
              });
    r.irreducible = is_irreducible(U);
    r.symmetric_measure = mu.is_symmetric();
    r.cheeger = cheeger_constant(U);
    if (r.irreducible) {
        r.gap = spectral_gap(U);
        r.poincare_gap = poincare_gap(U);
        r.tree = heavy_spanning_tree(U);
    }
    return r;
}

}  // namespace urnlab
