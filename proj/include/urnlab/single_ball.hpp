#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "urnlab/permutation.hpp"

namespace urnlab {

// d x d doubly stochastic transition matrix of the chain followed by one
// ball: U(i,j) = P_{sigma~mu}[sigma(i) = j].
struct SingleBallMatrix {
    Eigen::MatrixXd u;
    int dim() const { return static_cast<int>(u.rows()); }
};

SingleBallMatrix single_ball_matrix(const PermutationMeasure& mu);

// Strong connectivity of the positive-entry digraph.
bool is_irreducible(const SingleBallMatrix& U);

// U+ = (U + U^T)/2.
SingleBallMatrix additive_symmetrization(const SingleBallMatrix& U);

// gamma = min{1 - Re(lambda)} over eigenvalues with non-constant
// eigenvectors. Throws DegenerateModelError when U is reducible.
double spectral_gap(const SingleBallMatrix& U);

// Spectral gap of U+; throws when U+ is reducible.
double poincare_gap(const SingleBallMatrix& U);

// Exact minimum of Q(A, A^c)/nu(A) over subsets with 0 < nu(A) <= 1/2,
// nu uniform. Exhaustive over bitmasks; requires d <= 24.
double cheeger_constant(const SingleBallMatrix& U);

struct HeavyTree {
    std::vector<std::pair<int, int>> edges;  // 0-based (i, j), directed i -> j
    std::vector<double> weights;             // U(i, j) per edge
};

// Spanning tree grown greedily so that every chosen edge has
// U(i,j) >= cheeger/d. Requires U irreducible and d <= 24.
HeavyTree heavy_spanning_tree(const SingleBallMatrix& U);

// Smallest t with max_i TV(row i of e^{rate*t*(U-I)}, uniform) <= eps,
// found by bisection on the monotone worst-case distance. Relative
// accuracy 1e-6.
double single_ball_mixing_time(const SingleBallMatrix& U, double rate, double eps);

struct SpectralReport {
    int d = 0;
    std::vector<std::complex<double>> eigenvalues;
    double gap = 0;           // gamma
    double poincare_gap = 0;  // gamma+
    double cheeger = 0;       // Phi*
    bool irreducible = false;
    bool symmetric_measure = false;
    HeavyTree tree;  // empty when reducible
};

SpectralReport analyze_measure(const PermutationMeasure& mu);

}  // namespace urnlab
