#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "urnlab/permutation.hpp"
#include "urnlab/statespace.hpp"

namespace urnlab {

enum class Variant {
    Generalised,
    Balanced,
    Labeled,
    MeanField,
    Shuffle,
    RestrictedShuffle,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// Model parameters. mean_field forces mu to the uniform transposition
// measure; balanced forces m = d with per-urn and per-colour count n.
struct ChainSpec {
    Variant variant = Variant::Generalised;
    int d = 2;
    int m = 2;
    int n = 1;
    PermutationMeasure mu;

    static ChainSpec make(Variant variant, int d, int m, int n,
                          const PermutationMeasure* mu);
    // Margins of the count projection: generalised/mean_field use
    // (d, m, n); balanced/labeled/shuffle use the balanced (d, n) margins.
    Margins margins() const;
};

// Dense row-stochastic matrix over an indexed state space.
struct StochasticMatrix {
    Eigen::MatrixXd p;
    int size() const { return static_cast<int>(p.rows()); }
    void validate(double tol = 1e-12) const;
};

// One-step kernel of the unlabeled chain:
//   P(x,y) = sum_sigma mu(sigma) sum_{c in [m]^d} prod_i x(i,c_i)/urn_size
//            * 1{move(x,c,sigma) = y},
// where move removes a ball of colour c_i from urn i and adds it to urn
// sigma(i), all simultaneously.
StochasticMatrix build_kernel(const ChainSpec& spec, const StateSpace& space,
                              std::size_t work_cap = 400'000'000);

// Labeled dynamics: one ball chosen uniformly per urn, moved per sigma.
StochasticMatrix build_labeled_kernel(const ChainSpec& spec, const LabeledSpace& space);

// Multi-stack shuffle: per step each drawn stack loses a uniform card which
// is inserted at a uniform position (n slots) of stack sigma(i); untouched
// cards keep their relative order. The restricted variant draws only from
// stacks with sigma(i) != i.
StochasticMatrix build_shuffle_kernel(const ChainSpec& spec, const OrderedDeckSpace& space);

// Keeps transitions inside A; escaping mass is added to the diagonal.
// Output states are indexed by position in A (ascending).
StochasticMatrix restrict_kernel(const StochasticMatrix& p, const std::vector<int>& a);

// Chain watched only on A: P_ind = P_AA + P_AC (I - P_CC)^{-1} P_CA.
StochasticMatrix induce(const StochasticMatrix& p, const std::vector<int>& a);

// Collapses A into a single state placed last, after S\A in ascending
// order. Returns the kernel and its stationary table.
std::pair<StochasticMatrix, StationaryTable> collapse(const StochasticMatrix& p,
                                                      const StationaryTable& pi,
                                                      const std::vector<int>& a);

// Modified chain on macro: collapsed complement deleted, escape mass
// redirected to pi restricted to macro, everything damped by 1/(p+1), and
// in-boundary edges of weight Q(macro^c, y)/((p+1) pi(macro)) added.
StochasticMatrix modify(const StochasticMatrix& p, const StationaryTable& pi,
                        const std::vector<int>& macro);

// R+ = (R + R~)/2 with R~(x,y) = pi(y) R(y,x) / pi(x). Requires pi
// stationary for p (residual below 1e-9).
StochasticMatrix additive_reversibilization(const StochasticMatrix& p,
                                            const StationaryTable& pi);

bool reversibility_check(const StochasticMatrix& p, const StationaryTable& pi,
                         double tol = 1e-12);

double detailed_balance_residual(const StochasticMatrix& p, const StationaryTable& pi);

bool kernel_irreducible(const StochasticMatrix& p);

// Max over fine states x and coarse classes c of
// |sum_{y: proj(y)=c} P_fine(x,y) - P_coarse(proj(x), c)|.
double lumping_check(const StochasticMatrix& fine, const std::vector<int>& projection,
                     const StochasticMatrix& coarse);

// Q(x,y) = pi(x) P(x,y).
Eigen::MatrixXd edge_measure(const StochasticMatrix& p, const StationaryTable& pi);

// Q(A, B) for index sets.
double edge_flow(const StochasticMatrix& p, const StationaryTable& pi,
                 const std::vector<int>& a, const std::vector<int>& b);

double stationarity_residual_l1(const StochasticMatrix& p, const StationaryTable& pi);

}  // namespace urnlab
