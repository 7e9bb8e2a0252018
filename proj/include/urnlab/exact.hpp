#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "urnlab/kernels.hpp"
#include "urnlab/statespace.hpp"

namespace urnlab {

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// delta_x e^{t(P-I)} by uniformization: Poisson-weighted powers of P,
// truncated once the Poisson tail drops below tol. The result sums to 1
// within tol.
Eigen::VectorXd heat_kernel_row(const Eigen::MatrixXd& p, int x, double t,
                                double tol = 1e-12);

// Full e^{t(P-I)}. Uniformization evaluates a base segment; larger times
// are reached by exact semigroup squaring of the (stochastic) base matrix.
Eigen::MatrixXd heat_kernel_matrix(const Eigen::MatrixXd& p, double t,
                                   double tol = 1e-12);

inline Eigen::VectorXd heat_kernel_row(const StochasticMatrix& p, int x, double t,
                                       double tol = 1e-12) {
    return heat_kernel_row(p.p, x, t, tol);
}

// d(t) = max over start states of TV(heat_kernel_row, pi).
double worst_case_tv(const StochasticMatrix& p, const StationaryTable& pi, double t,
                     double tol = 1e-12);

struct TVCurve {
    std::vector<double> times;
    std::vector<double> worst_case_tv;
};

// Worst-case TV sampled at the given times (sorted internally). Heat
// kernels are advanced incrementally along the grid.
TVCurve tv_curve(const StochasticMatrix& p, const StationaryTable& pi,
                 std::vector<double> times, double tol = 1e-12);

// inf{t : d(t) <= eps}, by bisection on the monotone worst-case distance.
double mixing_time(const StochasticMatrix& p, const StationaryTable& pi, double eps,
                   double rel_acc = 1e-4);

// inf{t : max_{x,y} |H_t(x,y)/pi(y) - 1| <= eps}.
double linf_mixing_time(const StochasticMatrix& p, const StationaryTable& pi,
                        double eps, double rel_acc = 1e-4);

// Spectral gap 1 - lambda_2 of a reversible kernel, via the symmetric
// similarity D^{1/2} P D^{-1/2}. Throws on nonreversible input.
double spectral_gap_reversible(const StochasticMatrix& p, const StationaryTable& pi);

double relaxation_time(const StochasticMatrix& p, const StationaryTable& pi);

// <(I-P)f, g>_pi.
double dirichlet_form(const StochasticMatrix& p, const StationaryTable& pi,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g);

// Smallest eigenvalue of the pi-symmetrized Dirichlet operator restricted
// to functions vanishing off A. Nonreversible inputs are symmetrized.
double spectral_profile_set(const StochasticMatrix& p, const StationaryTable& pi,
                            const std::vector<int>& a);

struct ProfilePoint {
    double delta = 0;
    double lambda = 0;           // Lambda(delta)
    double lambda_modified = 0;  // variance-normalized variant
};

// Exhaustive minimization over supports with pi(supp) <= delta. Requires
// the state count to be at most cap.
ProfilePoint spectral_profile(const StochasticMatrix& p, const StationaryTable& pi,
                              double delta, int cap = 18);

struct CanonicalPath {
    int from = 0;
    int to = 0;
    std::vector<std::pair<int, int>> edges;  // directed target edges
};

using PathFamily = std::vector<CanonicalPath>;

struct ComparisonReport {
    double congestion = 0;  // B
    int max_path_length = 0;
    int max_edge_load = 0;           // most paths through a single target edge
    double dirichlet_residual = 0;   // worst violation of E_src <= B * E_tgt
};

// Deterministic BFS shortest paths (neighbours scanned in index order) on
// the positive-entry digraph of the target kernel, one per source edge.
PathFamily bfs_path_family(const StochasticMatrix& target, const StochasticMatrix& source);

// Congestion ratio B of the path family, plus a Dirichlet-form comparison
// check E_source(f) <= B * E_target(f) over random probe functions. Both
// chains must share the stationary table pi.
ComparisonReport congestion_ratio(const StochasticMatrix& target,
                                  const StochasticMatrix& source,
                                  const StationaryTable& pi,
                                  const PathFamily* paths = nullptr,
                                  int probe_count = 100, std::uint64_t probe_seed = 7);

// Left fixed point of P by dense linear solve; residual below 1e-12.
StationaryTable stationary_from_kernel(const StochasticMatrix& p);

struct CutoffRow {
    int n = 0;
    double t_mix_lo = 0;   // t_mix(eps)
    double t_mix_hi = 0;   // t_mix(1-eps)
    double ratio = 0;      // t_mix(eps)/t_mix(1-eps)
    double predicted = 0;  // t_mix(eps) / (m n t_single(1/sqrt(n)))
};

std::vector<CutoffRow> cutoff_ratio_scan(Variant variant, int d, int m,
                                         const PermutationMeasure& mu,
                                         const std::vector<int>& n_values, double eps,
                                         std::size_t state_cap = 2'000'000,
                                         std::size_t work_cap = 400'000'000);

}  // namespace urnlab
