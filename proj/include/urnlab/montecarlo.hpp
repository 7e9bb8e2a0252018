#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "urnlab/kernels.hpp"
#include "urnlab/permutation.hpp"
#include "urnlab/statespace.hpp"

namespace urnlab {

// Per-replicate random stream derived from (master seed, stream id); no
// shared state, so replicate output is independent of the thread count.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream);

    std::uint64_t bits();
    double uniform01();           // [0, 1)
    double exponential();         // rate 1
    std::uint64_t below(std::uint64_t n);  // unbiased uniform in [0, n)
    double gaussian();

private:
    std::uint64_t s_[4];
};

// Categorical sampler over the integer weights of one urn row. Linear scan
// for small m; alias table, rebuilt lazily after the row changes, above
// kAliasThreshold colours.
class UrnSampler {
public:
    static constexpr int kAliasThreshold = 8;

    UrnSampler(const int* row, int colours, int total);
    int sample(RngStream& rng);
    void mark_dirty() { dirty_ = true; }

private:
    void rebuild();
    const int* row_;
    int colours_;
    int total_;
    bool dirty_ = true;
    std::vector<double> accept_;
    std::vector<int> alias_;
};

struct SimState {
    Configuration counts;
    double clock = 0;
    std::uint64_t jumps = 0;
};

SimState make_sim_state(const Configuration& start);

// One chain step: advance the clock by Exp(1), draw one ball per urn
// (categorically by counts), sample sigma ~ mu, move all drawn balls
// simultaneously.
void mc_step(SimState& state, const Margins& margins, const PermutationMeasure& mu,
             RngStream& rng);

// Colour-1 balls fill urn 1, then urn 2, ...; remaining cells are filled
// greedily by colour index to meet the margins.
Configuration adversarial_start(const Margins& margins);

Configuration balanced_start(const Margins& margins);

struct HittingSample {
    std::vector<double> times;  // one entry per replicate, in replicate order
    std::uint64_t seed = 0;
    bool truncated = false;  // some replicate exhausted the step budget
};

HittingSample hitting_time_centre(const ChainSpec& spec, const CentreSpec& centre,
                                  const Configuration& start, int replicates,
                                  std::uint64_t seed,
                                  std::uint64_t step_budget = 1'000'000'000ULL,
                                  unsigned threads = 1);

struct OccupationSample {
    std::vector<double> fractions;
    std::uint64_t seed = 0;
    bool truncated = false;
};

OccupationSample occupation_fraction(const ChainSpec& spec, const CentreSpec& centre,
                                     const Configuration& start, double horizon,
                                     int replicates, std::uint64_t seed,
                                     std::uint64_t step_budget = 1'000'000'000ULL,
                                     unsigned threads = 1);

struct VarianceTable {
    Eigen::MatrixXd variance;       // d x m, per cell
    Eigen::MatrixXd standard_error; // jackknife
};

VarianceTable variance_probe(const ChainSpec& spec, const Configuration& start, double t,
                             int replicates, std::uint64_t seed, unsigned threads = 1);

// Empirical P(tau_N <= eps*N^2/alpha | Z_0 = 1) for the rate-1 reflected
// walk on [N] with bias alpha/N (endpoint self-loops carry the blocked
// move's probability).
double biased_walk_exit(int n_sites, double alpha, double eps, int replicates,
                        std::uint64_t seed, unsigned threads = 1);

// One-step empirical frequencies from `steps` independent single steps out
// of `start`; counts indexed by the target state in `space`.
std::vector<long> one_step_frequencies(const ChainSpec& spec, const StateSpace& space,
                                       const Configuration& start, long steps,
                                       std::uint64_t seed);

// Stepping simulator for the multi-stack shuffles; exposes the card stacks
// so callers can project states after each step.
class ShuffleSimulator {
public:
    ShuffleSimulator(const ChainSpec& spec, std::uint64_t seed);

    void step();
    const std::vector<std::vector<int>>& stacks() const { return stacks_; }
    // Count projection onto the balanced space: colour of card c is c/n.
    std::vector<long> projected_counts() const;
    // Ball -> stack assignment (the labeled projection).
    std::vector<std::int8_t> forget_order() const;

private:
    ChainSpec spec_;
    bool restricted_;
    RngStream rng_;
    std::vector<double> cum_weights_;
    std::vector<std::vector<int>> stacks_;
};

struct ShuffleTrajectory {
    std::vector<std::vector<int>> stacks;     // final state
    std::vector<long> projected_l1_changes;   // per step, of the count projection
    long max_l1_change = 0;
};

ShuffleTrajectory simulate_shuffle(const ChainSpec& spec, long steps, std::uint64_t seed);

double quantile(std::vector<double> values, double q);

}  // namespace urnlab
