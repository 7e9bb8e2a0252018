#include "urnlab/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "urnlab/errors.hpp"
#include "urnlab/parallel.hpp"

namespace urnlab {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl64(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t x = master_seed ^ (stream * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL);
    for (auto& word : s_) word = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::bits() {
    // xoshiro256++
    std::uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double RngStream::uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

double RngStream::exponential() { return -std::log1p(-uniform01()); }

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0) throw ConfigError("below(0) is undefined");
    std::uint64_t mask = std::bit_ceil(n) - 1;
    std::uint64_t v;
    do {
        v = bits() & mask;
    } while (v >= n);
    return v;
}

double RngStream::gaussian() {
    double u1;
    do {
        u1 = uniform01();
    } while (u1 <= 0);
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

UrnSampler::UrnSampler(const int* row, int colours, int total)
    : row_(row), colours_(colours), total_(total) {}

int UrnSampler::sample(RngStream& rng) {
    if (colours_ <= kAliasThreshold) {
        // exact integer scan
        auto r = static_cast<long long>(rng.below(static_cast<std::uint64_t>(total_)));
        for (int j = 0; j < colours_; ++j) {
            r -= row_[j];
            if (r < 0) return j;
        }
        return colours_ - 1;  // unreachable for consistent totals
    }
    if (dirty_) rebuild();
    auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(colours_)));
    return rng.uniform01() < accept_[static_cast<std::size_t>(k)]
               ? k
               : alias_[static_cast<std::size_t>(k)];
}

void UrnSampler::rebuild() {
    // Vose alias construction over the current integer weights.
    const int m = colours_;
    accept_.assign(static_cast<std::size_t>(m), 1.0);
    alias_.assign(static_cast<std::size_t>(m), 0);
    std::vector<double> scaled(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        scaled[static_cast<std::size_t>(j)] =
            static_cast<double>(row_[j]) * m / static_cast<double>(total_);
    std::vector<int> small, large;
    for (int j = 0; j < m; ++j)
        (scaled[static_cast<std::size_t>(j)] < 1.0 ? small : large).push_back(j);
    while (!small.empty() && !large.empty()) {
        int s = small.back();
        small.pop_back();
        int l = large.back();
        large.pop_back();
        accept_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
        (scaled[static_cast<std::size_t>(l)] < 1.0 ? small : large).push_back(l);
    }
    dirty_ = false;
}

SimState make_sim_state(const Configuration& start) { return SimState{start, 0.0, 0}; }

namespace {

// Persistent simulation context: per-urn samplers with lazy alias rebuilds,
// cumulative measure weights.
class Simulator {
public:
    Simulator(const Margins& margins, const PermutationMeasure& mu,
              const Configuration& start)
        : margins_(margins), mu_(mu), state_(make_sim_state(start)) {
        if (!start.satisfies(margins)) throw ConfigError("start violates the margins");
        for (int i = 0; i < margins.urns; ++i)
            samplers_.emplace_back(state_.counts.counts.data() + i * margins.colours,
                                   margins.colours, margins.urn_size);
        double cum = 0;
        for (const auto& atom : mu.atoms()) {
            cum += atom.weight;
            cum_weights_.push_back(cum);
        }
        chosen_.resize(static_cast<std::size_t>(margins.urns));
    }

    // samplers hold pointers into state_
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    SimState& state() { return state_; }
    const Configuration& counts() const { return state_.counts; }

    const Permutation& sample_sigma(RngStream& rng) {
        const auto& atoms = mu_.atoms();
        if (atoms.size() == 1) return atoms[0].perm;
        double r = rng.uniform01();
        std::size_t k = static_cast<std::size_t>(
            std::lower_bound(cum_weights_.begin(), cum_weights_.end(), r) -
            cum_weights_.begin());
        if (k >= atoms.size()) k = atoms.size() - 1;
        return atoms[k].perm;
    }

    // One move without touching the clock.
    void move(RngStream& rng) {
        const int d = margins_.urns;
        for (int i = 0; i < d; ++i)
            chosen_[static_cast<std::size_t>(i)] =
                samplers_[static_cast<std::size_t>(i)].sample(rng);
        const Permutation& sigma = sample_sigma(rng);
        for (int i = 0; i < d; ++i)
            state_.counts.at(i, chosen_[static_cast<std::size_t>(i)]) -= 1;
        for (int i = 0; i < d; ++i) {
            int target = sigma(i);
            state_.counts.at(target, chosen_[static_cast<std::size_t>(i)]) += 1;
            samplers_[static_cast<std::size_t>(i)].mark_dirty();
            samplers_[static_cast<std::size_t>(target)].mark_dirty();
        }
        state_.jumps += 1;
    }

    bool inside(double threshold) const {
        for (int v : state_.counts.counts)
            if (static_cast<double>(v) < threshold - 1e-12) return false;
        return true;
    }

private:
    Margins margins_;
    const PermutationMeasure& mu_;
    SimState state_;
    std::vector<UrnSampler> samplers_;
    std::vector<double> cum_weights_;
    std::vector<int> chosen_;
};

const PermutationMeasure& unlabeled_measure(const ChainSpec& spec) {
    switch (spec.variant) {
        case Variant::Generalised:
        case Variant::Balanced:
        case Variant::MeanField:
            return spec.mu;
        default:
            throw ConfigError("experiment requires an unlabeled (count) model variant");
    }
}

}  // namespace

void mc_step(SimState& state, const Margins& margins, const PermutationMeasure& mu,
             RngStream& rng) {
    Simulator sim(margins, mu, state.counts);
    state.clock += rng.exponential();
    sim.move(rng);
    state.counts = sim.counts();
    state.jumps += 1;
}

Configuration adversarial_start(const Margins& margins) {
    margins.validate();
    const int d = margins.urns, m = margins.colours;
    Configuration x{d, m, std::vector<int>(static_cast<std::size_t>(d * m), 0)};
    std::vector<int> urn_room(static_cast<std::size_t>(d), margins.urn_size);
    for (int j = 0; j < m; ++j) {
        int left = margins.colour_count;
        for (int i = 0; i < d && left > 0; ++i) {
            int put = std::min(left, urn_room[static_cast<std::size_t>(i)]);
            x.at(i, j) = put;
            urn_room[static_cast<std::size_t>(i)] -= put;
            left -= put;
        }
        if (left > 0) throw ConfigError("infeasible margins for adversarial start");
    }
    return x;
}

Configuration balanced_start(const Margins& margins) {
    margins.validate();
    const int d = margins.urns, m = margins.colours;
    double target = margins.cell_target();
    if (target != std::floor(target))
        throw ConfigError("balanced start needs an integer per-cell target");
    Configuration x{d, m,
                    std::vector<int>(static_cast<std::size_t>(d * m),
                                     static_cast<int>(target))};
    return x;
}

HittingSample hitting_time_centre(const ChainSpec& spec, const CentreSpec& centre,
                                  const Configuration& start, int replicates,
                                  std::uint64_t seed, std::uint64_t step_budget,
                                  unsigned threads) {
    if (replicates < 1) throw ConfigError("hitting experiment requires replicates >= 1");
    const Margins mg = spec.margins();
    const PermutationMeasure& mu = unlabeled_measure(spec);
    const double thr = centre.threshold(mg);

    HittingSample out;
    out.seed = seed;
    out.times.assign(static_cast<std::size_t>(replicates), 0.0);
    std::vector<char> truncated(static_cast<std::size_t>(replicates), 0);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        RngStream rng(seed, r);
        Simulator sim(mg, mu, start);
        if (sim.inside(thr)) {
            out.times[r] = 0.0;
            return;
        }
        for (;;) {
            sim.state().clock += rng.exponential();
            sim.move(rng);
            if (sim.inside(thr)) break;
            if (sim.state().jumps >= step_budget) {
                truncated[r] = 1;
                break;
            }
        }
        out.times[r] = sim.state().clock;
    });
    out.truncated = std::any_of(truncated.begin(), truncated.end(),
                                [](char c) { return c != 0; });
    return out;
}

OccupationSample occupation_fraction(const ChainSpec& spec, const CentreSpec& centre,
                                     const Configuration& start, double horizon,
                                     int replicates, std::uint64_t seed,
                                     std::uint64_t step_budget, unsigned threads) {
    if (horizon <= 0) throw ConfigError("occupation horizon must be positive");
    if (replicates < 1) throw ConfigError("occupation experiment requires replicates >= 1");
    const Margins mg = spec.margins();
    const PermutationMeasure& mu = unlabeled_measure(spec);
    const double thr = centre.threshold(mg);

    OccupationSample out;
    out.seed = seed;
    out.fractions.assign(static_cast<std::size_t>(replicates), 0.0);
    std::vector<char> truncated(static_cast<std::size_t>(replicates), 0);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        RngStream rng(seed, r);
        Simulator sim(mg, mu, start);
        double acc = 0, t = 0;
        for (;;) {
            bool inside = sim.inside(thr);
            double hold = rng.exponential();
            double segment = std::min(t + hold, horizon) - t;
            if (inside) acc += segment;
            t += hold;
            if (t >= horizon) break;
            sim.move(rng);
            if (sim.state().jumps >= step_budget) {
                truncated[r] = 1;
                break;
            }
        }
        out.fractions[r] = acc / horizon;
    });
    out.truncated = std::any_of(truncated.begin(), truncated.end(),
                                [](char c) { return c != 0; });
    return out;
}

VarianceTable variance_probe(const ChainSpec& spec, const Configuration& start, double t,
                             int replicates, std::uint64_t seed, unsigned threads) {
    if (replicates < 100) throw ConfigError("variance probe requires replicates >= 100");
    if (t < 0) throw ConfigError("variance probe requires t >= 0");
    const Margins mg = spec.margins();
    const PermutationMeasure& mu = unlabeled_measure(spec);
    const int d = mg.urns, m = mg.colours;

    Eigen::MatrixXd samples(replicates, d * m);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        RngStream rng(seed, r);
        Simulator sim(mg, mu, start);
        double clock = 0;
        for (;;) {
            double hold = rng.exponential();
            if (clock + hold > t) break;
            clock += hold;
            sim.move(rng);
        }
        for (int k = 0; k < d * m; ++k)
            samples(static_cast<Eigen::Index>(r), k) =
                static_cast<double>(sim.counts().counts[static_cast<std::size_t>(k)]);
    });

    VarianceTable out;
    out.variance.resize(d, m);
    out.standard_error.resize(d, m);
    const double nr = static_cast<double>(replicates);
    for (int k = 0; k < d * m; ++k) {
        double s1 = samples.col(k).sum();
        double s2 = samples.col(k).squaredNorm();
        double mean = s1 / nr;
        double var = (s2 - nr * mean * mean) / (nr - 1.0);
        // jackknife over leave-one-out variances
        double jsum = 0, jsq = 0;
        for (int r = 0; r < replicates; ++r) {
            double x = samples(r, k);
            double m1 = (s1 - x) / (nr - 1.0);
            double v = (s2 - x * x - (nr - 1.0) * m1 * m1) / (nr - 2.0);
            jsum += v;
            jsq += v * v;
        }
        double jmean = jsum / nr;
        double se = std::sqrt(std::max(0.0, (nr - 1.0) / nr * (jsq - nr * jmean * jmean)));
        out.variance(k / m, k % m) = var;
        out.standard_error(k / m, k % m) = se;
    }
    return out;
}

double biased_walk_exit(int n_sites, double alpha, double eps, int replicates,
                        std::uint64_t seed, unsigned threads) {
    if (n_sites < 2) throw ConfigError("biased walk requires N >= 2");
    if (!(alpha > 0) || alpha > n_sites / 2.0)
        throw ConfigError("biased walk requires 0 < alpha <= N/2");
    if (eps <= 0) throw ConfigError("biased walk requires eps > 0");
    if (replicates < 1) throw ConfigError("biased walk requires replicates >= 1");

    const double horizon = eps * static_cast<double>(n_sites) * n_sites / alpha;
    const double p_up = 0.5 + alpha / n_sites;
    std::vector<char> hit(static_cast<std::size_t>(replicates), 0);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        RngStream rng(seed, r);
        int z = 1;
        double t = 0;
        for (;;) {
            t += rng.exponential();
            if (t > horizon) break;
            bool up = rng.uniform01() < p_up;
            if (up) {
                if (z < n_sites) ++z;
            } else {
                if (z > 1) --z;
            }
            if (z == n_sites) {
                hit[r] = 1;
                break;
            }
        }
    });
    long count = std::count(hit.begin(), hit.end(), char(1));
    return static_cast<double>(count) / replicates;
}

std::vector<long> one_step_frequencies(const ChainSpec& spec, const StateSpace& space,
                                       const Configuration& start, long steps,
                                       std::uint64_t seed) {
    const Margins mg = spec.margins();
    const PermutationMeasure& mu = unlabeled_measure(spec);
    std::vector<long> counts(space.size(), 0);
    RngStream rng(seed, 0);
    for (long k = 0; k < steps; ++k) {
        Simulator sim(mg, mu, start);
        sim.move(rng);
        std::ptrdiff_t idx = space.index_of(sim.counts());
        if (idx < 0) throw std::logic_error("one-step move left the state space");
        counts[static_cast<std::size_t>(idx)] += 1;
    }
    return counts;
}

ShuffleSimulator::ShuffleSimulator(const ChainSpec& spec, std::uint64_t seed)
    : spec_(spec),
      restricted_(spec.variant == Variant::RestrictedShuffle),
      rng_(seed, 0) {
    if (spec.variant != Variant::Shuffle && spec.variant != Variant::RestrictedShuffle)
        throw ConfigError("shuffle simulation requires a shuffle variant");
    if (1LL * spec.d * spec.n > 1'000'000LL)
        throw CapExceededError("shuffle simulation capped at 1e6 cards");
    double c = 0;
    for (const auto& atom : spec.mu.atoms()) {
        c += atom.weight;
        cum_weights_.push_back(c);
    }
    stacks_.resize(static_cast<std::size_t>(spec.d));
    for (int i = 0; i < spec.d; ++i) {
        stacks_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(spec.n));
        for (int q = 0; q < spec.n; ++q)
            stacks_[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] =
                i * spec.n + q;
    }
}

void ShuffleSimulator::step() {
    const auto& atoms = spec_.mu.atoms();
    std::size_t k = 0;
    if (atoms.size() > 1) {
        double r = rng_.uniform01();
        k = static_cast<std::size_t>(
            std::lower_bound(cum_weights_.begin(), cum_weights_.end(), r) -
            cum_weights_.begin());
        if (k >= atoms.size()) k = atoms.size() - 1;
    }
    const Permutation& sigma = atoms[k].perm;
    std::vector<int> drawn;
    for (int i = 0; i < spec_.d; ++i)
        if (!restricted_ || sigma(i) != i) drawn.push_back(i);
    std::vector<int> cards(drawn.size(), 0);
    for (std::size_t a = 0; a < drawn.size(); ++a) {
        auto& st = stacks_[static_cast<std::size_t>(drawn[a])];
        auto at = static_cast<std::size_t>(rng_.below(st.size()));
        cards[a] = st[at];
        st.erase(st.begin() + static_cast<std::ptrdiff_t>(at));
    }
    for (std::size_t a = 0; a < drawn.size(); ++a) {
        auto& st = stacks_[static_cast<std::size_t>(sigma(drawn[a]))];
        auto at = static_cast<std::size_t>(rng_.below(st.size() + 1));
        st.insert(st.begin() + static_cast<std::ptrdiff_t>(at), cards[a]);
    }
}

std::vector<long> ShuffleSimulator::projected_counts() const {
    std::vector<long> counts(static_cast<std::size_t>(spec_.d) * spec_.d, 0);
    for (int i = 0; i < spec_.d; ++i)
        for (int card : stacks_[static_cast<std::size_t>(i)])
            counts[static_cast<std::size_t>(i * spec_.d + card / spec_.n)] += 1;
    return counts;
}

std::vector<std::int8_t> ShuffleSimulator::forget_order() const {
    std::vector<std::int8_t> urn_of(static_cast<std::size_t>(spec_.d * spec_.n));
    for (int i = 0; i < spec_.d; ++i)
        for (int card : stacks_[static_cast<std::size_t>(i)])
            urn_of[static_cast<std::size_t>(card)] = static_cast<std::int8_t>(i);
    return urn_of;
}

ShuffleTrajectory simulate_shuffle(const ChainSpec& spec, long steps, std::uint64_t seed) {
    ShuffleSimulator sim(spec, seed);
    ShuffleTrajectory out;
    out.projected_l1_changes.reserve(static_cast<std::size_t>(steps));
    std::vector<long> prev = sim.projected_counts();
    for (long s = 0; s < steps; ++s) {
        sim.step();
        std::vector<long> cur = sim.projected_counts();
        long l1 = 0;
        for (std::size_t q = 0; q < cur.size(); ++q) l1 += std::abs(cur[q] - prev[q]);
        out.projected_l1_changes.push_back(l1);
        out.max_l1_change = std::max(out.max_l1_change, l1);
        prev.swap(cur);
    }
    out.stacks = sim.stacks();
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ConfigError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    if (q <= 0) return values.front();
    if (q >= 1) return values.back();
    double pos = q * (static_cast<double>(values.size()) - 1.0);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

}  // namespace urnlab
