#include "urnlab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "urnlab/errors.hpp"
#include "urnlab/single_ball.hpp"

namespace urnlab {

namespace {

constexpr double kBaseStep = 16.0;  // largest time handled by direct uniformization

int poisson_terms(double s) {
    return static_cast<int>(std::ceil(s + 10.0 * std::sqrt(s + 10.0) + 30.0));
}

// e^{s(P-I)} by Poisson-weighted powers; s must be moderate so that
// exp(-s) does not underflow.
Eigen::MatrixXd heat_base(const Eigen::MatrixXd& p, double s, double tol) {
    const auto n = p.rows();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    if (s <= 0) return power;
    double w = std::exp(-s);
    double cum = w;
    Eigen::MatrixXd out = w * power;
    const int kmax = poisson_terms(s);
    for (int k = 1; cum < 1.0 - tol && k <= kmax; ++k) {
        power = power * p;
        w *= s / k;
        out.noalias() += w * power;
        cum += w;
    }
    return out;
}

}  // namespace

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return 0.5 * (a - b).lpNorm<1>();
}

Eigen::VectorXd heat_kernel_row(const Eigen::MatrixXd& p, int x, double t, double tol) {
    const auto n = p.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(x) = 1.0;
    if (t <= 0) return v;
    // log-space Poisson weights keep this stable for large t
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const int kmax = poisson_terms(t);
    const double logt = std::log(t);
    double cum = 0;
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) v = (v.transpose() * p).transpose();
        double logw = k * logt - t - std::lgamma(static_cast<double>(k) + 1.0);
        double w = std::exp(logw);
        out.noalias() += w * v;
        cum += w;
        if (cum >= 1.0 - tol && k >= t) break;
    }
    return out;
}

Eigen::MatrixXd heat_kernel_matrix(const Eigen::MatrixXd& p, double t, double tol) {
    if (t <= 0) return Eigen::MatrixXd::Identity(p.rows(), p.cols());
    if (t <= kBaseStep) return heat_base(p, t, tol);
    int squarings = static_cast<int>(std::ceil(std::log2(t / kBaseStep)));
    squarings = std::min(squarings, 40);
    double base = t / std::pow(2.0, squarings);
    double base_tol = std::max(tol / std::pow(2.0, squarings), 1e-16);
    Eigen::MatrixXd h = heat_base(p, base, base_tol);
    for (int k = 0; k < squarings; ++k) h = h * h;
    return h;
}

double worst_case_tv(const StochasticMatrix& p, const StationaryTable& pi, double t,
                     double tol) {
    Eigen::MatrixXd h = heat_kernel_matrix(p.p, t, tol);
    double worst = 0;
    for (int i = 0; i < p.size(); ++i)
        worst = std::max(worst, 0.5 * (h.row(i).transpose() - pi.p).lpNorm<1>());
    return worst;
}

namespace {

double worst_tv_of(const Eigen::MatrixXd& h, const Eigen::VectorXd& pi) {
    double worst = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        worst = std::max(worst, 0.5 * (h.row(i).transpose() - pi).lpNorm<1>());
    return worst;
}

double worst_linf_of(const Eigen::MatrixXd& h, const Eigen::VectorXd& pi) {
    double worst = 0;
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            worst = std::max(worst, std::abs(h(i, j) / pi(j) - 1.0));
    return worst;
}

// Monotone threshold search shared by the mixing-time variants. The
// criterion c(H_t) must be nonincreasing in t; heat kernels are advanced
// with incremental products so bisection never recomputes from scratch.
template <typename Criterion>
double first_time_below(const StochasticMatrix& p, double eps, double rel_acc,
                        Criterion&& crit, double tol) {
    if (!kernel_irreducible(p))
        throw DegenerateModelError("kernel is reducible: distance never reaches eps");
    const auto n = p.p.rows();
    Eigen::MatrixXd h_lo = Eigen::MatrixXd::Identity(n, n);
    if (crit(h_lo) <= eps) return 0.0;
    double lo = 0.0, hi = 1.0;
    Eigen::MatrixXd h_hi = heat_kernel_matrix(p.p, 1.0, tol);
    while (crit(h_hi) > eps) {
        lo = hi;
        h_lo = h_hi;
        h_hi = h_hi * h_hi;  // doubles the time
        hi *= 2;
        if (hi > 1e12) throw DegenerateModelError("mixing time exceeds 1e12");
    }
    while (hi - lo > rel_acc * hi) {
        double mid = 0.5 * (lo + hi);
        Eigen::MatrixXd h_mid = h_lo * heat_kernel_matrix(p.p, mid - lo, tol);
        if (crit(h_mid) > eps) {
            lo = mid;
            h_lo.swap(h_mid);
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TVCurve tv_curve(const StochasticMatrix& p, const StationaryTable& pi,
                 std::vector<double> times, double tol) {
    if (times.empty()) throw ConfigError("time grid must be nonempty");
    for (double t : times)
        if (t < 0) throw ConfigError("time grid entries must be nonnegative");
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    TVCurve curve;
    curve.times.resize(times.size());
    curve.worst_case_tv.resize(times.size());
    const auto n = p.p.rows();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    double t_now = 0;
    for (std::size_t k : order) {
        double t = times[k];
        if (t > t_now) {
            h = h * heat_kernel_matrix(p.p, t - t_now, tol);
            t_now = t;
        }
        curve.times[k] = t;
        curve.worst_case_tv[k] = worst_tv_of(h, pi.p);
    }
    return curve;
}

double mixing_time(const StochasticMatrix& p, const StationaryTable& pi, double eps,
                   double rel_acc) {
    if (eps <= 0 || eps >= 1) throw ConfigError("eps must lie in (0,1)");
    return first_time_below(
        p, eps, rel_acc, [&](const Eigen::MatrixXd& h) { return worst_tv_of(h, pi.p); },
        1e-12);
}

double linf_mixing_time(const StochasticMatrix& p, const StationaryTable& pi, double eps,
                        double rel_acc) {
    if (eps <= 0) throw ConfigError("eps must be positive");
    return first_time_below(
        p, eps, rel_acc, [&](const Eigen::MatrixXd& h) { return worst_linf_of(h, pi.p); },
        1e-13);
}

namespace {

// D^{1/2} P D^{-1/2}, averaged to kill rounding asymmetry.
Eigen::MatrixXd symmetric_similarity(const StochasticMatrix& p, const StationaryTable& pi) {
    const int n = p.size();
    Eigen::VectorXd s = pi.p.cwiseSqrt();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = p.p(i, j) * s(i) / s(j);
    return 0.5 * (m + m.transpose());
}

}  // namespace

double spectral_gap_reversible(const StochasticMatrix& p, const StationaryTable& pi) {
    if (!reversibility_check(p, pi, 1e-10))
        throw ConfigError("spectral gap requires a reversible kernel");
    const int n = p.size();
    if (n == 1) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric_similarity(p, pi));
    const auto& w = es.eigenvalues();
    if (std::abs(w(n - 1) - 1.0) > 1e-8)
        throw DegenerateModelError("reversible kernel has no unit eigenvalue");
    double gap = 1.0 - w(n - 2);
    if (gap <= 1e-12)
        throw DegenerateModelError("kernel is reducible: spectral gap is 0");
    return gap;
}

double relaxation_time(const StochasticMatrix& p, const StationaryTable& pi) {
    return 1.0 / spectral_gap_reversible(p, pi);
}

double dirichlet_form(const StochasticMatrix& p, const StationaryTable& pi,
                      const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
    Eigen::VectorXd lf = f - p.p * f;  // (I-P) f
    return (pi.p.array() * lf.array() * g.array()).sum();
}

namespace {

// Smallest eigenvalue of (I - S+) restricted to A, where S+ is the
// pi-symmetrized similarity of the additive reversibilisation.
double profile_set_on(const Eigen::MatrixXd& splus, const std::vector<int>& a) {
    const auto na = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd b(na, na);
    for (Eigen::Index r = 0; r < na; ++r)
        for (Eigen::Index c = 0; c < na; ++c)
            b(r, c) = (r == c ? 1.0 : 0.0) -
                      splus(a[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    return es.eigenvalues()(0);
}

double profile_set_modified_on(const Eigen::MatrixXd& splus, const Eigen::VectorXd& sqrt_pi,
                               const std::vector<int>& a) {
    const auto na = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd b(na, na);
    Eigen::VectorXd q(na);
    for (Eigen::Index r = 0; r < na; ++r) {
        q(r) = sqrt_pi(a[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < na; ++c)
            b(r, c) = (r == c ? 1.0 : 0.0) -
                      splus(a[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
    }
    Eigen::MatrixXd cmat = Eigen::MatrixXd::Identity(na, na) - q * q.transpose();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(b, cmat);
    return es.eigenvalues()(0);
}

}  // namespace

double spectral_profile_set(const StochasticMatrix& p, const StationaryTable& pi,
                            const std::vector<int>& a) {
    if (a.empty()) throw ConfigError("spectral profile set must be nonempty");
    StochasticMatrix plus = additive_reversibilization(p, pi);
    return profile_set_on(symmetric_similarity(plus, pi), a);
}

ProfilePoint spectral_profile(const StochasticMatrix& p, const StationaryTable& pi,
                              double delta, int cap) {
    if (delta <= 0) throw ConfigError("profile delta must be positive");
    ProfilePoint point;
    point.delta = delta;
    if (delta >= 1.0) return point;  // constant functions admissible, both minima 0
    const int n = p.size();
    if (n > cap) throw CapExceededError("spectral profile enumeration capped by state count");

    StochasticMatrix plus = additive_reversibilization(p, pi);
    Eigen::MatrixXd splus = symmetric_similarity(plus, pi);
    Eigen::VectorXd sqrt_pi = pi.p.cwiseSqrt();

    double best = std::numeric_limits<double>::infinity();
    double best_mod = std::numeric_limits<double>::infinity();
    std::vector<int> members;
    const std::uint32_t full = (n >= 32) ? 0xffffffffu : ((1u << n) - 1u);
    for (std::uint32_t mask = 1; mask <= full && mask != 0; ++mask) {
        double massA = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) massA += pi.p(i);
        if (massA > delta) continue;
        // skip non-maximal supports: a superset attains a smaller minimum
        bool extendable = false;
        for (int i = 0; i < n && !extendable; ++i)
            if (!(mask & (1u << i)) && massA + pi.p(i) <= delta) extendable = true;
        if (extendable) continue;
        members.clear();
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) members.push_back(i);
        best = std::min(best, profile_set_on(splus, members));
        best_mod = std::min(best_mod, profile_set_modified_on(splus, sqrt_pi, members));
    }
    if (!std::isfinite(best))
        throw ConfigError("no admissible support: delta below the smallest atom");
    point.lambda = best;
    point.lambda_modified = best_mod;
    return point;
}

PathFamily bfs_path_family(const StochasticMatrix& target, const StochasticMatrix& source) {
    const int n = target.size();
    if (source.size() != n) throw ConfigError("path family needs chains on the same space");
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && target.p(x, y) > 0) adj[static_cast<std::size_t>(x)].push_back(y);

    PathFamily fam;
    std::vector<int> parent(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        bool needed = false;
        for (int y = 0; y < n; ++y)
            if (y != x && source.p(x, y) > 0) needed = true;
        if (!needed) continue;
        std::fill(parent.begin(), parent.end(), -2);
        parent[static_cast<std::size_t>(x)] = -1;
        std::deque<int> queue{x};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int w : adj[static_cast<std::size_t>(v)]) {
                if (parent[static_cast<std::size_t>(w)] != -2) continue;
                parent[static_cast<std::size_t>(w)] = v;
                queue.push_back(w);
            }
        }
        for (int y = 0; y < n; ++y) {
            if (y == x || source.p(x, y) <= 0) continue;
            if (parent[static_cast<std::size_t>(y)] == -2)
                throw DegenerateModelError("unreachable endpoint in target transition graph");
            CanonicalPath path;
            path.from = x;
            path.to = y;
            for (int v = y; v != x; v = parent[static_cast<std::size_t>(v)])
                path.edges.emplace_back(parent[static_cast<std::size_t>(v)], v);
            std::reverse(path.edges.begin(), path.edges.end());
            fam.push_back(std::move(path));
        }
    }
    return fam;
}

ComparisonReport congestion_ratio(const StochasticMatrix& target,
                                  const StochasticMatrix& source,
                                  const StationaryTable& pi, const PathFamily* paths,
                                  int probe_count, std::uint64_t probe_seed) {
    const int n = target.size();
    if (source.size() != n || static_cast<int>(pi.size()) != n)
        throw ConfigError("congestion ratio requires chains sharing one state space");
    PathFamily generated;
    if (!paths) {
        generated = bfs_path_family(target, source);
        paths = &generated;
    }

    // validate the family: one path per source edge, along target edges
    std::map<std::pair<int, int>, const CanonicalPath*> by_edge;
    for (const auto& path : *paths) {
        if (path.from == path.to || source.p(path.from, path.to) <= 0)
            throw ConfigError("path family contains a path for a non-edge of the source");
        if (!by_edge.emplace(std::make_pair(path.from, path.to), &path).second)
            throw ConfigError("duplicate path for the same source edge");
        int at = path.from;
        for (auto [u, v] : path.edges) {
            if (u != at || target.p(u, v) <= 0 || u == v)
                throw ConfigError("path family uses a non-edge of the target");
            at = v;
        }
        if (at != path.to) throw ConfigError("path does not reach its endpoint");
    }
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (x != y && source.p(x, y) > 0 && !by_edge.count({x, y}))
                throw ConfigError("path family misses a source edge");

    std::map<std::pair<int, int>, double> loaded;  // sum Q_src * |path| through edge
    std::map<std::pair<int, int>, int> load_count;
    ComparisonReport rep;
    for (const auto& path : *paths) {
        double q_src = pi.p(path.from) * source.p(path.from, path.to);
        double len = static_cast<double>(path.edges.size());
        rep.max_path_length = std::max(rep.max_path_length, static_cast<int>(path.edges.size()));
        for (auto e : path.edges) {
            loaded[e] += q_src * len;
            load_count[e] += 1;
        }
    }
    for (auto& [e, w] : loaded) {
        double q_tgt = pi.p(e.first) * target.p(e.first, e.second);
        rep.congestion = std::max(rep.congestion, w / q_tgt);
        rep.max_edge_load = std::max(rep.max_edge_load, load_count[e]);
    }

    std::mt19937_64 rng(probe_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0;
    for (int k = 0; k < probe_count; ++k) {
        Eigen::VectorXd f(n);
        for (int i = 0; i < n; ++i) f(i) = gauss(rng);
        double es = dirichlet_form(source, pi, f, f);
        double et = dirichlet_form(target, pi, f, f);
        worst = std::max(worst, es - rep.congestion * et);
    }
    rep.dirichlet_residual = std::max(0.0, worst);
    return rep;
}

StationaryTable stationary_from_kernel(const StochasticMatrix& p) {
    if (!kernel_irreducible(p))
        throw DegenerateModelError("stationary solve requires an irreducible kernel");
    const int n = p.size();
    Eigen::MatrixXd a = p.p.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();  // normalization replaces one redundant equation
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd pi = lu.solve(b);
    pi += lu.solve(b - a * pi);  // one refinement step
    StationaryTable tbl{pi};
    // entries below solver precision may come out as signed noise
    if (stationarity_residual_l1(p, tbl) > 1e-12 || (pi.array() < -1e-12).any())
        throw DegenerateModelError("stationary solve failed to converge");
    return tbl;
}

std::vector<CutoffRow> cutoff_ratio_scan(Variant variant, int d, int m,
                                         const PermutationMeasure& mu,
                                         const std::vector<int>& n_values, double eps,
                                         std::size_t state_cap, std::size_t work_cap) {
    if (n_values.empty()) throw ConfigError("cutoff scan requires at least one n");
    if (eps <= 0 || eps >= 0.5) throw ConfigError("cutoff scan eps must lie in (0, 1/2)");
    SingleBallMatrix u = single_ball_matrix(mu);
    std::vector<CutoffRow> rows;
    for (int n : n_values) {
        ChainSpec spec = ChainSpec::make(variant, d, m, n, &mu);
        StateSpace space = StateSpace::enumerate(spec.margins(), state_cap);
        StochasticMatrix p = build_kernel(spec, space, work_cap);
        StationaryTable pi = stationary_table(space);
        CutoffRow row;
        row.n = n;
        row.t_mix_lo = mixing_time(p, pi, eps);
        row.t_mix_hi = mixing_time(p, pi, 1.0 - eps);
        row.ratio = row.t_mix_lo / row.t_mix_hi;
        double t_single = single_ball_mixing_time(u, 1.0, 1.0 / std::sqrt(double(n)));
        row.predicted = row.t_mix_lo / (static_cast<double>(spec.m) * n * t_single);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace urnlab
