#include "urnlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

#include "urnlab/errors.hpp"

namespace urnlab {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Generalised: return "generalised";
        case Variant::Balanced: return "balanced";
        case Variant::Labeled: return "labeled";
        case Variant::MeanField: return "mean_field";
        case Variant::Shuffle: return "shuffle";
        case Variant::RestrictedShuffle: return "restricted_shuffle";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::Generalised, Variant::Balanced, Variant::Labeled,
                      Variant::MeanField, Variant::Shuffle, Variant::RestrictedShuffle})
        if (name == variant_name(v)) return v;
    throw ConfigError("unknown model variant: " + name);
}

ChainSpec ChainSpec::make(Variant variant, int d, int m, int n,
                          const PermutationMeasure* mu) {
    if (d < 2) throw ConfigError("model requires d >= 2");
    if (n < 1) throw ConfigError("model requires n >= 1");
    switch (variant) {
        case Variant::MeanField:
            if (m < 2) throw ConfigError("mean_field requires m >= 2");
            return ChainSpec{variant, d, m, n, PermutationMeasure::uniform_transpositions(d)};
        case Variant::Generalised:
            if (m < 2) throw ConfigError("generalised requires m >= 2");
            if (!mu) throw ConfigError("generalised model requires a measure");
            if (mu->degree() != d) throw ConfigError("measure degree differs from d");
            return ChainSpec{variant, d, m, n, *mu};
        case Variant::Balanced:
        case Variant::Labeled:
        case Variant::Shuffle:
        case Variant::RestrictedShuffle:
            if (!mu) throw ConfigError("model requires a measure");
            if (mu->degree() != d) throw ConfigError("measure degree differs from d");
            return ChainSpec{variant, d, d, n, *mu};
    }
    throw ConfigError("unknown variant");
}

Margins ChainSpec::margins() const {
    switch (variant) {
        case Variant::Generalised:
        case Variant::MeanField:
            return Margins::generalised(d, m, n);
        default:
            return Margins::balanced(d, n);
    }
}

void StochasticMatrix::validate(double tol) const {
    for (int i = 0; i < size(); ++i) {
        if ((p.row(i).array() < -tol).any())
            throw ConfigError("stochastic matrix has a negative entry");
        if (std::abs(p.row(i).sum() - 1.0) > tol)
            throw ConfigError("stochastic matrix row does not sum to 1");
    }
}

StochasticMatrix build_kernel(const ChainSpec& spec, const StateSpace& space,
                              std::size_t work_cap) {
    const Margins mg = space.margins();
    const int d = mg.urns, m = mg.colours;
    const std::size_t natoms = spec.mu.atoms().size();
    double tuples = std::pow(static_cast<double>(m), d);
    if (static_cast<double>(space.size()) * tuples * static_cast<double>(natoms) >
        static_cast<double>(work_cap))
        throw CapExceededError("kernel construction work exceeds cap");

    const auto n_states = static_cast<Eigen::Index>(space.size());
    StochasticMatrix out;
    out.p = Eigen::MatrixXd::Zero(n_states, n_states);

    std::vector<int> colour(static_cast<std::size_t>(d), 0);
    Configuration next{d, m, {}};
    for (std::size_t xi = 0; xi < space.size(); ++xi) {
        const Configuration& x = space.state(xi);
        for (const auto& atom : spec.mu.atoms()) {
            // odometer over colour choices c in [m]^d
            std::fill(colour.begin(), colour.end(), 0);
            for (;;) {
                double prob = atom.weight;
                for (int i = 0; i < d && prob > 0; ++i)
                    prob *= static_cast<double>(x.at(i, colour[static_cast<std::size_t>(i)])) /
                            mg.urn_size;
                if (prob > 0) {
                    next = x;
                    for (int i = 0; i < d; ++i)
                        next.at(i, colour[static_cast<std::size_t>(i)]) -= 1;
                    for (int i = 0; i < d; ++i)
                        next.at(atom.perm(i), colour[static_cast<std::size_t>(i)]) += 1;
                    std::ptrdiff_t yi = space.index_of(next);
                    if (yi < 0) throw std::logic_error("kernel move left the state space");
                    out.p(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(yi)) += prob;
                }
                int k = d - 1;
                while (k >= 0 && ++colour[static_cast<std::size_t>(k)] == m)
                    colour[static_cast<std::size_t>(k--)] = 0;
                if (k < 0) break;
            }
        }
    }
    out.validate();
    return out;
}

StochasticMatrix build_labeled_kernel(const ChainSpec& spec, const LabeledSpace& space) {
    const int d = space.urns(), n = space.per_urn();
    const auto n_states = static_cast<Eigen::Index>(space.size());
    StochasticMatrix out;
    out.p = Eigen::MatrixXd::Zero(n_states, n_states);

    std::vector<std::vector<int>> per_urn(static_cast<std::size_t>(d));
    std::vector<int> pick(static_cast<std::size_t>(d), 0);
    const double tuple_prob = std::pow(static_cast<double>(n), -d);
    for (std::size_t xi = 0; xi < space.size(); ++xi) {
        const auto& urn_of = space.state(xi);
        for (auto& lst : per_urn) lst.clear();
        for (int b = 0; b < space.balls(); ++b)
            per_urn[static_cast<std::size_t>(urn_of[static_cast<std::size_t>(b)])].push_back(b);
        for (const auto& atom : spec.mu.atoms()) {
            std::fill(pick.begin(), pick.end(), 0);
            for (;;) {
                std::vector<std::int8_t> next = urn_of;
                for (int i = 0; i < d; ++i) {
                    int ball = per_urn[static_cast<std::size_t>(i)]
                                      [static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
                    next[static_cast<std::size_t>(ball)] = static_cast<std::int8_t>(atom.perm(i));
                }
                std::ptrdiff_t yi = space.index_of(next);
                if (yi < 0) throw std::logic_error("labeled move left the state space");
                out.p(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(yi)) +=
                    atom.weight * tuple_prob;
                int k = d - 1;
                while (k >= 0 && ++pick[static_cast<std::size_t>(k)] == n)
                    pick[static_cast<std::size_t>(k--)] = 0;
                if (k < 0) break;
            }
        }
    }
    out.validate();
    return out;
}

StochasticMatrix build_shuffle_kernel(const ChainSpec& spec, const OrderedDeckSpace& space) {
    const bool restricted = spec.variant == Variant::RestrictedShuffle;
    const int d = space.stacks(), n = space.stack_size();
    const auto n_states = static_cast<Eigen::Index>(space.size());
    StochasticMatrix out;
    out.p = Eigen::MatrixXd::Zero(n_states, n_states);

    for (std::size_t xi = 0; xi < space.size(); ++xi) {
        const auto& deck = space.state(xi);
        for (const auto& atom : spec.mu.atoms()) {
            std::vector<int> drawn;  // stacks that draw a card this step
            for (int i = 0; i < d; ++i)
                if (!restricted || atom.perm(i) != i) drawn.push_back(i);
            const int k = static_cast<int>(drawn.size());
            if (k == 0) {
                out.p(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(xi)) += atom.weight;
                continue;
            }
            const double combo_prob = atom.weight * std::pow(static_cast<double>(n), -2 * k);
            std::vector<int> pos(static_cast<std::size_t>(2 * k), 0);  // k draws then k inserts
            for (;;) {
                // remove one card from each drawn stack
                std::vector<std::vector<std::int8_t>> stacks(static_cast<std::size_t>(d));
                for (int i = 0; i < d; ++i)
                    for (int q = 0; q < n; ++q)
                        stacks[static_cast<std::size_t>(i)].push_back(
                            deck[static_cast<std::size_t>(i * n + q)]);
                std::vector<std::int8_t> cards(static_cast<std::size_t>(k));
                for (int a = 0; a < k; ++a) {
                    auto& st = stacks[static_cast<std::size_t>(drawn[static_cast<std::size_t>(a)])];
                    int at = pos[static_cast<std::size_t>(a)];
                    cards[static_cast<std::size_t>(a)] = st[static_cast<std::size_t>(at)];
                    st.erase(st.begin() + at);
                }
                // insert each drawn card into stack sigma(i); n slots each
                for (int a = 0; a < k; ++a) {
                    int target = atom.perm(drawn[static_cast<std::size_t>(a)]);
                    auto& st = stacks[static_cast<std::size_t>(target)];
                    int at = pos[static_cast<std::size_t>(k + a)];
                    st.insert(st.begin() + at, cards[static_cast<std::size_t>(a)]);
                }
                std::vector<std::int8_t> next;
                next.reserve(static_cast<std::size_t>(d * n));
                for (const auto& st : stacks) next.insert(next.end(), st.begin(), st.end());
                std::ptrdiff_t yi = space.index_of(next);
                if (yi < 0) throw std::logic_error("shuffle move left the deck space");
                out.p(static_cast<Eigen::Index>(xi), static_cast<Eigen::Index>(yi)) += combo_prob;

                int c = 2 * k - 1;
                while (c >= 0 && ++pos[static_cast<std::size_t>(c)] == n)
                    pos[static_cast<std::size_t>(c--)] = 0;
                if (c < 0) break;
            }
        }
    }
    out.validate();
    return out;
}

StochasticMatrix restrict_kernel(const StochasticMatrix& p, const std::vector<int>& a) {
    if (a.empty()) throw ConfigError("restriction set must be nonempty");
    const auto na = static_cast<Eigen::Index>(a.size());
    StochasticMatrix out;
    out.p.resize(na, na);
    for (Eigen::Index r = 0; r < na; ++r)
        for (Eigen::Index c = 0; c < na; ++c)
            out.p(r, c) = p.p(a[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
    for (Eigen::Index r = 0; r < na; ++r) {
        double inside = out.p.row(r).sum();
        out.p(r, r) += 1.0 - inside;  // escaped mass stays put
    }
    out.validate();
    return out;
}

namespace {

std::vector<int> complement_of(int n, const std::vector<int>& a) {
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (int i : a) in[static_cast<std::size_t>(i)] = 1;
    std::vector<int> c;
    for (int i = 0; i < n; ++i)
        if (!in[static_cast<std::size_t>(i)]) c.push_back(i);
    return c;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                m(rows[r], cols[c]);
    return out;
}

}  // namespace

StochasticMatrix induce(const StochasticMatrix& p, const std::vector<int>& a) {
    if (a.empty()) throw ConfigError("induction set must be nonempty");
    const int n = p.size();
    std::vector<int> c = complement_of(n, a);
    StochasticMatrix out;
    if (c.empty()) {
        out.p = p.p;
        return out;
    }
    Eigen::MatrixXd paa = submatrix(p.p, a, a);
    Eigen::MatrixXd pac = submatrix(p.p, a, c);
    Eigen::MatrixXd pca = submatrix(p.p, c, a);
    Eigen::MatrixXd pcc = submatrix(p.p, c, c);
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(pcc.rows(), pcc.cols()) - pcc;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
    Eigen::MatrixXd h = lu.solve(pca);  // hitting distribution of A from the complement
    double resid = (sys * h - pca).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-8)
        throw DegenerateModelError("induced chain solve failed: chain cannot return to A");
    out.p = paa + pac * h;
    out.validate(1e-9);  // solve-based, slightly looser than the builders
    return out;
}

std::pair<StochasticMatrix, StationaryTable> collapse(const StochasticMatrix& p,
                                                      const StationaryTable& pi,
                                                      const std::vector<int>& a) {
    const int n = p.size();
    if (a.empty() || static_cast<int>(a.size()) >= n)
        throw ConfigError("collapse set must be nonempty and proper");
    std::vector<int> rest = complement_of(n, a);
    double pa = 0;
    for (int i : a) pa += pi.p(i);

    const auto nr = static_cast<Eigen::Index>(rest.size());
    StochasticMatrix out;
    out.p = Eigen::MatrixXd::Zero(nr + 1, nr + 1);
    for (Eigen::Index r = 0; r < nr; ++r) {
        for (Eigen::Index c = 0; c < nr; ++c)
            out.p(r, c) = p.p(rest[static_cast<std::size_t>(r)], rest[static_cast<std::size_t>(c)]);
        double to_a = 0;
        for (int j : a) to_a += p.p(rest[static_cast<std::size_t>(r)], j);
        out.p(r, nr) = to_a;
    }
    for (Eigen::Index c = 0; c < nr; ++c) {
        double v = 0;
        for (int w : a) v += (pi.p(w) / pa) * p.p(w, rest[static_cast<std::size_t>(c)]);
        out.p(nr, c) = v;
    }
    {
        double v = 0;
        for (int w : a)
            for (int j : a) v += (pi.p(w) / pa) * p.p(w, j);
        out.p(nr, nr) = v;
    }
    out.validate();

    StationaryTable tbl;
    tbl.p.resize(nr + 1);
    for (Eigen::Index r = 0; r < nr; ++r) tbl.p(r) = pi.p(rest[static_cast<std::size_t>(r)]);
    tbl.p(nr) = pa;
    return {std::move(out), std::move(tbl)};
}

StochasticMatrix modify(const StochasticMatrix& p, const StationaryTable& pi,
                        const std::vector<int>& macro) {
    if (macro.empty()) throw ConfigError("macro set must be nonempty");
    const int n = p.size();
    std::vector<int> comp = complement_of(n, macro);
    StochasticMatrix out;
    if (comp.empty()) {
        out.p = p.p;  // no boundary, p = 0
        return out;
    }
    const auto nm = static_cast<Eigen::Index>(macro.size());
    double pmacro = 0;
    for (int i : macro) pmacro += pi.p(i);

    Eigen::VectorXd pi_macro(nm);
    for (Eigen::Index r = 0; r < nm; ++r)
        pi_macro(r) = pi.p(macro[static_cast<std::size_t>(r)]) / pmacro;

    // collapsed chain with the collapsed vertex deleted and escape edges
    // redirected to pi_macro
    Eigen::MatrixXd pprime(nm, nm);
    for (Eigen::Index r = 0; r < nm; ++r) {
        int x = macro[static_cast<std::size_t>(r)];
        double escape = 0;
        for (int z : comp) escape += p.p(x, z);
        for (Eigen::Index c = 0; c < nm; ++c)
            pprime(r, c) = p.p(x, macro[static_cast<std::size_t>(c)]) + escape * pi_macro(c);
    }

    // p = P_pi(X_1 outside macro | X_0 inside)
    double q_out = 0;
    for (int x : macro)
        for (int z : comp) q_out += pi.p(x) * p.p(x, z);
    const double damp = q_out / pmacro;

    // in-boundary weights Q(macro^c, y) / pi(macro)
    Eigen::VectorXd qin(nm);
    for (Eigen::Index c = 0; c < nm; ++c) {
        int y = macro[static_cast<std::size_t>(c)];
        double q = 0;
        for (int z : comp) q += pi.p(z) * p.p(z, y);
        qin(c) = q / pmacro;
    }

    out.p = (pprime + Eigen::VectorXd::Ones(nm) * qin.transpose()) / (damp + 1.0);
    out.validate();
    return out;
}

StochasticMatrix additive_reversibilization(const StochasticMatrix& p,
                                            const StationaryTable& pi) {
    if (stationarity_residual_l1(p, pi) > 1e-9)
        throw ConfigError("additive reversibilisation requires a stationary table");
    const int n = p.size();
    StochasticMatrix out;
    out.p.resize(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            out.p(x, y) = 0.5 * (p.p(x, y) + pi.p(y) * p.p(y, x) / pi.p(x));
    out.validate();
    return out;
}

double detailed_balance_residual(const StochasticMatrix& p, const StationaryTable& pi) {
    double worst = 0;
    const int n = p.size();
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
            worst = std::max(worst, std::abs(pi.p(x) * p.p(x, y) - pi.p(y) * p.p(y, x)));
    return worst;
}

bool reversibility_check(const StochasticMatrix& p, const StationaryTable& pi, double tol) {
    return detailed_balance_residual(p, pi) <= tol;
}

bool kernel_irreducible(const StochasticMatrix& p) {
    const int n = p.size();
    auto reach = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double e = transpose ? p.p(w, v) : p.p(v, w);
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

double lumping_check(const StochasticMatrix& fine, const std::vector<int>& projection,
                     const StochasticMatrix& coarse) {
    const int nf = fine.size(), nc = coarse.size();
    if (static_cast<int>(projection.size()) != nf)
        throw ConfigError("projection must map every fine state");
    std::vector<char> hit(static_cast<std::size_t>(nc), 0);
    for (int c : projection) {
        if (c < 0 || c >= nc) throw ConfigError("projection target out of range");
        hit[static_cast<std::size_t>(c)] = 1;
    }
    if (!std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; }))
        throw ConfigError("projection is not surjective");

    double worst = 0;
    Eigen::VectorXd mass(nc);
    for (int x = 0; x < nf; ++x) {
        mass.setZero();
        for (int y = 0; y < nf; ++y) mass(projection[static_cast<std::size_t>(y)]) += fine.p(x, y);
        for (int c = 0; c < nc; ++c)
            worst = std::max(worst, std::abs(mass(c) - coarse.p(projection[static_cast<std::size_t>(x)], c)));
    }
    return worst;
}

Eigen::MatrixXd edge_measure(const StochasticMatrix& p, const StationaryTable& pi) {
    return pi.p.asDiagonal() * p.p;
}

double edge_flow(const StochasticMatrix& p, const StationaryTable& pi,
                 const std::vector<int>& a, const std::vector<int>& b) {
    double q = 0;
    for (int x : a)
        for (int y : b) q += pi.p(x) * p.p(x, y);
    return q;
}

double stationarity_residual_l1(const StochasticMatrix& p, const StationaryTable& pi) {
    Eigen::VectorXd left = p.p.transpose() * pi.p;
    return (left - pi.p).lpNorm<1>();
}

}  // namespace urnlab
