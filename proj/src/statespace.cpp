#include "urnlab/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "urnlab/errors.hpp"

namespace urnlab {

Margins Margins::generalised(int d, int m, int n) {
    Margins mg{d, m, m * n, d * n};
    mg.validate();
    return mg;
}

Margins Margins::balanced(int d, int n) {
    Margins mg{d, d, n, n};
    mg.validate();
    return mg;
}

void Margins::validate() const {
    if (urns < 2 || colours < 2 || urn_size < 1 || colour_count < 1)
        throw ConfigError("margins require d,m >= 2 and positive sizes");
    if (1LL * urns * urn_size != 1LL * colours * colour_count)
        throw ConfigError("infeasible margins: d*urn_size != m*colour_count");
}

bool Configuration::satisfies(const Margins& m) const {
    if (urns != m.urns || colours != m.colours) return false;
    for (int i = 0; i < urns; ++i) {
        long long s = 0;
        for (int j = 0; j < colours; ++j) {
            if (at(i, j) < 0) return false;
            s += at(i, j);
        }
        if (s != m.urn_size) return false;
    }
    for (int j = 0; j < colours; ++j) {
        long long s = 0;
        for (int i = 0; i < urns; ++i) s += at(i, j);
        if (s != m.colour_count) return false;
    }
    return true;
}

StateSpace StateSpace::enumerate(const Margins& margins, std::size_t cap) {
    margins.validate();
    StateSpace sp;
    sp.margins_ = margins;
    const int d = margins.urns, m = margins.colours;

    Configuration cur{d, m, std::vector<int>(static_cast<std::size_t>(d * m), 0)};
    std::vector<int> colsum(static_cast<std::size_t>(m), 0);

    // Free coordinates are the cells (i, j) with i < d-1, j < m-1, filled in
    // row-major order; the last column and last row are reconstructed from
    // the margins.
    auto close_row = [&](int i) -> bool {
        int partial = 0;
        for (int j = 0; j < m - 1; ++j) partial += cur.at(i, j);
        int last = margins.urn_size - partial;
        if (last < 0 || colsum[static_cast<std::size_t>(m - 1)] + last > margins.colour_count)
            return false;
        cur.at(i, m - 1) = last;
        colsum[static_cast<std::size_t>(m - 1)] += last;
        return true;
    };
    auto reopen_row = [&](int i) {
        colsum[static_cast<std::size_t>(m - 1)] -= cur.at(i, m - 1);
        cur.at(i, m - 1) = 0;
    };

    auto emit = [&]() -> bool {
        // last row from column margins; row margin holds automatically
        for (int j = 0; j < m; ++j) {
            int v = margins.colour_count - colsum[static_cast<std::size_t>(j)];
            if (v < 0) return true;  // infeasible completion, skip
            cur.at(d - 1, j) = v;
        }
        if (sp.states_.size() >= cap)
            throw CapExceededError("state enumeration exceeded cap");
        sp.states_.push_back(cur);
        return true;
    };

    const int free_rows = d - 1, free_cols = m - 1;
    auto max_value = [&](int i, int j) {
        int partial = 0;
        for (int jj = 0; jj < j; ++jj) partial += cur.at(i, jj);
        return std::min(margins.urn_size - partial,
                        margins.colour_count - colsum[static_cast<std::size_t>(j)]);
    };

    auto rec = [&](auto&& self, int cell) -> void {
        if (cell == free_rows * free_cols) {
            emit();
            return;
        }
        int i = cell / free_cols, j = cell % free_cols;
        int hi = max_value(i, j);
        for (int v = 0; v <= hi; ++v) {
            cur.at(i, j) = v;
            colsum[static_cast<std::size_t>(j)] += v;
            bool ok = true;
            if (j == free_cols - 1) ok = close_row(i);
            if (ok) {
                self(self, cell + 1);
                if (j == free_cols - 1) reopen_row(i);
            }
            colsum[static_cast<std::size_t>(j)] -= v;
            cur.at(i, j) = 0;
        }
    };
    rec(rec, 0);
    if (sp.states_.empty()) throw ConfigError("infeasible margins: empty state space");
    return sp;
}

std::ptrdiff_t StateSpace::index_of(const Configuration& x) const {
    if (!x.satisfies(margins_)) return -1;
    auto it = std::lower_bound(states_.begin(), states_.end(), x,
                               [](const Configuration& a, const Configuration& b) {
                                   return a.counts < b.counts;
                               });
    if (it == states_.end() || !(*it == x)) return -1;
    return it - states_.begin();
}

namespace {

// log k! table, grown on demand; per-thread so lookups stay lock-free
const std::vector<double>& log_factorials(std::size_t upto) {
    thread_local std::vector<double> table{0.0};
    if (table.size() <= upto) {
        std::size_t old = table.size();
        table.resize(upto + 1);
        for (std::size_t k = old; k <= upto; ++k)
            table[k] = std::lgamma(static_cast<double>(k) + 1.0);
    }
    return table;
}

}  // namespace

double stationary_probability(const Configuration& x, const Margins& margins) {
    if (!x.satisfies(margins))
        throw ConfigError("configuration violates margins");
    const auto& lf = log_factorials(static_cast<std::size_t>(margins.total()));
    double logp = 0;
    for (int j = 0; j < margins.colours; ++j) {
        logp += lf[static_cast<std::size_t>(margins.colour_count)];
        for (int i = 0; i < margins.urns; ++i)
            logp -= lf[static_cast<std::size_t>(x.at(i, j))];
    }
    logp -= lf[static_cast<std::size_t>(margins.total())];
    for (int i = 0; i < margins.urns; ++i)
        logp += lf[static_cast<std::size_t>(margins.urn_size)];
    return std::exp(logp);
}

StationaryTable stationary_table(const StateSpace& space) {
    StationaryTable t;
    t.p.resize(static_cast<Eigen::Index>(space.size()));
    for (std::size_t i = 0; i < space.size(); ++i)
        t.p(static_cast<Eigen::Index>(i)) = stationary_probability(space.state(i), space.margins());
    return t;
}

CentreSpec CentreSpec::macro(double delta) {
    if (delta <= 0 || delta > 1) throw ConfigError("macro delta must lie in (0,1]");
    return {Kind::Macro, delta};
}

double CentreSpec::resolved_l(const Margins& m) const {
    double target = m.cell_target();
    double l = 0;
    switch (kind) {
        case Kind::Meso: l = value; break;
        case Kind::Centre: l = value * std::sqrt(target); break;
        case Kind::Macro: l = value * target; break;
    }
    if (l < 0) throw ConfigError("centre threshold L must be nonnegative");
    return l;
}

bool in_centre(const Configuration& x, const Margins& margins, const CentreSpec& spec) {
    const double thr = spec.threshold(margins);
    for (int v : x.counts)
        if (static_cast<double>(v) < thr - 1e-12) return false;
    return true;
}

std::vector<int> centre_members(const StateSpace& space, const CentreSpec& spec) {
    std::vector<int> out;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (in_centre(space.state(i), space.margins(), spec))
            out.push_back(static_cast<int>(i));
    return out;
}

double centre_mass(const StateSpace& space, const StationaryTable& pi,
                   const CentreSpec& spec) {
    double mass = 0;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (in_centre(space.state(i), space.margins(), spec))
            mass += pi.p(static_cast<Eigen::Index>(i));
    return mass;
}

long l1_distance(const Configuration& x, const Configuration& y) {
    if (x.urns != y.urns || x.colours != y.colours)
        throw ConfigError("l1 distance requires equal margins");
    long s = 0;
    for (std::size_t k = 0; k < x.counts.size(); ++k)
        s += std::abs(x.counts[k] - y.counts[k]);
    return s;
}

LabeledSpace LabeledSpace::enumerate(int d, int n, std::size_t cap) {
    if (d < 2 || n < 1) throw ConfigError("labeled space requires d >= 2, n >= 1");
    LabeledSpace sp;
    sp.d_ = d;
    sp.n_ = n;
    const int balls = d * n;

    {
        const auto& lf = log_factorials(static_cast<std::size_t>(balls));
        double logcount = lf[static_cast<std::size_t>(balls)] -
                          d * lf[static_cast<std::size_t>(n)];
        if (logcount > std::log(static_cast<double>(cap)) + 1e-9)
            throw CapExceededError("labeled state enumeration exceeded cap");
    }

    std::vector<std::int8_t> urn_of(static_cast<std::size_t>(balls), -1);
    // Fill urns in order; each urn takes all n-subsets of the remaining
    // balls in lexicographic order, which yields the canonical order of
    // states (urn lists sorted, concatenation lexicographic).
    auto rec = [&](auto&& self, int urn, int start, int taken) -> void {
        if (urn == d) {
            sp.states_.push_back(urn_of);
            return;
        }
        if (taken == n) {
            // next urn starts from the smallest unassigned ball
            self(self, urn + 1, 0, 0);
            return;
        }
        for (int b = start; b < balls; ++b) {
            if (urn_of[static_cast<std::size_t>(b)] >= 0) continue;
            urn_of[static_cast<std::size_t>(b)] = static_cast<std::int8_t>(urn);
            self(self, urn, b + 1, taken + 1);
            urn_of[static_cast<std::size_t>(b)] = -1;
        }
    };
    rec(rec, 0, 0, 0);
    for (std::size_t i = 0; i < sp.states_.size(); ++i)
        sp.index_[sp.states_[i]] = static_cast<int>(i);
    return sp;
}

std::ptrdiff_t LabeledSpace::index_of(const std::vector<std::int8_t>& urn_of_ball) const {
    auto it = index_.find(urn_of_ball);
    return it == index_.end() ? -1 : it->second;
}

Configuration LabeledSpace::project_counts(std::size_t i) const {
    Configuration x{d_, d_, std::vector<int>(static_cast<std::size_t>(d_ * d_), 0)};
    const auto& s = states_[i];
    for (int b = 0; b < balls(); ++b)
        x.at(s[static_cast<std::size_t>(b)], b / n_) += 1;
    return x;
}

OrderedDeckSpace OrderedDeckSpace::enumerate(int d, int n, std::size_t cap) {
    if (d < 2 || n < 1) throw ConfigError("deck space requires d >= 2, n >= 1");
    OrderedDeckSpace sp;
    sp.d_ = d;
    sp.n_ = n;
    const int cards = d * n;
    double logcount = std::lgamma(static_cast<double>(cards) + 1.0);
    if (logcount > std::log(static_cast<double>(cap)) + 1e-9)
        throw CapExceededError("ordered deck enumeration exceeded cap");

    std::vector<std::int8_t> deck(static_cast<std::size_t>(cards));
    std::iota(deck.begin(), deck.end(), static_cast<std::int8_t>(0));
    do {
        sp.states_.push_back(deck);
    } while (std::next_permutation(deck.begin(), deck.end()));
    for (std::size_t i = 0; i < sp.states_.size(); ++i)
        sp.index_[sp.states_[i]] = static_cast<int>(i);
    return sp;
}

std::ptrdiff_t OrderedDeckSpace::index_of(const std::vector<std::int8_t>& deck) const {
    auto it = index_.find(deck);
    return it == index_.end() ? -1 : it->second;
}

std::vector<std::int8_t> OrderedDeckSpace::forget_order(std::size_t i) const {
    std::vector<std::int8_t> urn_of(static_cast<std::size_t>(cards()));
    const auto& s = states_[i];
    for (int p = 0; p < cards(); ++p)
        urn_of[static_cast<std::size_t>(s[static_cast<std::size_t>(p)])] =
            static_cast<std::int8_t>(p / n_);
    return urn_of;
}

}  // namespace urnlab
