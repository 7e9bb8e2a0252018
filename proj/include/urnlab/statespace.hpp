#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace urnlab {

// Row/column margins of the configuration space: d urns of urn_size balls,
// m colours with colour_count balls each. The generalised model has
// urn_size = m*n and colour_count = d*n; the balanced model has d = m and
// urn_size = colour_count = n.
struct Margins {
    int urns = 0;
    int colours = 0;
    int urn_size = 0;
    int colour_count = 0;

    static Margins generalised(int d, int m, int n);
    static Margins balanced(int d, int n);

    long long total() const { return 1LL * urns * urn_size; }
    // Per-cell target count = urn_size*colour_count/total; equals n for the
    // generalised model and n/d for the balanced one.
    double cell_target() const {
        return static_cast<double>(urn_size) * colour_count / static_cast<double>(total());
    }
    void validate() const;
    bool operator==(const Margins&) const = default;
};

// d x m nonnegative count matrix, row-major.
struct Configuration {
    int urns = 0;
    int colours = 0;
    std::vector<int> counts;

    int at(int i, int j) const { return counts[static_cast<std::size_t>(i * colours + j)]; }
    int& at(int i, int j) { return counts[static_cast<std::size_t>(i * colours + j)]; }
    bool satisfies(const Margins& m) const;
    bool operator==(const Configuration&) const = default;
};

// All contingency tables with the given margins, in lexicographic order of
// the (d-1)(m-1) free coordinates.
class StateSpace {
public:
    static StateSpace enumerate(const Margins& margins, std::size_t cap = 2'000'000);

    const Margins& margins() const { return margins_; }
    std::size_t size() const { return states_.size(); }
    const Configuration& state(std::size_t i) const { return states_[i]; }
    // -1 when the configuration is not in the space.
    std::ptrdiff_t index_of(const Configuration& x) const;

private:
    Margins margins_;
    std::vector<Configuration> states_;
};

struct StationaryTable {
    Eigen::VectorXd p;
    std::size_t size() const { return static_cast<std::size_t>(p.size()); }
};

// pi(x) from the product of per-colour multinomials over the global
// multinomial, evaluated in log-space.
double stationary_probability(const Configuration& x, const Margins& margins);

StationaryTable stationary_table(const StateSpace& space);

// Centre sets: every cell count >= target - L_eff, where L_eff is L for
// meso(L), C*sqrt(target) for centre(C), and delta*target for macro(delta).
struct CentreSpec {
    enum class Kind { Meso, Centre, Macro };
    Kind kind = Kind::Macro;
    double value = 1.0;

    static CentreSpec meso(double l) { return {Kind::Meso, l}; }
    static CentreSpec centre(double c) { return {Kind::Centre, c}; }
    static CentreSpec macro(double delta);

    double resolved_l(const Margins& m) const;
    double threshold(const Margins& m) const { return m.cell_target() - resolved_l(m); }
};

bool in_centre(const Configuration& x, const Margins& margins, const CentreSpec& spec);

std::vector<int> centre_members(const StateSpace& space, const CentreSpec& spec);

double centre_mass(const StateSpace& space, const StationaryTable& pi,
                   const CentreSpec& spec);

// Sum of |x(i,j) - y(i,j)|; always even for equal margins.
long l1_distance(const Configuration& x, const Configuration& y);

// Partitions of d*n distinguishable balls into d urns of size n. States are
// listed with each urn's ball list sorted, ordered lexicographically on the
// concatenated lists; stored as a ball -> urn assignment.
class LabeledSpace {
public:
    static LabeledSpace enumerate(int d, int n, std::size_t cap = 200'000);

    int urns() const { return d_; }
    int per_urn() const { return n_; }
    int balls() const { return d_ * n_; }
    std::size_t size() const { return states_.size(); }
    const std::vector<std::int8_t>& state(std::size_t i) const { return states_[i]; }
    std::ptrdiff_t index_of(const std::vector<std::int8_t>& urn_of_ball) const;

    // Counts per (urn, colour) with colour classes of size n: ball b has
    // colour b/n. Projects onto the balanced space with margins (d, n).
    Configuration project_counts(std::size_t i) const;

private:
    int d_ = 0, n_ = 0;
    std::vector<std::vector<std::int8_t>> states_;
    std::map<std::vector<std::int8_t>, int> index_;
};

// Decks of d*n distinct cards in d ordered stacks of n. A state stores the
// concatenated stacks; slot p holds the card at position p%n of stack p/n.
// States are enumerated in lexicographic order.
class OrderedDeckSpace {
public:
    static OrderedDeckSpace enumerate(int d, int n, std::size_t cap = 40'000);

    int stacks() const { return d_; }
    int stack_size() const { return n_; }
    int cards() const { return d_ * n_; }
    std::size_t size() const { return states_.size(); }
    const std::vector<std::int8_t>& state(std::size_t i) const { return states_[i]; }
    std::ptrdiff_t index_of(const std::vector<std::int8_t>& deck) const;

    // Forget order: ball -> stack assignment in the labeled space.
    std::vector<std::int8_t> forget_order(std::size_t i) const;

private:
    int d_ = 0, n_ = 0;
    std::vector<std::vector<std::int8_t>> states_;
    std::map<std::vector<std::int8_t>, int> index_;
};

}  // namespace urnlab
