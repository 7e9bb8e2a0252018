#include <doctest.h>

#include <cmath>
#include <deque>
#include <random>

#include "urnlab/errors.hpp"
#include "urnlab/kernels.hpp"
#include "urnlab/statespace.hpp"

using namespace urnlab;

namespace {

double binom(int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// BFS graph distance on the positive-entry graph of a kernel.
std::vector<int> bfs_distances(const StochasticMatrix& p, int from) {
    const int n = p.size();
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::deque<int> queue;
    dist[static_cast<std::size_t>(from)] = 0;
    queue.push_back(from);
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w = 0; w < n; ++w) {
            if (w == v || p.p(v, w) <= 0) continue;
            if (dist[static_cast<std::size_t>(w)] >= 0) continue;
            dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
            queue.push_back(w);
        }
    }
    return dist;
}

}  // namespace

TEST_CASE("margins validation") {
    CHECK_THROWS_AS(Margins({3, 2, 5, 5}).validate(), ConfigError);
    Margins g = Margins::generalised(3, 2, 1);
    CHECK(g.urn_size == 2);
    CHECK(g.colour_count == 3);
    CHECK(g.cell_target() == doctest::Approx(1.0));
    Margins b = Margins::balanced(3, 6);
    CHECK(b.cell_target() == doctest::Approx(2.0));
}

TEST_CASE("state enumeration counts") {
    CHECK(StateSpace::enumerate(Margins::generalised(2, 2, 1)).size() == 3);
    CHECK(StateSpace::enumerate(Margins::generalised(3, 2, 1)).size() == 7);
    CHECK(StateSpace::enumerate(Margins::balanced(2, 1)).size() == 2);
    for (int n = 1; n <= 20; ++n)
        CHECK(StateSpace::enumerate(Margins::generalised(2, 2, n)).size() ==
              static_cast<std::size_t>(2 * n + 1));
    CHECK_THROWS_AS(StateSpace::enumerate(Margins::generalised(2, 2, 50), 10),
                    CapExceededError);
}

TEST_CASE("index bijection round-trips") {
    for (const Margins& mg : {Margins::generalised(2, 3, 2), Margins::generalised(3, 2, 1),
                              Margins::balanced(3, 3)}) {
        StateSpace space = StateSpace::enumerate(mg);
        for (std::size_t i = 0; i < space.size(); ++i)
            CHECK(space.index_of(space.state(i)) == static_cast<std::ptrdiff_t>(i));
    }
}

TEST_CASE("stationary probabilities") {
    Margins mg = Margins::generalised(2, 2, 1);
    StateSpace space = StateSpace::enumerate(mg);
    StationaryTable pi = stationary_table(space);
    // hypergeometric cross-check: pi(k) = C(2,k) C(2, 2-k) / C(4,2)
    for (std::size_t i = 0; i < space.size(); ++i) {
        int k = space.state(i).at(0, 0);
        double expect = binom(2, k) * binom(2, 2 - k) / binom(4, 2);
        CHECK(pi.p(static_cast<Eigen::Index>(i)) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(std::abs(pi.p.sum() - 1.0) < 1e-12);

    Configuration x{2, 2, {1, 1, 1, 1}};
    CHECK(stationary_probability(x, mg) == doctest::Approx(2.0 / 3));
    Configuration y{2, 2, {0, 2, 2, 0}};
    CHECK(stationary_probability(y, mg) == doctest::Approx(1.0 / 6));
    Configuration bad{2, 2, {2, 1, 0, 1}};
    CHECK_THROWS_AS(stationary_probability(bad, mg), ConfigError);
}

TEST_CASE("stationary table sums to one on larger spaces") {
    for (const Margins& mg : {Margins::generalised(3, 3, 1), Margins::generalised(2, 3, 3),
                              Margins::balanced(3, 4)}) {
        StateSpace space = StateSpace::enumerate(mg);
        StationaryTable pi = stationary_table(space);
        CHECK(std::abs(pi.p.sum() - 1.0) < 1e-12);
        CHECK(pi.p.minCoeff() > 0);
    }
}

TEST_CASE("stationary probability is urn- and colour-permutation invariant") {
    Margins mg = Margins::generalised(3, 2, 2);
    StateSpace space = StateSpace::enumerate(mg);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto& x = space.state(rng() % space.size());
        Configuration xu = x;  // swap urns 0 and 1
        for (int j = 0; j < mg.colours; ++j) std::swap(xu.at(0, j), xu.at(1, j));
        Configuration xc = x;  // swap colours 0 and 1
        for (int i = 0; i < mg.urns; ++i) std::swap(xc.at(i, 0), xc.at(i, 1));
        CHECK(stationary_probability(xu, mg) ==
              doctest::Approx(stationary_probability(x, mg)).epsilon(1e-12));
        CHECK(stationary_probability(xc, mg) ==
              doctest::Approx(stationary_probability(x, mg)).epsilon(1e-12));
    }
}

TEST_CASE("centre membership") {
    Margins mg = Margins::generalised(2, 2, 1);
    Configuration mid{2, 2, {1, 1, 1, 1}};
    Configuration corner{2, 2, {0, 2, 2, 0}};
    CHECK(in_centre(mid, mg, CentreSpec::centre(0.5)));
    CHECK_FALSE(in_centre(corner, mg, CentreSpec::centre(0.5)));
    CHECK(in_centre(corner, mg, CentreSpec::macro(1.0)));
    CHECK(in_centre(mid, mg, CentreSpec::meso(0.0)));
}

TEST_CASE("centre mass") {
    Margins mg = Margins::generalised(2, 2, 1);
    StateSpace space = StateSpace::enumerate(mg);
    StationaryTable pi = stationary_table(space);
    CHECK(centre_mass(space, pi, CentreSpec::macro(1.0)) == doctest::Approx(1.0));
    CHECK(centre_mass(space, pi, CentreSpec::meso(0.0)) == doctest::Approx(2.0 / 3));
}

TEST_CASE("meso mass lower bound") {
    // pi(Meso(L)) >= 1 - dm exp(-L^2/(2n)) across enumerable instances
    for (int n = 1; n <= 6; ++n) {
        Margins mg = Margins::generalised(2, 2, n);
        StateSpace space = StateSpace::enumerate(mg);
        StationaryTable pi = stationary_table(space);
        for (int k = 0; k <= 10; ++k) {
            double l = n * k / 10.0;
            double bound = 1.0 - 4.0 * std::exp(-l * l / (2.0 * n));
            CHECK(centre_mass(space, pi, CentreSpec::meso(l)) >= bound - 1e-12);
        }
    }
}

TEST_CASE("l1 distance") {
    Configuration x{2, 2, {1, 1, 1, 1}};
    CHECK(l1_distance(x, x) == 0);
    Configuration y{2, 2, {0, 2, 2, 0}};
    Configuration z{2, 2, {2, 0, 0, 2}};
    CHECK(l1_distance(y, z) == 8);
    // one swap changes four cells by one
    Configuration w{2, 2, {2, 0, 0, 2}};
    Configuration v{2, 2, {1, 1, 1, 1}};
    CHECK(l1_distance(w, v) == 4);
    Configuration other{2, 3, {1, 1, 1, 1, 1, 1}};
    CHECK_THROWS_AS(l1_distance(x, other), ConfigError);
}

TEST_CASE("labeled space enumeration") {
    CHECK(LabeledSpace::enumerate(2, 2).size() == 6);
    CHECK(LabeledSpace::enumerate(2, 1).size() == 2);
    CHECK(LabeledSpace::enumerate(3, 1).size() == 6);
    CHECK_THROWS_AS(LabeledSpace::enumerate(4, 4, 100), CapExceededError);

    LabeledSpace sp = LabeledSpace::enumerate(2, 2);
    for (std::size_t i = 0; i < sp.size(); ++i)
        CHECK(sp.index_of(sp.state(i)) == static_cast<std::ptrdiff_t>(i));
    // projection onto balanced counts keeps margins
    Margins bal = Margins::balanced(2, 2);
    for (std::size_t i = 0; i < sp.size(); ++i)
        CHECK(sp.project_counts(i).satisfies(bal));
}

TEST_CASE("ordered deck space") {
    OrderedDeckSpace sp = OrderedDeckSpace::enumerate(2, 2);
    CHECK(sp.size() == 24);
    for (std::size_t i = 0; i < sp.size(); ++i)
        CHECK(sp.index_of(sp.state(i)) == static_cast<std::ptrdiff_t>(i));
    CHECK_THROWS_AS(OrderedDeckSpace::enumerate(3, 3, 1000), CapExceededError);

    LabeledSpace lab = LabeledSpace::enumerate(2, 2);
    for (std::size_t i = 0; i < sp.size(); ++i)
        CHECK(lab.index_of(sp.forget_order(i)) >= 0);
}

TEST_CASE("graph distance vs l1 distance on mean-field graphs") {
    // (1/4)|x-y|_1 <= d_G <= ((d-1)/(2d))|x-y|_1 inside Macro(1/2), with a
    // +d slack for small-n boundary pairs
    for (const Margins& mg : {Margins::generalised(2, 2, 3), Margins::generalised(3, 2, 1),
                              Margins::generalised(2, 3, 2)}) {
        StateSpace space = StateSpace::enumerate(mg);
        ChainSpec mf = ChainSpec::make(Variant::MeanField, mg.urns, mg.colours,
                                       mg.colour_count / mg.urns, nullptr);
        StochasticMatrix p = build_kernel(mf, space);
        CentreSpec macro_half = CentreSpec::macro(0.5);
        const double d = mg.urns;
        for (std::size_t from = 0; from < space.size(); ++from) {
            auto dist = bfs_distances(p, static_cast<int>(from));
            bool from_macro = in_centre(space.state(from), mg, macro_half);
            for (std::size_t to = 0; to < space.size(); ++to) {
                REQUIRE(dist[to] >= 0);
                double l1 = static_cast<double>(l1_distance(space.state(from), space.state(to)));
                CHECK(dist[to] >= l1 / 4 - 1e-9);
                bool to_macro = in_centre(space.state(to), mg, macro_half);
                if (from_macro && to_macro)
                    CHECK(dist[to] <= (d - 1) / (2 * d) * l1 + 1e-9);
                else
                    CHECK(dist[to] <= (d - 1) / (2 * d) * l1 + d + 1e-9);
            }
        }
    }
}

TEST_CASE("ball growth bracket inside Macro(1/2)") {
    const int dm_exponent = 1;  // (d-1)(m-1) for d=m=2
    for (int n : {6, 10}) {
        Margins mg = Margins::generalised(2, 2, n);
        StateSpace space = StateSpace::enumerate(mg);
        CentreSpec macro_half = CentreSpec::macro(0.5);
        for (std::size_t c = 0; c < space.size(); ++c) {
            if (!in_centre(space.state(c), mg, macro_half)) continue;
            for (int r = 2; r <= n / 2; r += 2) {
                long count = 0;
                for (std::size_t i = 0; i < space.size(); ++i)
                    if (l1_distance(space.state(c), space.state(i)) * 2 <= r) ++count;
                double upper = std::pow(r + 1.0, dm_exponent);
                double lower = std::pow(2.0 * std::floor(r / (2.0 * 4 * 4)) + 1.0, dm_exponent);
                CHECK(static_cast<double>(count) <= upper + 1e-9);
                CHECK(static_cast<double>(count) >= lower - 1e-9);
            }
        }
    }
}
