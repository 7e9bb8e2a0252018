#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "urnlab/errors.hpp"
#include "urnlab/permutation.hpp"
#include "urnlab/single_ball.hpp"

using namespace urnlab;
using nlohmann::json;

namespace {

// seeded random measures with an irreducible single-ball chain
PermutationMeasure random_irreducible_measure(std::mt19937_64& rng, int d) {
    std::uniform_int_distribution<int> natoms(1, 4);
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    for (;;) {
        std::vector<MeasureAtom> atoms;
        int k = natoms(rng);
        for (int a = 0; a < k; ++a) {
            std::vector<int> images(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) images[static_cast<std::size_t>(i)] = i + 1;
            std::shuffle(images.begin(), images.end(), rng);
            atoms.push_back({Permutation(images), weight(rng)});
        }
        PermutationMeasure mu(d, std::move(atoms));
        if (is_irreducible(single_ball_matrix(mu))) return mu;
    }
}

}  // namespace

TEST_CASE("parse_measure handles the documented forms") {
    auto swap2 = parse_measure(json::parse(R"({"d":2,"support":[{"perm":[2,1],"weight":1.0}]})"));
    REQUIRE(swap2.atoms().size() == 1);
    CHECK(swap2.atoms()[0].weight == doctest::Approx(1.0));

    auto cycle3 = parse_measure(json::parse(R"({"d":3,"support":[{"perm":[2,3,1],"weight":2.0}]})"));
    CHECK(cycle3.atoms()[0].weight == doctest::Approx(1.0));  // rescaled

    CHECK_THROWS_AS(parse_measure(json::parse(R"({"d":3,"support":[{"perm":[1,2,2],"weight":1.0}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"d":3,"support":[{"perm":[1,2],"weight":1.0}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"d":2,"support":[{"perm":[2,1],"weight":0.0}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_measure(json::parse(R"({"d":2,"support":[{"perm":[2,1],"weight":-1.0}]})")),
                    ConfigError);
}

TEST_CASE("measure atoms merge duplicates") {
    PermutationMeasure mu(2, {{Permutation({2, 1}), 1.0},
                              {Permutation({2, 1}), 1.0},
                              {Permutation({1, 2}), 2.0}});
    REQUIRE(mu.atoms().size() == 2);
    CHECK(mu.weight_of(Permutation({2, 1})) == doctest::Approx(0.5));
    CHECK(mu.weight_of(Permutation({1, 2})) == doctest::Approx(0.5));
}

TEST_CASE("single_ball_matrix examples") {
    // directed 3-cycle
    auto cyc = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    CHECK(cyc.u(0, 1) == doctest::Approx(1.0));
    CHECK(cyc.u(1, 2) == doctest::Approx(1.0));
    CHECK(cyc.u(2, 0) == doctest::Approx(1.0));
    CHECK(cyc.u(0, 0) == doctest::Approx(0.0));

    // uniform transpositions on S_3: all entries 1/3
    auto mf = single_ball_matrix(PermutationMeasure::uniform_transpositions(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(mf.u(i, j) == doctest::Approx(1.0 / 3));

    auto id = single_ball_matrix(PermutationMeasure::dirac(Permutation::identity(4)));
    CHECK((id.u - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
}

TEST_CASE("spectral gap values") {
    auto cyc4 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(4)));
    CHECK(spectral_gap(cyc4) == doctest::Approx(1.0).epsilon(1e-9));

    auto mf3 = single_ball_matrix(PermutationMeasure::uniform_transpositions(3));
    CHECK(spectral_gap(mf3) == doctest::Approx(1.0).epsilon(1e-9));

    auto swap2 = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1})));
    CHECK(spectral_gap(swap2) == doctest::Approx(2.0).epsilon(1e-9));

    auto id = single_ball_matrix(PermutationMeasure::dirac(Permutation::identity(3)));
    CHECK_THROWS_AS(spectral_gap(id), DegenerateModelError);
}

TEST_CASE("cheeger constant by subset enumeration") {
    auto swap2 = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1})));
    CHECK(cheeger_constant(swap2) == doctest::Approx(1.0));

    // directed 3-cycle: only singletons satisfy nu(A) <= 1/2, each with
    // flow 1/3 and mass 1/3
    auto cyc3 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    CHECK(cheeger_constant(cyc3) == doctest::Approx(1.0));

    // uniform 3x3 matrix: singleton flow 2/9 over mass 1/3
    auto mf3 = single_ball_matrix(PermutationMeasure::uniform_transpositions(3));
    CHECK(cheeger_constant(mf3) == doctest::Approx(2.0 / 3));

    // d = 4 mean-field: pairs give flow 2*(1/4)*(2/6) over mass 1/2
    auto mf4 = single_ball_matrix(PermutationMeasure::uniform_transpositions(4));
    CHECK(cheeger_constant(mf4) == doctest::Approx(1.0 / 3));
}

TEST_CASE("additive symmetrization") {
    auto cyc3 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    auto sym = additive_symmetrization(cyc3);
    CHECK(sym.u(0, 1) == doctest::Approx(0.5));
    CHECK(sym.u(1, 0) == doctest::Approx(0.5));
    CHECK(sym.u(0, 0) == doctest::Approx(0.0));

    auto mf3 = single_ball_matrix(PermutationMeasure::uniform_transpositions(3));
    CHECK((additive_symmetrization(mf3).u - mf3.u).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));

    auto id = single_ball_matrix(PermutationMeasure::dirac(Permutation::identity(3)));
    CHECK((additive_symmetrization(id).u - id.u).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("poincare gap values") {
    auto swap2 = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1})));
    CHECK(poincare_gap(swap2) == doctest::Approx(2.0));

    auto cyc3 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    CHECK(poincare_gap(cyc3) == doctest::Approx(1.5));

    auto mf3 = single_ball_matrix(PermutationMeasure::uniform_transpositions(3));
    CHECK(poincare_gap(mf3) == doctest::Approx(1.0));
}

TEST_CASE("irreducibility checks") {
    auto cyc3 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    CHECK(is_irreducible(cyc3));
    auto id = single_ball_matrix(PermutationMeasure::dirac(Permutation::identity(3)));
    CHECK_FALSE(is_irreducible(id));
    // {1,2} swap with 3 fixed
    auto block = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1, 3})));
    CHECK_FALSE(is_irreducible(block));
}

TEST_CASE("symmetric measure detection") {
    CHECK(PermutationMeasure::uniform_transpositions(4).is_symmetric());
    CHECK_FALSE(PermutationMeasure::dirac(Permutation::forward_cycle(3)).is_symmetric());
    CHECK(PermutationMeasure::dirac(Permutation::identity(3)).is_symmetric());
}

TEST_CASE("single ball mixing time") {
    auto swap2 = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1})));
    // TV(t) = e^{-2t}/2, so t(eps) = ln(1/(2 eps))/2
    CHECK(single_ball_mixing_time(swap2, 1.0, 0.1) ==
          doctest::Approx(std::log(5.0) / 2).epsilon(1e-5));
    CHECK(single_ball_mixing_time(swap2, 1.0, 0.5) == doctest::Approx(0.0));

    // cyclic d=3 at eps = 1/sqrt(100): inside the coarse bracket around
    // log(n)/(2 gamma), gamma = 3/2
    double n = 100.0;
    double t = single_ball_mixing_time(
        single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3))), 1.0,
        1.0 / std::sqrt(n));
    double centre = std::log(n) / 3.0;
    CHECK(t >= centre - 3.0);
    CHECK(t <= centre + 3.0 * std::log(std::log(n)));
}

TEST_CASE("heavy spanning tree") {
    auto swap2 = single_ball_matrix(PermutationMeasure::dirac(Permutation({2, 1})));
    auto t2 = heavy_spanning_tree(swap2);
    REQUIRE(t2.edges.size() == 1);
    CHECK(t2.weights[0] == doctest::Approx(1.0));
    CHECK(t2.weights[0] >= cheeger_constant(swap2) / 2);

    auto cyc3 = single_ball_matrix(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    auto t3 = heavy_spanning_tree(cyc3);
    REQUIRE(t3.edges.size() == 2);
    for (double w : t3.weights) CHECK(w >= cheeger_constant(cyc3) / 3 - 1e-12);

    auto mf4 = single_ball_matrix(PermutationMeasure::uniform_transpositions(4));
    auto t4 = heavy_spanning_tree(mf4);
    REQUIRE(t4.edges.size() == 3);
    for (double w : t4.weights) CHECK(w >= cheeger_constant(mf4) / 4 - 1e-12);
}

TEST_CASE("random measures: doubly stochastic single-ball matrices") {
    std::mt19937_64 rng(20240817);
    for (int trial = 0; trial < 100; ++trial) {
        int d = 2 + static_cast<int>(rng() % 5);
        auto mu = random_irreducible_measure(rng, d);
        auto u = single_ball_matrix(mu);
        for (int i = 0; i < d; ++i) {
            CHECK(std::abs(u.u.row(i).sum() - 1.0) < 1e-12);
            CHECK(std::abs(u.u.col(i).sum() - 1.0) < 1e-12);
        }
        if (mu.is_symmetric())
            CHECK((u.u - u.u.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("cheeger/poincare inequalities on random measures") {
    std::mt19937_64 rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        int d = 2 + static_cast<int>(rng() % 5);
        auto mu = random_irreducible_measure(rng, d);
        auto u = single_ball_matrix(mu);
        double phi = cheeger_constant(u);
        double phi_t = cheeger_constant(SingleBallMatrix{u.u.transpose()});
        double phi_p = cheeger_constant(additive_symmetrization(u));
        CHECK(std::abs(phi - phi_t) < 1e-12);
        CHECK(std::abs(phi - phi_p) < 1e-12);
        double gp = poincare_gap(u);
        CHECK(gp <= 2 * phi + 1e-12);
        CHECK(gp >= phi * phi / 2 - 1e-12);
    }
}

TEST_CASE("analyze_measure bundles consistent values") {
    auto rep = analyze_measure(PermutationMeasure::dirac(Permutation::forward_cycle(3)));
    CHECK(rep.irreducible);
    CHECK_FALSE(rep.symmetric_measure);
    CHECK(rep.gap == doctest::Approx(1.5));
    CHECK(rep.poincare_gap == doctest::Approx(1.5));
    CHECK(rep.eigenvalues.size() == 3);
    CHECK(rep.eigenvalues[0].real() == doctest::Approx(1.0));
    CHECK(rep.poincare_gap <= 2 * rep.cheeger + 1e-12);
}
