#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace urnlab {

// Permutation of {1..d} in one-line notation. The public interface is
// 1-based; storage is 0-based.
class Permutation {
public:
    explicit Permutation(const std::vector<int>& images_one_based);

    static Permutation identity(int d);
    // (1 2 ... d) as a single forward cycle: i -> i+1 mod d.
    static Permutation forward_cycle(int d);
    // Transposition of the 1-based pair (a, b).
    static Permutation transposition(int d, int a, int b);

    int degree() const { return static_cast<int>(images_.size()); }
    // 0-based image lookup.
    int operator()(int i) const { return images_[static_cast<std::size_t>(i)]; }

    Permutation inverse() const;
    std::vector<int> one_line() const;  // 1-based
    std::string to_string() const;

    bool operator==(const Permutation& o) const { return images_ == o.images_; }
    bool operator<(const Permutation& o) const { return images_ < o.images_; }

private:
    Permutation() = default;
    std::vector<int> images_;  // 0-based
};

struct MeasureAtom {
    Permutation perm;
    double weight;
};

// Probability measure on S_d given by weighted permutations. Duplicate
// permutations are merged and weights rescaled to sum to one at
// construction time; downstream code relies on that.
class PermutationMeasure {
public:
    PermutationMeasure(int d, std::vector<MeasureAtom> atoms);

    static PermutationMeasure dirac(Permutation sigma);
    static PermutationMeasure uniform_transpositions(int d);

    int degree() const { return d_; }
    const std::vector<MeasureAtom>& atoms() const { return atoms_; }
    double weight_of(const Permutation& sigma) const;

    // mu(sigma) == mu(sigma^{-1}) for every atom, within tol.
    bool is_symmetric(double tol = 1e-12) const;

private:
    int d_;
    std::vector<MeasureAtom> atoms_;  // sorted by permutation, weights sum to 1
};

// Parses {"d": int, "support": [{"perm": [..], "weight": w}, ...]}.
PermutationMeasure parse_measure(const nlohmann::json& doc);

}  // namespace urnlab
