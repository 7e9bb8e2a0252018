#include "urnlab/permutation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "urnlab/errors.hpp"

namespace urnlab {

Permutation::Permutation(const std::vector<int>& images_one_based) {
    const int d = static_cast<int>(images_one_based.size());
    if (d < 1) throw ConfigError("permutation must have degree >= 1");
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    images_.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        int v = images_one_based[static_cast<std::size_t>(i)];
        if (v < 1 || v > d || seen[static_cast<std::size_t>(v - 1)]) {
            std::ostringstream os;
            os << "non-bijective permutation: entry " << v << " at position " << (i + 1);
            throw ConfigError(os.str());
        }
        seen[static_cast<std::size_t>(v - 1)] = 1;
        images_[static_cast<std::size_t>(i)] = v - 1;
    }
}

Permutation Permutation::identity(int d) {
    Permutation p;
    p.images_.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) p.images_[static_cast<std::size_t>(i)] = i;
    return p;
}

Permutation Permutation::forward_cycle(int d) {
    Permutation p;
    p.images_.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) p.images_[static_cast<std::size_t>(i)] = (i + 1) % d;
    return p;
}

Permutation Permutation::transposition(int d, int a, int b) {
    Permutation p = identity(d);
    if (a < 1 || a > d || b < 1 || b > d || a == b)
        throw ConfigError("invalid transposition");
    std::swap(p.images_[static_cast<std::size_t>(a - 1)],
              p.images_[static_cast<std::size_t>(b - 1)]);
    return p;
}

Permutation Permutation::inverse() const {
    Permutation p;
    p.images_.resize(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i)
        p.images_[static_cast<std::size_t>(images_[i])] = static_cast<int>(i);
    return p;
}

std::vector<int> Permutation::one_line() const {
    std::vector<int> out(images_.size());
    for (std::size_t i = 0; i < images_.size(); ++i) out[i] = images_[i] + 1;
    return out;
}

std::string Permutation::to_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < images_.size(); ++i) {
        if (i) os << ",";
        os << images_[i] + 1;
    }
    os << "]";
    return os.str();
}

PermutationMeasure::PermutationMeasure(int d, std::vector<MeasureAtom> atoms) : d_(d) {
    if (d < 2) throw ConfigError("measure degree must be >= 2");
    if (atoms.empty()) throw ConfigError("measure must have at least one atom");
    std::map<Permutation, double> merged;
    for (auto& a : atoms) {
        if (a.perm.degree() != d) throw ConfigError("degree mismatch in measure atom");
        if (a.weight < 0) throw ConfigError("negative weight in measure atom");
        merged[a.perm] += a.weight;
    }
    double total = 0;
    for (auto& [p, w] : merged) total += w;
    if (total <= 0) throw ConfigError("all-zero weights in measure");
    atoms_.reserve(merged.size());
    for (auto& [p, w] : merged)
        if (w > 0) atoms_.push_back({p, w / total});
}

PermutationMeasure PermutationMeasure::dirac(Permutation sigma) {
    int d = sigma.degree();
    return PermutationMeasure(d, {{std::move(sigma), 1.0}});
}

PermutationMeasure PermutationMeasure::uniform_transpositions(int d) {
    std::vector<MeasureAtom> atoms;
    for (int a = 1; a <= d; ++a)
        for (int b = a + 1; b <= d; ++b)
            atoms.push_back({Permutation::transposition(d, a, b), 1.0});
    return PermutationMeasure(d, std::move(atoms));
}

double PermutationMeasure::weight_of(const Permutation& sigma) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), sigma,
                               [](const MeasureAtom& a, const Permutation& p) {
                                   return a.perm < p;
                               });
    if (it != atoms_.end() && it->perm == sigma) return it->weight;
    return 0.0;
}

bool PermutationMeasure::is_symmetric(double tol) const {
    for (const auto& a : atoms_)
        if (std::abs(a.weight - weight_of(a.perm.inverse())) > tol) return false;
    return true;
}

PermutationMeasure parse_measure(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("measure document must be an object");
    for (auto& [key, _] : doc.items())
        if (key != "d" && key != "support")
            throw ConfigError("unknown key in measure document: " + key);
    if (!doc.contains("d") || !doc["d"].is_number_integer())
        throw ConfigError("measure document must declare integer d");
    int d = doc["d"].get<int>();
    if (!doc.contains("support") || !doc["support"].is_array() || doc["support"].empty())
        throw ConfigError("measure document must declare a nonempty support array");
    std::vector<MeasureAtom> atoms;
    for (const auto& entry : doc["support"]) {
        if (!entry.is_object()) throw ConfigError("support entries must be objects");
        for (auto& [key, _] : entry.items())
            if (key != "perm" && key != "weight")
                throw ConfigError("unknown key in support entry: " + key);
        if (!entry.contains("perm") || !entry["perm"].is_array())
            throw ConfigError("support entry missing perm array");
        std::vector<int> images = entry["perm"].get<std::vector<int>>();
        if (static_cast<int>(images.size()) != d)
            throw ConfigError("degree mismatch: perm length differs from d");
        double w = entry.value("weight", 1.0);
        atoms.push_back({Permutation(images), w});
    }
    return PermutationMeasure(d, std::move(atoms));
}

}  // namespace urnlab
