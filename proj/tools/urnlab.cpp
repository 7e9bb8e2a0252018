// urnlab command-line front end: configuration ingestion, experiment
// orchestration, CSV/SVG emission. One JSON config document per run.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urnlab/errors.hpp"
#include "urnlab/exact.hpp"
#include "urnlab/io.hpp"
#include "urnlab/kernels.hpp"
#include "urnlab/montecarlo.hpp"
#include "urnlab/parallel.hpp"
#include "urnlab/permutation.hpp"
#include "urnlab/single_ball.hpp"
#include "urnlab/statespace.hpp"
#include "urnlab/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace urnlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitDegenerate = 4;
constexpr int kExitBudget = 5;

struct RunOptions {
    fs::path config_path;
    fs::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool svg = false;
    unsigned threads = default_threads();
    std::optional<std::size_t> cap;
    double tol = 1e-12;
};

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + " must be an object");
    for (auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown key in " + context + ": " + key);
    }
}

json measure_to_json(const PermutationMeasure& mu) {
    json support = json::array();
    for (const auto& atom : mu.atoms())
        support.push_back({{"perm", atom.perm.one_line()}, {"weight", atom.weight}});
    return json{{"d", mu.degree()}, {"support", support}};
}

ChainSpec parse_model(const json& j) {
    require_keys(j, {"variant", "d", "m", "n", "mu"}, "model");
    if (!j.contains("variant")) throw ConfigError("model requires a variant");
    Variant variant = variant_from_name(j["variant"].get<std::string>());
    if (!j.contains("d")) throw ConfigError("model requires d");
    int d = j["d"].get<int>();
    int m = j.value("m", d);
    if (!j.contains("n")) throw ConfigError("model requires n");
    int n = j["n"].get<int>();
    if (variant == Variant::MeanField) {
        if (j.contains("mu")) throw ConfigError("mean_field fixes mu; do not supply one");
        return ChainSpec::make(variant, d, m, n, nullptr);
    }
    if (!j.contains("mu")) throw ConfigError("model requires mu");
    PermutationMeasure mu = parse_measure(j["mu"]);
    return ChainSpec::make(variant, d, m, n, &mu);
}

json model_to_json(const ChainSpec& spec) {
    json j{{"variant", variant_name(spec.variant)},
           {"d", spec.d},
           {"m", spec.m},
           {"n", spec.n}};
    if (spec.variant != Variant::MeanField) j["mu"] = measure_to_json(spec.mu);
    return j;
}

CentreSpec parse_centre(const json& j) {
    require_keys(j, {"kind", "value"}, "centre");
    if (!j.contains("kind") || !j.contains("value"))
        throw ConfigError("centre requires kind and value");
    std::string kind = j["kind"].get<std::string>();
    double value = j["value"].get<double>();
    if (kind == "meso") return CentreSpec::meso(value);
    if (kind == "centre") return CentreSpec::centre(value);
    if (kind == "macro") return CentreSpec::macro(value);
    throw ConfigError("unknown centre kind: " + kind);
}

json centre_to_json(const CentreSpec& c) {
    const char* kind = c.kind == CentreSpec::Kind::Meso
                           ? "meso"
                           : (c.kind == CentreSpec::Kind::Centre ? "centre" : "macro");
    return json{{"kind", kind}, {"value", c.value}};
}

// Exact machinery for one model: state space (by variant), kernel, pi.
struct BuiltChain {
    ChainSpec spec;
    std::optional<StateSpace> space;
    std::optional<LabeledSpace> labeled;
    std::optional<OrderedDeckSpace> deck;
    StochasticMatrix kernel;
    StationaryTable pi;
};

BuiltChain build_chain(const ChainSpec& spec, const RunOptions& opt) {
    BuiltChain b{spec, {}, {}, {}, {}, {}};
    switch (spec.variant) {
        case Variant::Generalised:
        case Variant::Balanced:
        case Variant::MeanField: {
            b.space = StateSpace::enumerate(spec.margins(), opt.cap.value_or(2'000'000));
            b.kernel = build_kernel(spec, *b.space);
            b.pi = stationary_table(*b.space);
            break;
        }
        case Variant::Labeled: {
            b.labeled = LabeledSpace::enumerate(spec.d, spec.n, opt.cap.value_or(200'000));
            b.kernel = build_labeled_kernel(spec, *b.labeled);
            b.pi.p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(b.labeled->size()),
                                               1.0 / static_cast<double>(b.labeled->size()));
            break;
        }
        case Variant::Shuffle:
        case Variant::RestrictedShuffle: {
            b.deck = OrderedDeckSpace::enumerate(spec.d, spec.n, opt.cap.value_or(40'000));
            b.kernel = build_shuffle_kernel(spec, *b.deck);
            b.pi.p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(b.deck->size()),
                                               1.0 / static_cast<double>(b.deck->size()));
            break;
        }
    }
    return b;
}

Configuration parse_start(const json& j, const Margins& margins) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "adversarial") return adversarial_start(margins);
        if (s == "balanced") return balanced_start(margins);
        throw ConfigError("unknown start: " + s);
    }
    if (j.is_array()) {
        Configuration x{margins.urns, margins.colours,
                        std::vector<int>(static_cast<std::size_t>(margins.urns * margins.colours), 0)};
        if (static_cast<int>(j.size()) != margins.urns)
            throw ConfigError("start matrix has wrong number of rows");
        for (int i = 0; i < margins.urns; ++i) {
            const auto& row = j[static_cast<std::size_t>(i)];
            if (static_cast<int>(row.size()) != margins.colours)
                throw ConfigError("start matrix has wrong number of columns");
            for (int c = 0; c < margins.colours; ++c)
                x.at(i, c) = row[static_cast<std::size_t>(c)].get<int>();
        }
        if (!x.satisfies(margins)) throw ConfigError("start matrix violates the margins");
        return x;
    }
    throw ConfigError("start must be a string or a count matrix");
}

json start_to_json(const Configuration& x) {
    json rows = json::array();
    for (int i = 0; i < x.urns; ++i) {
        json row = json::array();
        for (int j = 0; j < x.colours; ++j) row.push_back(x.at(i, j));
        rows.push_back(row);
    }
    return rows;
}

void write_manifest(const RunOptions& opt, const std::string& command,
                    const json& resolved_config, const std::vector<std::string>& outputs,
                    const json& summary = json::object()) {
    json manifest{{"tool", "urnlab"},
                  {"version", kVersion},
                  {"command", command},
                  {"config", resolved_config},
                  {"outputs", outputs}};
    if (!summary.empty()) manifest["summary"] = summary;
    write_json(opt.out_dir / "manifest.json", manifest);
}

std::uint64_t require_seed(const RunOptions& opt, const json& config) {
    if (opt.seed) return *opt.seed;
    if (config.contains("seed")) return config["seed"].get<std::uint64_t>();
    throw ConfigError("monte carlo commands require a seed (--seed or config key)");
}

std::vector<double> parse_times(const json& j) {
    if (j.is_array()) {
        auto times = j.get<std::vector<double>>();
        if (times.empty()) throw ConfigError("time grid must be nonempty");
        return times;
    }
    require_keys(j, {"min", "max", "points", "scale"}, "times");
    double lo = j.at("min").get<double>();
    double hi = j.at("max").get<double>();
    int points = j.at("points").get<int>();
    std::string scale = j.value("scale", "linear");
    if (points < 1 || hi < lo) throw ConfigError("invalid time grid");
    std::vector<double> times;
    for (int k = 0; k < points; ++k) {
        double f = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
        if (scale == "log") {
            if (lo <= 0) throw ConfigError("log grid requires min > 0");
            times.push_back(lo * std::pow(hi / lo, f));
        } else if (scale == "linear") {
            times.push_back(lo + f * (hi - lo));
        } else {
            throw ConfigError("unknown grid scale: " + scale);
        }
    }
    return times;
}

int cmd_analyze(const json& config, const RunOptions& opt) {
    require_keys(config, {"mu"}, "config");
    if (!config.contains("mu")) throw ConfigError("analyze requires a measure");
    PermutationMeasure mu = parse_measure(config["mu"]);
    SpectralReport rep = analyze_measure(mu);

    json out{{"d", rep.d},
             {"cheeger", rep.cheeger},
             {"irreducible", rep.irreducible},
             {"symmetric_measure", rep.symmetric_measure}};
    json eigs = json::array();
    for (const auto& z : rep.eigenvalues) eigs.push_back({z.real(), z.imag()});
    out["eigenvalues"] = eigs;
    if (rep.irreducible) {
        out["gap"] = rep.gap;
        out["poincare_gap"] = rep.poincare_gap;
        json edges = json::array();
        for (std::size_t k = 0; k < rep.tree.edges.size(); ++k)
            edges.push_back({{"from", rep.tree.edges[k].first + 1},
                             {"to", rep.tree.edges[k].second + 1},
                             {"weight", rep.tree.weights[k]}});
        out["heavy_tree"] = edges;
    } else {
        out["gap"] = nullptr;
        out["poincare_gap"] = nullptr;
        out["heavy_tree"] = nullptr;
    }
    write_json(opt.out_dir / "analyze.json", out);
    write_manifest(opt, "analyze", json{{"mu", measure_to_json(mu)}}, {"analyze.json"}, out);

    std::cout << "d = " << rep.d << "\n";
    if (rep.irreducible)
        std::cout << "gamma = " << rep.gap << "\ngamma+ = " << rep.poincare_gap << "\n";
    std::cout << "cheeger = " << rep.cheeger << "\nirreducible = " << (rep.irreducible ? "true" : "false")
              << "\nsymmetric_measure = " << (rep.symmetric_measure ? "true" : "false") << "\n";
    if (!rep.irreducible) {
        std::cerr << "degenerate model: single-ball chain is reducible\n";
        return kExitDegenerate;
    }
    return kExitOk;
}

int cmd_exact_tv(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "times"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    std::vector<double> times = parse_times(config.at("times"));
    BuiltChain chain = build_chain(spec, opt);
    TVCurve curve = tv_curve(chain.kernel, chain.pi, times, opt.tol);

    {
        CsvWriter csv(opt.out_dir / "tv_curve.csv", {"t", "d_tv"});
        for (std::size_t k = 0; k < curve.times.size(); ++k)
            csv.row({curve.times[k], curve.worst_case_tv[k]});
    }
    std::vector<std::string> outputs{"tv_curve.csv"};
    if (chain.space) {
        write_state_space_csv(opt.out_dir / "states.csv", *chain.space, chain.pi);
        outputs.push_back("states.csv");
    }
    if (opt.svg) {
        write_svg_plot(opt.out_dir / "tv_curve.svg", "worst-case total variation",
                       {{"d_tv", "#1f6fb2", curve.times, curve.worst_case_tv}});
        outputs.push_back("tv_curve.svg");
    }
    json resolved{{"model", model_to_json(spec)}, {"times", times}};
    write_manifest(opt, "exact-tv", resolved, outputs,
                   json{{"schema", "tv-curve/v1"}, {"points", curve.times.size()}});
    return kExitOk;
}

int cmd_mixing_time(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "eps", "linf"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    auto eps_list = config.at("eps").get<std::vector<double>>();
    if (eps_list.empty()) throw ConfigError("eps list must be nonempty");
    bool with_linf = config.value("linf", false);
    BuiltChain chain = build_chain(spec, opt);

    json summary{{"schema", "mixing/v1"}};
    bool reversible = reversibility_check(chain.kernel, chain.pi);
    if (reversible) {
        summary["t_rel"] = relaxation_time(chain.kernel, chain.pi);
        summary["gap"] = spectral_gap_reversible(chain.kernel, chain.pi);
    }
    {
        std::vector<std::string> header{"eps", "t_mix"};
        if (with_linf) header.push_back("t_mix_inf");
        CsvWriter csv(opt.out_dir / "mixing.csv", header);
        for (double eps : eps_list) {
            std::vector<CsvValue> row{eps, mixing_time(chain.kernel, chain.pi, eps)};
            if (with_linf) row.push_back(linf_mixing_time(chain.kernel, chain.pi, eps));
            csv.row(row);
        }
    }
    json resolved{{"model", model_to_json(spec)}, {"eps", eps_list}, {"linf", with_linf}};
    write_manifest(opt, "mixing-time", resolved, {"mixing.csv"}, summary);
    return kExitOk;
}

int cmd_cutoff_scan(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "eps"}, "config");
    const json& mj = config.at("model");
    require_keys(mj, {"variant", "d", "m", "mu", "n_list"}, "model");
    Variant variant = variant_from_name(mj.at("variant").get<std::string>());
    int d = mj.at("d").get<int>();
    int m = mj.value("m", d);
    auto n_list = mj.at("n_list").get<std::vector<int>>();
    double eps = config.value("eps", 0.25);
    if (variant == Variant::MeanField && mj.contains("mu"))
        throw ConfigError("mean_field fixes mu; do not supply one");
    PermutationMeasure mu = variant == Variant::MeanField
                                ? PermutationMeasure::uniform_transpositions(d)
                                : parse_measure(mj.at("mu"));
    auto rows = cutoff_ratio_scan(variant, d, m, mu, n_list, eps,
                                  opt.cap.value_or(2'000'000));
    {
        CsvWriter csv(opt.out_dir / "cutoff_scan.csv",
                      {"n", "t_mix_lo", "t_mix_hi", "ratio", "predicted"});
        for (const auto& r : rows)
            csv.row({static_cast<long long>(r.n), r.t_mix_lo, r.t_mix_hi, r.ratio, r.predicted});
    }
    std::vector<std::string> outputs{"cutoff_scan.csv"};
    if (opt.svg) {
        SvgSeries s{"ratio", "#b23a1f", {}, {}};
        for (const auto& r : rows) {
            s.x.push_back(r.n);
            s.y.push_back(r.ratio);
        }
        write_svg_plot(opt.out_dir / "cutoff_scan.svg", "cutoff ratio scan", {s});
        outputs.push_back("cutoff_scan.svg");
    }
    json rmodel{{"variant", variant_name(variant)}, {"d", d}, {"m", m}, {"n_list", n_list}};
    if (variant != Variant::MeanField) rmodel["mu"] = measure_to_json(mu);
    write_manifest(opt, "cutoff-scan", json{{"model", rmodel}, {"eps", eps}}, outputs,
                   json{{"schema", "cutoff-scan/v1"}});
    return kExitOk;
}

int cmd_transform(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "transform", "set"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    std::string kind = config.at("transform").get<std::string>();
    BuiltChain chain = build_chain(spec, opt);
    if (!chain.space)
        throw ConfigError("transform works on count models (labeled/shuffle not supported)");

    std::vector<int> subset;
    json set_json;
    if (config.contains("set")) {
        if (config["set"].is_object() && config["set"].contains("indices")) {
            require_keys(config["set"], {"indices"}, "set");
            subset = config["set"]["indices"].get<std::vector<int>>();
            set_json = config["set"];
        } else {
            CentreSpec centre = parse_centre(config["set"]);
            subset = centre_members(*chain.space, centre);
            set_json = centre_to_json(centre);
        }
    }

    StochasticMatrix out;
    StationaryTable out_pi;
    if (kind == "restrict") {
        out = restrict_kernel(chain.kernel, subset);
        out_pi.p.resize(static_cast<Eigen::Index>(subset.size()));
        double mass = 0;
        for (int i : subset) mass += chain.pi.p(i);
        for (std::size_t k = 0; k < subset.size(); ++k)
            out_pi.p(static_cast<Eigen::Index>(k)) = chain.pi.p(subset[k]) / mass;
    } else if (kind == "induce") {
        out = induce(chain.kernel, subset);
        out_pi.p.resize(static_cast<Eigen::Index>(subset.size()));
        double mass = 0;
        for (int i : subset) mass += chain.pi.p(i);
        for (std::size_t k = 0; k < subset.size(); ++k)
            out_pi.p(static_cast<Eigen::Index>(k)) = chain.pi.p(subset[k]) / mass;
    } else if (kind == "collapse") {
        auto [ck, cpi] = collapse(chain.kernel, chain.pi, subset);
        out = std::move(ck);
        out_pi = std::move(cpi);
    } else if (kind == "modify") {
        out = modify(chain.kernel, chain.pi, subset);
        out_pi.p.resize(static_cast<Eigen::Index>(subset.size()));
        double mass = 0;
        for (int i : subset) mass += chain.pi.p(i);
        for (std::size_t k = 0; k < subset.size(); ++k)
            out_pi.p(static_cast<Eigen::Index>(k)) = chain.pi.p(subset[k]) / mass;
    } else if (kind == "reversibilize") {
        out = additive_reversibilization(chain.kernel, chain.pi);
        out_pi = chain.pi;
    } else {
        throw ConfigError("unknown transform: " + kind);
    }

    write_kernel_csv(opt.out_dir / "kernel.csv", out);
    write_state_space_csv(opt.out_dir / "states.csv", *chain.space, chain.pi);
    json summary{{"schema", "kernel-triples/v1"},
                 {"size", out.size()},
                 {"stationarity_residual", stationarity_residual_l1(out, out_pi)},
                 {"input_reversible", reversibility_check(chain.kernel, chain.pi)},
                 {"output_db_residual", detailed_balance_residual(out, out_pi)}};
    if (out.size() == chain.kernel.size())
        summary["max_entry_diff_vs_input"] = (out.p - chain.kernel.p).cwiseAbs().maxCoeff();
    json resolved{{"model", model_to_json(spec)}, {"transform", kind}};
    if (!set_json.is_null()) resolved["set"] = set_json;
    write_manifest(opt, "transform", resolved, {"kernel.csv", "states.csv"}, summary);
    std::cout << "transform " << kind << ": size " << out.size() << ", stationarity residual "
              << summary["stationarity_residual"].get<double>() << "\n";
    return kExitOk;
}

int cmd_profile(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "deltas", "cap"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    auto deltas = config.at("deltas").get<std::vector<double>>();
    if (deltas.empty()) throw ConfigError("deltas must be nonempty");
    int cap = config.value("cap", 18);
    BuiltChain chain = build_chain(spec, opt);
    {
        CsvWriter csv(opt.out_dir / "profile.csv", {"delta", "lambda", "lambda_modified"});
        for (double delta : deltas) {
            ProfilePoint pt = spectral_profile(chain.kernel, chain.pi, delta, cap);
            csv.row({pt.delta, pt.lambda, pt.lambda_modified});
        }
    }
    json resolved{{"model", model_to_json(spec)}, {"deltas", deltas}, {"cap", cap}};
    write_manifest(opt, "profile", resolved, {"profile.csv"},
                   json{{"schema", "spectral-profile/v1"}});
    return kExitOk;
}

int cmd_compare(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "centre", "probes"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    CentreSpec centre = parse_centre(config.at("centre"));
    int probes = config.value("probes", 100);
    BuiltChain chain = build_chain(spec, opt);
    if (!chain.space) throw ConfigError("compare requires a count model");

    std::vector<int> subset = centre_members(*chain.space, centre);
    if (subset.empty()) throw DegenerateModelError("centre set is empty");

    ChainSpec mf = ChainSpec::make(Variant::MeanField, spec.d, spec.m, spec.n, nullptr);
    StochasticMatrix mf_kernel = build_kernel(mf, *chain.space);
    StochasticMatrix source = restrict_kernel(mf_kernel, subset);

    StationaryTable pi_a;
    pi_a.p.resize(static_cast<Eigen::Index>(subset.size()));
    double mass = 0;
    for (int i : subset) mass += chain.pi.p(i);
    for (std::size_t k = 0; k < subset.size(); ++k)
        pi_a.p(static_cast<Eigen::Index>(k)) = chain.pi.p(subset[k]) / mass;

    StochasticMatrix induced = induce(chain.kernel, subset);
    StochasticMatrix target = additive_reversibilization(induced, pi_a);

    ComparisonReport rep = congestion_ratio(target, source, pi_a, nullptr, probes,
                                            opt.seed.value_or(7));
    json out{{"congestion", rep.congestion},
             {"max_path_length", rep.max_path_length},
             {"max_edge_load", rep.max_edge_load},
             {"dirichlet_residual", rep.dirichlet_residual},
             {"centre_size", subset.size()}};
    write_json(opt.out_dir / "compare.json", out);
    json resolved{{"model", model_to_json(spec)},
                  {"centre", centre_to_json(centre)},
                  {"probes", probes}};
    write_manifest(opt, "compare", resolved, {"compare.json"}, out);
    std::cout << "congestion B = " << rep.congestion << ", dirichlet residual "
              << rep.dirichlet_residual << "\n";
    return kExitOk;
}

int cmd_mc_hit(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "centre", "start", "replicates", "budget", "seed"},
                 "config");
    ChainSpec spec = parse_model(config.at("model"));
    CentreSpec centre = parse_centre(config.at("centre"));
    int replicates = config.at("replicates").get<int>();
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    std::uint64_t seed = require_seed(opt, config);
    auto budget = config.value("budget", std::uint64_t{1'000'000'000});
    Configuration start = parse_start(config.value("start", json("balanced")), spec.margins());

    HittingSample sample =
        hitting_time_centre(spec, centre, start, replicates, seed, budget, opt.threads);
    {
        CsvWriter csv(opt.out_dir / "hits.csv", {"replicate", "value"});
        for (std::size_t r = 0; r < sample.times.size(); ++r)
            csv.row({static_cast<long long>(r), sample.times[r]});
    }
    json summary{{"schema", "mc-sample/v1"},
                 {"median", quantile(sample.times, 0.5)},
                 {"q25", quantile(sample.times, 0.25)},
                 {"q75", quantile(sample.times, 0.75)},
                 {"min", quantile(sample.times, 0.0)},
                 {"max", quantile(sample.times, 1.0)},
                 {"truncated", sample.truncated}};
    json resolved{{"model", model_to_json(spec)},
                  {"centre", centre_to_json(centre)},
                  {"start", start_to_json(start)},
                  {"replicates", replicates},
                  {"budget", budget},
                  {"seed", seed}};
    write_manifest(opt, "mc-hit", resolved, {"hits.csv"}, summary);
    std::cout << "median hitting time " << summary["median"].get<double>() << "\n";
    return sample.truncated ? kExitBudget : kExitOk;
}

int cmd_mc_occupation(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "centre", "start", "horizon", "replicates", "budget", "seed"},
                 "config");
    ChainSpec spec = parse_model(config.at("model"));
    CentreSpec centre = parse_centre(config.at("centre"));
    double horizon = config.at("horizon").get<double>();
    int replicates = config.at("replicates").get<int>();
    std::uint64_t seed = require_seed(opt, config);
    auto budget = config.value("budget", std::uint64_t{1'000'000'000});
    Configuration start = parse_start(config.value("start", json("balanced")), spec.margins());

    OccupationSample sample = occupation_fraction(spec, centre, start, horizon, replicates,
                                                  seed, budget, opt.threads);
    {
        CsvWriter csv(opt.out_dir / "occupation.csv", {"replicate", "value"});
        for (std::size_t r = 0; r < sample.fractions.size(); ++r)
            csv.row({static_cast<long long>(r), sample.fractions[r]});
    }
    double mean = 0;
    for (double f : sample.fractions) mean += f;
    mean /= static_cast<double>(sample.fractions.size());
    json summary{{"schema", "mc-sample/v1"},
                 {"mean", mean},
                 {"median", quantile(sample.fractions, 0.5)},
                 {"truncated", sample.truncated}};
    json resolved{{"model", model_to_json(spec)},
                  {"centre", centre_to_json(centre)},
                  {"start", start_to_json(start)},
                  {"horizon", horizon},
                  {"replicates", replicates},
                  {"budget", budget},
                  {"seed", seed}};
    write_manifest(opt, "mc-occupation", resolved, {"occupation.csv"}, summary);
    return sample.truncated ? kExitBudget : kExitOk;
}

int cmd_mc_variance(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "start", "t", "replicates", "seed"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    double t = config.at("t").get<double>();
    int replicates = config.at("replicates").get<int>();
    std::uint64_t seed = require_seed(opt, config);
    Configuration start = parse_start(config.value("start", json("balanced")), spec.margins());

    VarianceTable table = variance_probe(spec, start, t, replicates, seed, opt.threads);
    {
        CsvWriter csv(opt.out_dir / "variance.csv", {"urn", "colour", "variance", "stderr"});
        for (int i = 0; i < table.variance.rows(); ++i)
            for (int j = 0; j < table.variance.cols(); ++j)
                csv.row({static_cast<long long>(i + 1), static_cast<long long>(j + 1),
                         table.variance(i, j), table.standard_error(i, j)});
    }
    json resolved{{"model", model_to_json(spec)},
                  {"start", start_to_json(start)},
                  {"t", t},
                  {"replicates", replicates},
                  {"seed", seed}};
    write_manifest(opt, "mc-variance", resolved, {"variance.csv"},
                   json{{"schema", "variance-table/v1"},
                        {"max_variance", table.variance.maxCoeff()}});
    return kExitOk;
}

int cmd_biased_walk(const json& config, const RunOptions& opt) {
    require_keys(config, {"N", "alpha", "eps", "replicates", "seed"}, "config");
    int n_sites = config.at("N").get<int>();
    double alpha = config.at("alpha").get<double>();
    double eps = config.at("eps").get<double>();
    int replicates = config.at("replicates").get<int>();
    std::uint64_t seed = require_seed(opt, config);

    double estimate = biased_walk_exit(n_sites, alpha, eps, replicates, seed, opt.threads);
    json out{{"estimate", estimate},
             {"horizon", eps * n_sites * static_cast<double>(n_sites) / alpha}};
    write_json(opt.out_dir / "biased_walk.json", out);
    json resolved{{"N", n_sites}, {"alpha", alpha}, {"eps", eps},
                  {"replicates", replicates}, {"seed", seed}};
    write_manifest(opt, "biased-walk", resolved, {"biased_walk.json"}, out);
    std::cout << "exit probability estimate " << estimate << "\n";
    return kExitOk;
}

int cmd_shuffle_check(const json& config, const RunOptions& opt) {
    require_keys(config, {"model", "steps", "seed"}, "config");
    ChainSpec spec = parse_model(config.at("model"));
    if (spec.variant != Variant::Shuffle && spec.variant != Variant::RestrictedShuffle)
        throw ConfigError("shuffle-check requires a shuffle variant");
    long steps = config.value("steps", 10'000L);
    std::uint64_t seed = require_seed(opt, config);

    json summary;
    // exact lumping when the ordered space is enumerable
    double factorial = std::lgamma(static_cast<double>(spec.d) * spec.n + 1.0);
    std::size_t cap = opt.cap.value_or(40'000);
    if (factorial <= std::log(static_cast<double>(cap)) + 1e-9) {
        OrderedDeckSpace deck = OrderedDeckSpace::enumerate(spec.d, spec.n, cap);
        StochasticMatrix shuffle_kernel = build_shuffle_kernel(spec, deck);
        LabeledSpace labeled = LabeledSpace::enumerate(spec.d, spec.n);
        StochasticMatrix labeled_kernel = build_labeled_kernel(spec, labeled);
        std::vector<int> projection(deck.size());
        for (std::size_t i = 0; i < deck.size(); ++i)
            projection[i] = static_cast<int>(labeled.index_of(deck.forget_order(i)));
        summary["lumping_residual"] =
            lumping_check(shuffle_kernel, projection, labeled_kernel);
        summary["ordered_states"] = deck.size();
        summary["labeled_states"] = labeled.size();
    }

    ShuffleTrajectory traj = simulate_shuffle(spec, steps, seed);
    bool legal = true;
    for (long l1 : traj.projected_l1_changes)
        if (l1 % 2 != 0 || l1 == 2 || l1 > 4L * spec.d) legal = false;
    summary["steps"] = steps;
    summary["max_projected_l1_change"] = traj.max_l1_change;
    summary["projection_steps_legal"] = legal;

    write_json(opt.out_dir / "shuffle_check.json", summary);
    json resolved{{"model", model_to_json(spec)}, {"steps", steps}, {"seed", seed}};
    write_manifest(opt, "shuffle-check", resolved, {"shuffle_check.json"}, summary);
    if (summary.contains("lumping_residual"))
        std::cout << "lumping residual " << summary["lumping_residual"].get<double>() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"urnlab: generalised urn chains, exact spectra, and experiments"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunOptions opt;
    std::string command;
    for (const char* name :
         {"analyze", "exact-tv", "mixing-time", "cutoff-scan", "transform", "profile",
          "compare", "mc-hit", "mc-occupation", "mc-variance", "biased-walk",
          "shuffle-check"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "JSON config document")->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", opt.seed, "master seed for MC commands");
        sub->add_flag("--svg", opt.svg, "emit an SVG plot where supported");
        sub->add_option("--threads", opt.threads, "worker threads");
        sub->add_option("--cap", opt.cap, "state/work cap override");
        sub->add_option("--tol", opt.tol, "numerical tolerance");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (opt.cap && *opt.cap == 0) throw ConfigError("--cap must be positive");
        if (opt.threads == 0) opt.threads = 1;
        std::filesystem::create_directories(opt.out_dir);
        json config = read_json(opt.config_path);
        if (command == "analyze") return cmd_analyze(config, opt);
        if (command == "exact-tv") return cmd_exact_tv(config, opt);
        if (command == "mixing-time") return cmd_mixing_time(config, opt);
        if (command == "cutoff-scan") return cmd_cutoff_scan(config, opt);
        if (command == "transform") return cmd_transform(config, opt);
        if (command == "profile") return cmd_profile(config, opt);
        if (command == "compare") return cmd_compare(config, opt);
        if (command == "mc-hit") return cmd_mc_hit(config, opt);
        if (command == "mc-occupation") return cmd_mc_occupation(config, opt);
        if (command == "mc-variance") return cmd_mc_variance(config, opt);
        if (command == "biased-walk") return cmd_biased_walk(config, opt);
        if (command == "shuffle-check") return cmd_shuffle_check(config, opt);
        std::cerr << "unknown command\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapExceededError& e) {
        std::cerr << "cap exceeded: " << e.what() << "\n";
        return kExitCap;
    } catch (const DegenerateModelError& e) {
        std::cerr << "degenerate model: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const StepBudgetError& e) {
        std::cerr << "step budget exhausted: " << e.what() << "\n";
        return kExitBudget;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
