// End-to-end checks of the urnlab binary: exit codes, file outputs,
// manifest round-trips. The binary path comes in via --binary.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "urnlab/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_binary;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("urnlab_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    std::string cmd = g_binary + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path write_config(const TempDir& dir, const json& doc, const char* name = "config.json") {
    fs::path p = dir.path / name;
    std::ofstream out(p);
    out << doc.dump(2);
    return p;
}

json cyclic3_model(int n) {
    return json{{"variant", "generalised"},
                {"d", 3},
                {"m", 2},
                {"n", n},
                {"mu", {{"d", 3}, {"support", {{{"perm", {2, 3, 1}}, {"weight", 1.0}}}}}}};
}

json bl_model(int n) {
    return json{{"variant", "generalised"},
                {"d", 2},
                {"m", 2},
                {"n", n},
                {"mu", {{"d", 2}, {"support", {{{"perm", {2, 1}}, {"weight", 1.0}}}}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("analyze: cyclic and mean-field gaps, degenerate exit code") {
    TempDir dir;
    json cfg{{"mu", {{"d", 3}, {"support", {{{"perm", {2, 3, 1}}, {"weight", 1.0}}}}}}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("analyze --config " + cp.string() + " --out " + dir.path.string()) == 0);
    json rep = urnlab::read_json(dir.path / "analyze.json");
    CHECK(rep["gap"].get<double>() == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(rep["irreducible"].get<bool>());

    // mean-field d=5 via explicit transposition support
    json support = json::array();
    for (int a = 1; a <= 5; ++a)
        for (int b = a + 1; b <= 5; ++b) {
            std::vector<int> perm{1, 2, 3, 4, 5};
            std::swap(perm[a - 1], perm[b - 1]);
            support.push_back({{"perm", perm}, {"weight", 1.0}});
        }
    json mf{{"mu", {{"d", 5}, {"support", support}}}};
    fs::path mp = write_config(dir, mf, "mf.json");
    CHECK(run("analyze --config " + mp.string() + " --out " + dir.path.string()) == 0);
    json mrep = urnlab::read_json(dir.path / "analyze.json");
    CHECK(mrep["gap"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));

    // identity measure: reducible, exit 4
    json degenerate{{"mu", {{"d", 3}, {"support", {{{"perm", {1, 2, 3}}, {"weight", 1.0}}}}}}};
    fs::path dp = write_config(dir, degenerate, "id.json");
    CHECK(run("analyze --config " + dp.string() + " --out " + dir.path.string()) == 4);
}

TEST_CASE("config errors exit with code 2") {
    TempDir dir;
    fs::path bad = dir.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(run("analyze --config " + bad.string() + " --out " + dir.path.string()) == 2);

    json unknown{{"mu", {{"d", 2}, {"support", {{{"perm", {2, 1}}}}}}}, {"bogus", 1}};
    fs::path up = write_config(dir, unknown, "unknown.json");
    CHECK(run("analyze --config " + up.string() + " --out " + dir.path.string()) == 2);

    // empty time list
    json tv{{"model", bl_model(2)}, {"times", json::array()}};
    fs::path tp = write_config(dir, tv, "tv.json");
    CHECK(run("exact-tv --config " + tp.string() + " --out " + dir.path.string()) == 2);

    // zero replicates
    json hit{{"model", bl_model(2)},
             {"centre", {{"kind", "centre"}, {"value", 1.0}}},
             {"start", "adversarial"},
             {"replicates", 0}};
    fs::path hp = write_config(dir, hit, "hit.json");
    CHECK(run("mc-hit --config " + hp.string() + " --seed 1 --out " + dir.path.string()) == 2);

    // missing seed for an MC command
    json hit2 = hit;
    hit2["replicates"] = 4;
    fs::path hp2 = write_config(dir, hit2, "hit2.json");
    CHECK(run("mc-hit --config " + hp2.string() + " --out " + dir.path.string()) == 2);
}

TEST_CASE("exact-tv emits a monotone curve and a manifest that round-trips") {
    TempDir dir;
    json cfg{{"model", bl_model(4)},
             {"times", {{"min", 0.5}, {"max", 64.0}, {"points", 30}, {"scale", "log"}}}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("exact-tv --config " + cp.string() + " --svg --out " + dir.path.string()) == 0);
    CHECK(fs::exists(dir.path / "tv_curve.csv"));
    CHECK(fs::exists(dir.path / "tv_curve.svg"));

    // header row + monotone tv column
    std::ifstream csv(dir.path / "tv_curve.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,d_tv");
    double prev = 2.0;
    int rows = 0;
    while (std::getline(csv, line)) {
        auto comma = line.find(',');
        double tv = std::stod(line.substr(comma + 1));
        CHECK(tv <= prev + 1e-12);
        prev = tv;
        ++rows;
    }
    CHECK(rows == 30);

    // re-running with the manifest's resolved config reproduces the CSV
    json manifest = urnlab::read_json(dir.path / "manifest.json");
    TempDir dir2;
    fs::path rp = write_config(dir2, manifest["config"], "resolved.json");
    CHECK(run("exact-tv --config " + rp.string() + " --out " + dir2.path.string()) == 0);
    CHECK(slurp(dir.path / "tv_curve.csv") == slurp(dir2.path / "tv_curve.csv"));
    json manifest2 = urnlab::read_json(dir2.path / "manifest.json");
    CHECK(manifest["config"] == manifest2["config"]);
}

TEST_CASE("balanced and labeled exact-tv runs agree") {
    json grid{{"min", 0.0}, {"max", 6.0}, {"points", 20}, {"scale", "linear"}};
    json mu{{"d", 2}, {"support", {{{"perm", {2, 1}}, {"weight", 1.0}}}}};
    TempDir bal_dir, lab_dir;
    json bal{{"model", {{"variant", "balanced"}, {"d", 2}, {"n", 2}, {"mu", mu}}},
             {"times", grid}};
    json lab{{"model", {{"variant", "labeled"}, {"d", 2}, {"n", 2}, {"mu", mu}}},
             {"times", grid}};
    fs::path bp = write_config(bal_dir, bal);
    fs::path lp = write_config(lab_dir, lab);
    CHECK(run("exact-tv --config " + bp.string() + " --out " + bal_dir.path.string()) == 0);
    CHECK(run("exact-tv --config " + lp.string() + " --out " + lab_dir.path.string()) == 0);

    auto read_tv = [](const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> tv;
        while (std::getline(in, line))
            tv.push_back(std::stod(line.substr(line.find(',') + 1)));
        return tv;
    };
    auto btv = read_tv(bal_dir.path / "tv_curve.csv");
    auto ltv = read_tv(lab_dir.path / "tv_curve.csv");
    REQUIRE(btv.size() == ltv.size());
    for (std::size_t k = 0; k < btv.size(); ++k) CHECK(std::abs(btv[k] - ltv[k]) < 1e-9);
}

TEST_CASE("svg output is a well-formed single-plot document") {
    TempDir dir;
    json cfg{{"model", bl_model(2)},
             {"times", {{"min", 0.0}, {"max", 4.0}, {"points", 9}, {"scale", "linear"}}}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("exact-tv --config " + cp.string() + " --svg --out " + dir.path.string()) == 0);
    std::string svg = slurp(dir.path / "tv_curve.svg");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.rfind("</svg>") != std::string::npos);
    CHECK(svg.find("http://") == svg.find("http://www.w3.org/2000/svg"));  // no external assets
}

TEST_CASE("transform with macro(1) reproduces the kernel") {
    TempDir dir;
    json cfg{{"model", bl_model(3)},
             {"transform", "modify"},
             {"set", {{"kind", "macro"}, {"value", 1.0}}}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("transform --config " + cp.string() + " --out " + dir.path.string()) == 0);
    json manifest = urnlab::read_json(dir.path / "manifest.json");
    CHECK(manifest["summary"]["max_entry_diff_vs_input"].get<double>() < 1e-14);
    CHECK(manifest["summary"]["stationarity_residual"].get<double>() < 1e-12);
    CHECK(fs::exists(dir.path / "kernel.csv"));
}

TEST_CASE("cutoff-scan emits rows with decreasing ratios") {
    TempDir dir;
    json cfg{{"model",
              {{"variant", "generalised"},
               {"d", 2},
               {"m", 2},
               {"n_list", {4, 16}},
               {"mu", {{"d", 2}, {"support", {{{"perm", {2, 1}}, {"weight", 1.0}}}}}}}},
             {"eps", 0.25}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("cutoff-scan --config " + cp.string() + " --out " + dir.path.string()) == 0);
    std::ifstream csv(dir.path / "cutoff_scan.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "n,t_mix_lo,t_mix_hi,ratio,predicted");
    std::vector<double> ratios;
    std::string line;
    while (std::getline(csv, line)) {
        // ratio is the 4th column
        std::size_t pos = 0;
        for (int c = 0; c < 3; ++c) pos = line.find(',', pos) + 1;
        ratios.push_back(std::stod(line.substr(pos)));
    }
    REQUIRE(ratios.size() == 2);
    CHECK(ratios[0] >= 1.0);
    CHECK(ratios[1] >= 1.0);
    CHECK(ratios[1] < ratios[0]);
}

TEST_CASE("mixing-time, profile, compare, mc and shuffle commands run") {
    TempDir dir;
    {
        json cfg{{"model", bl_model(3)}, {"eps", {0.25, 0.5}}, {"linf", true}};
        fs::path cp = write_config(dir, cfg, "mix.json");
        CHECK(run("mixing-time --config " + cp.string() + " --out " + dir.path.string()) == 0);
        json manifest = urnlab::read_json(dir.path / "manifest.json");
        CHECK(manifest["summary"].contains("t_rel"));
    }
    {
        json cfg{{"model", bl_model(2)}, {"deltas", {0.3, 0.6}}};
        fs::path cp = write_config(dir, cfg, "prof.json");
        CHECK(run("profile --config " + cp.string() + " --out " + dir.path.string()) == 0);
        CHECK(fs::exists(dir.path / "profile.csv"));
    }
    {
        json cfg{{"model", bl_model(4)}, {"centre", {{"kind", "centre"}, {"value", 1.0}}}};
        fs::path cp = write_config(dir, cfg, "cmp.json");
        CHECK(run("compare --config " + cp.string() + " --out " + dir.path.string()) == 0);
        json rep = urnlab::read_json(dir.path / "compare.json");
        CHECK(rep["dirichlet_residual"].get<double>() <= 1e-9);
    }
    {
        json cfg{{"model", cyclic3_model(20)},
                 {"centre", {{"kind", "centre"}, {"value", 2.0}}},
                 {"start", "adversarial"},
                 {"replicates", 8}};
        fs::path cp = write_config(dir, cfg, "hit.json");
        CHECK(run("mc-hit --config " + cp.string() + " --seed 11 --out " + dir.path.string()) ==
              0);
        CHECK(fs::exists(dir.path / "hits.csv"));

        // the resolved config replays to identical samples
        json manifest = urnlab::read_json(dir.path / "manifest.json");
        TempDir dir2;
        fs::path rp = write_config(dir2, manifest["config"], "resolved.json");
        CHECK(run("mc-hit --config " + rp.string() + " --out " + dir2.path.string()) == 0);
        CHECK(slurp(dir.path / "hits.csv") == slurp(dir2.path / "hits.csv"));
        json manifest2 = urnlab::read_json(dir2.path / "manifest.json");
        CHECK(manifest["config"] == manifest2["config"]);
    }
    {
        json cfg{{"model", bl_model(4)},
                 {"centre", {{"kind", "macro"}, {"value", 1.0}}},
                 {"start", "balanced"},
                 {"horizon", 5.0},
                 {"replicates", 4}};
        fs::path cp = write_config(dir, cfg, "occ.json");
        CHECK(run("mc-occupation --config " + cp.string() + " --seed 3 --out " +
                  dir.path.string()) == 0);
    }
    {
        json cfg{{"model", bl_model(4)}, {"t", 2.0}, {"replicates", 150}};
        fs::path cp = write_config(dir, cfg, "var.json");
        CHECK(run("mc-variance --config " + cp.string() + " --seed 5 --out " +
                  dir.path.string()) == 0);
    }
    {
        json cfg{{"N", 50}, {"alpha", 2.0}, {"eps", 0.5}, {"replicates", 200}};
        fs::path cp = write_config(dir, cfg, "walk.json");
        CHECK(run("biased-walk --config " + cp.string() + " --seed 7 --out " +
                  dir.path.string()) == 0);
    }
    {
        json cfg{{"model",
                  {{"variant", "shuffle"},
                   {"d", 2},
                   {"n", 2},
                   {"mu", {{"d", 2}, {"support", {{{"perm", {2, 1}}, {"weight", 1.0}}}}}}}},
                 {"steps", 2000}};
        fs::path cp = write_config(dir, cfg, "shuf.json");
        CHECK(run("shuffle-check --config " + cp.string() + " --seed 9 --out " +
                  dir.path.string()) == 0);
        json rep = urnlab::read_json(dir.path / "shuffle_check.json");
        CHECK(rep["lumping_residual"].get<double>() < 1e-12);
        CHECK(rep["projection_steps_legal"].get<bool>());
    }
}

TEST_CASE("kernel csv round-trips") {
    TempDir dir;
    json cfg{{"model", bl_model(3)},
             {"transform", "reversibilize"}};
    fs::path cp = write_config(dir, cfg);
    CHECK(run("transform --config " + cp.string() + " --out " + dir.path.string()) == 0);
    urnlab::StochasticMatrix back =
        urnlab::read_kernel_csv(dir.path / "kernel.csv", 7);
    back.validate(1e-9);
}

int main(int argc, char** argv) {
    doctest::Context context;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--binary") g_binary = argv[i + 1];
    if (g_binary.empty()) {
        // fall back to the build-tree location relative to this test binary
        fs::path self = fs::canonical("/proc/self/exe");
        g_binary = (self.parent_path().parent_path() / "urnlab").string();
    }
    context.applyCommandLine(1, argv);
    return context.run();
}
