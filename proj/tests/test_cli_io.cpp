#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fictop/config.hpp"
#include "fictop/io.hpp"
#include "fictop/structures.hpp"

namespace fs = std::filesystem;
using namespace fictop;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

fs::path config_dir() { return FICTOP_CONFIG_DIR; }

fs::path temp_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("fictop_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(FICTOP_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("every shipped config parses and emits round-trip") {
    for (const auto& entry : fs::directory_iterator(config_dir())) {
        if (entry.path().extension() != ".cfg") continue;
        INFO("config: ", entry.path().string());
        ConfigFile cfg = parse_config_file(entry.path().string());
        std::istringstream again(emit_config(cfg));
        ConfigFile cfg2 = parse_config(again);
        CHECK(cfg == cfg2);
    }
}

TEST_CASE("parse errors carry line numbers") {
    {
        std::istringstream in("[domain\nwidth = 1\n");
        CHECK_THROWS_AS(parse_config(in), parse_error);
    }
    {
        std::istringstream in("width = 1\n");  // key outside any section
        CHECK_THROWS_AS(parse_config(in), parse_error);
    }
    {
        std::istringstream in("[domain]\nnx = 4\nnx = 8\n");
        CHECK_THROWS_AS(parse_config(in), parse_error);
    }
}

TEST_CASE("validation reports every issue at once") {
    std::istringstream in(
        "[domain]\n"
        "width = -1\n"
        "mystery = 3\n"
        "[shielding]\n"
        "omega = 0.7\n"
        "[penetrating]\n"
        "omega = 0.4\n");
    try {
        parse_config(in);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(e.issues.size() >= 3);  // negative domain, unknown key, weight sum
        bool mentions_weights = false;
        for (const auto& i : e.issues)
            if (i.find("omega") != std::string::npos) mentions_weights = true;
        CHECK(mentions_weights);
    }
}

TEST_CASE("unknown sections and bad values are rejected") {
    {
        std::istringstream in("[mystery]\nx = 1\n");
        CHECK_THROWS_AS(parse_config(in), validation_error);
    }
    {
        std::istringstream in("[domain]\nnx = lots\n");
        CHECK_THROWS_AS(parse_config(in), validation_error);
    }
    {
        std::istringstream in("[volume]\nvmax = 1.5\n");
        CHECK_THROWS_AS(parse_config(in), validation_error);
    }
}

TEST_CASE("minimal config gets documented defaults") {
    std::istringstream in("[domain]\nnx = 8\nny = 8\n");
    ConfigFile cfg = parse_config(in);
    CHECK(cfg.shielding.omega == 0.0);
    CHECK(cfg.penetrating.omega == 0.0);
    CHECK(!cfg.shielding.enabled);
    CHECK(cfg.vmax == 1.0);
    CHECK(cfg.iterations == 300);
    CHECK(cfg.levelset.tau == doctest::Approx(1e-4));
    CHECK(cfg.material.E == doctest::Approx(210e9));
}

TEST_CASE("build_problem flags unresolved boundaries") {
    std::istringstream in(
        "[domain]\nnx = 8\nny = 8\n"
        "[load]\nboundary = gamma_t\nfixed = gamma_u\n");
    ConfigFile cfg = parse_config(in);
    CHECK_THROWS_AS(build_problem(cfg), validation_error);
}

TEST_CASE("build_problem wires the benchmark spec") {
    ConfigFile cfg = parse_config_file((config_dir() / "bridge_shielding.cfg").string());
    ProblemSpec spec = build_problem(cfg);
    CHECK(spec.omega_s() == doctest::Approx(0.3));
    CHECK(spec.v_max == doctest::Approx(0.2));
    CHECK(spec.mesh.num_nodes() == 97 * 49);
    REQUIRE(spec.shielding.has_value());
    // automatic length: distance between the edge-set centroids
    CHECK(spec.shielding->length == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(!spec.mesh.node_set("gamma_u").empty());
    CHECK(!spec.mesh.tagged_edges("gamma_t").empty());
}

TEST_CASE("history csv writer emits the pinned header and one row per append") {
    fs::path dir = temp_dir("csv");
    fs::path file = dir / "history.csv";
    {
        HistoryCsvWriter w(file.string());
        w.append({1, 1.0, 0.5, 0.25, 0.0, 0.45, 0.0, 10.0});
        w.append({2, 0.9, 0.4, 0.2, 0.0, 0.36, 0.1, 10.5});
    }
    std::string text = slurp(file);
    CHECK(text.rfind("iter,volume_fraction,Ju,Js,Jp,J_combined,lambda,mu\n", 0) == 0);
    CHECK(count_lines(text) == 3);
    CHECK(text.find("\n1,1,0.5,0.25,0,0.45,0,10\n") != std::string::npos);
}

TEST_CASE("vtk writer produces a parseable legacy ascii grid") {
    Mesh m = generate_rect_mesh(1.0, 1.0, 2, 2);
    ScalarField f(m.num_nodes());
    for (int n = 0; n < m.num_nodes(); ++n) f[n] = n;
    std::vector<double> cell(m.num_elements(), 0.5);
    fs::path dir = temp_dir("vtk");
    fs::path file = dir / "mesh.vtk";
    VtkWriter w;
    w.point_scalars("f", f).cell_scalars("c", cell).write(m, file.string(), "unit test");

    std::string text = slurp(file);
    CHECK(text.rfind("# vtk DataFile Version", 0) == 0);
    CHECK(text.find("ASCII\n") != std::string::npos);
    CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(text.find("POINTS 9 ") != std::string::npos);
    CHECK(text.find("CELLS 8 32") != std::string::npos);  // 8 triangles, 4 ints each
    CHECK(text.find("CELL_TYPES 8") != std::string::npos);
    CHECK(text.find("POINT_DATA 9") != std::string::npos);
    CHECK(text.find("CELL_DATA 8") != std::string::npos);
    CHECK(text.find("SCALARS f double") != std::string::npos);
    CHECK(text.find("SCALARS c double") != std::string::npos);
}

TEST_CASE("cli optimize honors --max-iters and writes artifacts") {
    fs::path dir = temp_dir("opt");
    int rc = run_cli("optimize " + (config_dir() / "bridge_shielding.cfg").string() +
                     " --output-dir " + dir.string() + " --max-iters 5 --vtk-every 2");
    CHECK(rc == 0);
    std::string hist = slurp(dir / "history.csv");
    CHECK(count_lines(hist) == 6);  // header + 5 rows
    CHECK(hist.rfind("iter,volume_fraction,Ju,Js,Jp,J_combined,lambda,mu\n", 0) == 0);
    CHECK(fs::exists(dir / "final_design.vtk"));
    CHECK(fs::exists(dir / "fields_0002.vtk"));
    CHECK(fs::exists(dir / "fields_0004.vtk"));
    CHECK(!fs::exists(dir / "fields_0005.vtk"));
}

TEST_CASE("cli exit codes for bad input") {
    fs::path dir = temp_dir("bad");
    fs::path broken = dir / "broken.cfg";
    std::ofstream(broken) << "[domain\n";
    CHECK(run_cli("optimize " + broken.string()) == 1);
    CHECK(run_cli("optimize " + (dir / "missing.cfg").string()) == 1);
}

TEST_CASE("cli evaluate runs the boundary study with cross-sections") {
    ConfigFile cfg = parse_config_file((config_dir() / "twowall_eval.cfg").string());
    Mesh mesh = build_mesh(cfg);
    auto structure = two_wall_structure(TwoWallKind::Penetrated, cfg.nx, cfg.ny);

    fs::path dir = temp_dir("eval");
    fs::path sfile = dir / "structure.txt";
    {
        std::ofstream out(sfile);
        out << "chi " << mesh.num_nodes() << "\n";
        for (int n = 0; n < mesh.num_nodes(); ++n) out << structure.chi.chi[n] << "\n";
    }
    int rc = run_cli("evaluate " + (config_dir() / "twowall_eval.cfg").string() +
                     " --field T-dirichlet --structure " + sfile.string() +
                     " --output-dir " + dir.string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "field_T-dirichlet.vtk"));
    std::string channel = slurp(dir / "section_channel.csv");
    CHECK(channel.rfind("x,value,grad_magnitude\n", 0) == 0);
    CHECK(count_lines(channel) == 98);  // header + 97 samples
    CHECK(fs::exists(dir / "section_wall.csv"));

    // the shielding field works on the same structure file
    CHECK(run_cli("evaluate " + (config_dir() / "twowall_eval.cfg").string() +
                  " --field s --structure " + sfile.string() + " --output-dir " +
                  dir.string()) == 0);
    CHECK(fs::exists(dir / "field_s.vtk"));

    // unknown field and missing structure fail
    CHECK(run_cli("evaluate " + (config_dir() / "twowall_eval.cfg").string() +
                  " --field bogus --structure " + sfile.string()) == 1);
    CHECK(run_cli("evaluate " + (config_dir() / "twowall_eval.cfg").string() +
                  " --field s --structure " + (dir / "nope.txt").string()) == 1);
}

TEST_CASE("profile csv writer") {
    std::vector<ProfileSample> profile{{0.0, 1.0, 0.5}, {0.5, 0.75, 0.5}, {1.0, 0.5, 0.5}};
    fs::path dir = temp_dir("profile");
    fs::path file = dir / "p.csv";
    write_profile_csv(profile, file.string());
    std::string text = slurp(file);
    CHECK(text.rfind("x,value,grad_magnitude\n", 0) == 0);
    CHECK(count_lines(text) == 4);
}
