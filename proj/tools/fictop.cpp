// Command-line front end: `optimize` runs the level-set loop on a config
// file and writes history.csv plus VTK snapshots; `evaluate` solves one
// fictitious field on a fixed structure and writes the field, its density
// map and any configured cross-section profiles.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "fictop/config.hpp"
#include "fictop/elasticity.hpp"
#include "fictop/fictitious.hpp"
#include "fictop/io.hpp"
#include "fictop/levelset.hpp"
#include "fictop/optimizer.hpp"
#include "fictop/structures.hpp"

namespace fs = std::filesystem;
using namespace fictop;

namespace {

void apply_thread_cap() {
    if (const char* env = std::getenv("FICTOP_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) Eigen::setNbThreads(n);
    }
}

std::string snapshot_name(int iter) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fields_%04d.vtk", iter);
    return buf;
}

std::vector<double> to_std(const ScalarField& f) {
    return {f.data(), f.data() + f.size()};
}

int cmd_optimize(const std::string& config_path, const std::string& output_dir_flag,
                 int max_iters_flag, int vtk_every_flag) {
    ConfigFile cfg = parse_config_file(config_path);
    if (!output_dir_flag.empty()) cfg.output_dir = output_dir_flag;
    if (max_iters_flag >= 0) cfg.iterations = max_iters_flag;
    if (vtk_every_flag >= 0) cfg.vtk_every = vtk_every_flag;

    ProblemSpec spec = build_problem(cfg);
    spec.max_iterations = cfg.iterations;
    fs::create_directories(cfg.output_dir);

    HistoryCsvWriter csv((fs::path(cfg.output_dir) / "history.csv").string());
    P1Basis basis(spec.mesh);

    auto observer = [&](const IterationState& st) {
        csv.append(st.row);
        if (cfg.vtk_every > 0 && st.row.iter % cfg.vtk_every == 0) {
            VtkWriter w;
            w.point_scalars("phi", st.field->phi)
                .point_scalars("chi", st.chi->chi)
                .point_scalars("u_magnitude", displacement_magnitude(*st.u))
                .point_scalars("sensitivity", *st.sensitivity);
            if (st.s) w.point_scalars("s", *st.s);
            if (st.p) w.point_scalars("p", *st.p);
            w.cell_scalars("chi_elem", st.chi->chi_elem);
            w.write(spec.mesh, (fs::path(cfg.output_dir) / snapshot_name(st.row.iter)).string());
        }
    };

    RunResult result = run(spec, observer);

    CharacteristicField chi = characteristic(spec.mesh, result.field);
    double vf = volume_fraction(chi, spec.mesh, basis);
    double Ju = 0.0, Js = 0.0, Jp = 0.0;
    {
        VectorField u = solve_state(spec.mesh, basis, chi, spec.material, spec.load,
                                    spec.solver_tol);
        Ju = eval_Ju(spec.mesh, spec.load, u);
    }
    std::string shielded = "n/a", penetrated = "n/a";
    if (spec.shielding) {
        ScalarField s = solve_shielding(spec.mesh, basis, chi, *spec.shielding,
                                        spec.shield_out, spec.shield_in);
        Js = eval_Js(spec.mesh, basis, chi, s).J;
        bool open = check_void_connectivity(chi, spec.mesh,
                                            spec.mesh.node_set(spec.shield_out),
                                            spec.mesh.node_set(spec.shield_in));
        shielded = open ? "no" : "yes";
    }
    if (spec.penetrating) {
        ScalarField p = solve_penetrating(spec.mesh, basis, chi, *spec.penetrating,
                                          spec.pen_out, spec.pen_in);
        Jp = eval_Jp(spec.mesh, basis, chi, p).J;
        bool open = check_void_connectivity(chi, spec.mesh,
                                            spec.mesh.node_set(spec.pen_out),
                                            spec.mesh.node_set(spec.pen_in));
        penetrated = open ? "yes" : "no";
    }

    VtkWriter final_writer;
    final_writer.point_scalars("phi", result.field.phi)
        .point_scalars("chi", chi.chi)
        .cell_scalars("chi_elem", chi.chi_elem)
        .write(spec.mesh, (fs::path(cfg.output_dir) / "final_design.vtk").string(),
               "final design");

    std::printf("final: Ju=%.6g Js=%.6g Jp=%.6g volume=%.6g shielded=%s penetrated=%s "
                "iterations=%zu\n",
                Ju, Js, Jp, vf, shielded.c_str(), penetrated.c_str(),
                result.history.size());
    return 0;
}

CharacteristicField load_structure(const std::string& path, const Mesh& mesh,
                                   double delta) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open structure file: " + path);
    std::string kind;
    int n = 0;
    if (!(in >> kind >> n) || (kind != "chi" && kind != "phi") || n != mesh.num_nodes())
        throw io_error("structure file must start with 'chi N' or 'phi N' where N matches "
                       "the config mesh (" + std::to_string(mesh.num_nodes()) + " nodes)");
    CharacteristicField c;
    c.chi.resize(n);
    for (int i = 0; i < n; ++i) {
        double v;
        if (!(in >> v)) throw io_error("structure file: missing value at node " +
                                       std::to_string(i));
        c.chi[i] = kind == "phi" ? heaviside(v, delta) : v;
        if (c.chi[i] < 0.0 || c.chi[i] > 1.0)
            throw io_error("structure file: chi outside [0,1] at node " + std::to_string(i));
    }
    c.chi_elem.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        c.chi_elem[e] = (c.chi[t[0]] + c.chi[t[1]] + c.chi[t[2]]) / 3.0;
    }
    return c;
}

int cmd_evaluate(const std::string& config_path, const std::string& field,
                 const std::string& structure_path, const std::string& output_dir_flag) {
    ConfigFile cfg = parse_config_file(config_path);
    if (!output_dir_flag.empty()) cfg.output_dir = output_dir_flag;
    Mesh mesh = build_mesh(cfg);
    P1Basis basis(mesh);
    CharacteristicField chi = load_structure(structure_path, mesh, cfg.levelset.delta);
    fs::create_directories(cfg.output_dir);

    FeatureResult result;
    if (field == "s" || field == "p") {
        const FeatureConfig& fc = field == "s" ? cfg.shielding : cfg.penetrating;
        std::vector<std::string> issues;
        FictitiousParams params = cfg_detail::make_feature(mesh, fc, issues,
                                                           field == "s" ? "shielding"
                                                                        : "penetrating");
        if (!issues.empty()) throw validation_error(std::move(issues));
        result = field == "s"
                     ? evaluate_shielding(mesh, basis, chi, params, fc.out, fc.in)
                     : evaluate_penetrating(mesh, basis, chi, params, fc.out, fc.in);
    } else if (field == "T-dirichlet" || field == "T-neumann") {
        SourceKind src = field == "T-dirichlet" ? SourceKind::Dirichlet : SourceKind::Neumann;
        std::string out_tag = "gamma_out", in_tag = "gamma_in";
        if (mesh.node_set(out_tag).empty() || mesh.node_set(in_tag).empty())
            throw io_error("T-field study needs boundaries named gamma_out and gamma_in");
        ScalarField T = boundary_study(mesh, basis, chi, src, 100.0, out_tag, in_tag);
        result.field = T;
        FeatureResult j = src == SourceKind::Dirichlet ? eval_Js(mesh, basis, chi, T)
                                                       : eval_Jp(mesh, basis, chi, T);
        result.J = j.J;
        result.density_map = j.density_map;
    } else {
        std::cerr << "unknown field '" << field << "' (expected s, p, T-dirichlet or "
                  << "T-neumann)\n";
        return 1;
    }

    std::string stem = "field_" + field;
    VtkWriter w;
    w.point_scalars(field == "p" ? "p" : field == "s" ? "s" : "T", result.field)
        .point_scalars("chi", chi.chi)
        .cell_scalars("density", result.density_map);
    if (result.sensitivity.size()) w.point_scalars("sensitivity", result.sensitivity);
    w.write(mesh, (fs::path(cfg.output_dir) / (stem + ".vtk")).string(), stem);

    for (const auto& cs : cfg.sections) {
        auto profile = sample_profile(mesh, basis, result.field, cs.p0, cs.p1, cs.samples);
        write_profile_csv(profile,
                          (fs::path(cfg.output_dir) / ("section_" + cs.name + ".csv")).string());
    }

    std::printf("J = %.12g\n", result.J);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"level-set topology optimization with fictitious feature fields"};
    app.require_subcommand(1);

    std::string config_path, output_dir, field, structure_path;
    int max_iters = -1, vtk_every = -1;

    auto* opt = app.add_subcommand("optimize", "run an optimization from a config file");
    opt->add_option("config", config_path, "problem config file")->required();
    opt->add_option("--output-dir", output_dir, "override [run] output_dir");
    opt->add_option("--max-iters", max_iters, "override [run] iterations");
    opt->add_option("--vtk-every", vtk_every, "override [run] vtk_every (0 disables)");

    auto* ev = app.add_subcommand("evaluate", "solve one field on a fixed structure");
    ev->add_option("config", config_path, "problem config file")->required();
    ev->add_option("--field", field, "s | p | T-dirichlet | T-neumann")->required();
    ev->add_option("--structure", structure_path, "nodal chi or phi file")->required();
    ev->add_option("--output-dir", output_dir, "override [run] output_dir");

    CLI11_PARSE(app, argc, argv);

    try {
        if (opt->parsed()) return cmd_optimize(config_path, output_dir, max_iters, vtk_every);
        return cmd_evaluate(config_path, field, structure_path, output_dir);
    } catch (const divergence_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
