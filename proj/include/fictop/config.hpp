#pragma once

// Problem configuration files: an INI-style structured text format with
// typed scalars, strict key checking and a canonical emitter. See the
// README for the grammar.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fictop/mesh.hpp"
#include "fictop/optimizer.hpp"

namespace fictop {

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
    std::vector<std::string> issues;
    explicit validation_error(std::vector<std::string> list)
        : std::runtime_error(join(list)), issues(std::move(list)) {}
    static std::string join(const std::vector<std::string>& list) {
        std::string s = "configuration invalid:";
        for (const auto& i : list) s += "\n  - " + i;
        return s;
    }
};

enum class BoundaryTarget { Edges, Nodes };

struct BoundaryDef {
    std::string name;
    GeomRegion region;
    BoundaryTarget target = BoundaryTarget::Edges;
    double band = -1.0;  // circle band half-width; < 0 requests half a cell

    friend bool operator==(const BoundaryDef&, const BoundaryDef&) = default;
};

struct NonDesignDef {
    std::string name;
    GeomRegion region;
    ElementRegion state = ElementRegion::NonDesignVoid;

    friend bool operator==(const NonDesignDef&, const NonDesignDef&) = default;
};

struct FeatureConfig {
    bool enabled = false;
    double kappa_solid = 1.0;
    double kappa_void = 100.0;
    double length = 0.0;  // 0 requests the source/sink centroid distance
    double omega = 0.0;
    std::string out;
    std::string in;

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct CrossSectionDef {
    std::string name;
    Vec2 p0, p1;
    int samples = 101;

    friend bool operator==(const CrossSectionDef&, const CrossSectionDef&) = default;
};

struct ConfigFile {
    double width = 1.0, height = 1.0;
    int nx = 64, ny = 64;
    MaterialParams material{210e9, 0.3};
    std::string load_boundary, fixed_boundary;
    Vec2 traction{0.0, -1e5};
    std::vector<BoundaryDef> boundaries;
    std::vector<NonDesignDef> nondesign;
    FeatureConfig shielding{.out = "gamma_s_out", .in = "gamma_s_in"};
    FeatureConfig penetrating{.out = "gamma_p_out", .in = "gamma_p_in"};
    LevelSetParams levelset;
    std::string mold_boundary;
    AugLagParams auglag;
    double vmax = 1.0;
    int iterations = 300;
    std::string output_dir = "out";
    int vtk_every = 50;
    std::vector<CrossSectionDef> sections;

    friend bool operator==(const ConfigFile&, const ConfigFile&) = default;
};

namespace cfg_detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct RawSection {
    std::string name;
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)
};

inline std::vector<RawSection> tokenize(std::istream& in) {
    std::vector<RawSection> sections;
    std::string line;
    int lineno = 0;
    RawSection* cur = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find_first_of("#;"); pos != std::string::npos)
            line = line.substr(0, pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw parse_error("line " + std::to_string(lineno) + ": unterminated section");
            sections.push_back({trim(line.substr(1, line.size() - 2)), lineno, {}});
            cur = &sections.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error("line " + std::to_string(lineno) + ": expected key = value");
        if (!cur)
            throw parse_error("line " + std::to_string(lineno) + ": key outside a section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw parse_error("line " + std::to_string(lineno) + ": empty key");
        if (cur->entries.count(key))
            throw parse_error("line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "'");
        cur->entries[key] = {value, lineno};
    }
    return sections;
}

// Schema-checked accessor over one raw section; records every problem
// instead of stopping at the first.
class SectionReader {
  public:
    SectionReader(const RawSection& raw, std::vector<std::string>& issues)
        : raw_(raw), issues_(issues) {}

    std::optional<std::string> get_string(const std::string& key) {
        used_.push_back(key);
        auto it = raw_.entries.find(key);
        if (it == raw_.entries.end()) return std::nullopt;
        return it->second.first;
    }

    std::optional<double> get_double(const std::string& key) {
        auto v = get_string(key);
        if (!v) return std::nullopt;
        const char* s = v->c_str();
        char* end = nullptr;
        double d = std::strtod(s, &end);
        if (end == s || *end != '\0') {
            fail(key, "expected a number, got '" + *v + "'");
            return std::nullopt;
        }
        return d;
    }

    std::optional<int> get_int(const std::string& key) {
        auto d = get_double(key);
        if (!d) return std::nullopt;
        if (*d != std::floor(*d)) {
            fail(key, "expected an integer");
            return std::nullopt;
        }
        return static_cast<int>(*d);
    }

    void fail(const std::string& key, const std::string& msg) {
        issues_.push_back("[" + raw_.name + "] " + key + ": " + msg);
    }

    void finish() {
        for (const auto& [key, v] : raw_.entries)
            if (std::find(used_.begin(), used_.end(), key) == used_.end())
                issues_.push_back("[" + raw_.name + "] unknown key '" + key +
                                  "' (line " + std::to_string(v.second) + ")");
    }

  private:
    const RawSection& raw_;
    std::vector<std::string>& issues_;
    std::vector<std::string> used_;
};

inline GeomRegion read_region(SectionReader& r, std::vector<std::string>& issues,
                              const std::string& section, bool disk_only) {
    GeomRegion region;
    auto kind = r.get_string("kind").value_or("box");
    if (kind == "box") {
        region = GeomRegion::box(r.get_double("x0").value_or(0.0),
                                 r.get_double("y0").value_or(0.0),
                                 r.get_double("x1").value_or(0.0),
                                 r.get_double("y1").value_or(0.0));
        if (region.x1 < region.x0 || region.y1 < region.y0)
            issues.push_back("[" + section + "] empty box (x1 < x0 or y1 < y0)");
    } else if (kind == "circle") {
        double cx = r.get_double("cx").value_or(0.0);
        double cy = r.get_double("cy").value_or(0.0);
        double radius = r.get_double("r").value_or(0.0);
        if (radius <= 0.0) issues.push_back("[" + section + "] circle radius must be > 0");
        region = disk_only ? GeomRegion::disk({cx, cy}, radius)
                           : GeomRegion::circle_band({cx, cy}, radius, 0.0);
    } else {
        issues.push_back("[" + section + "] unknown kind '" + kind + "'");
    }
    return region;
}

}  // namespace cfg_detail

inline ConfigFile parse_config(std::istream& in) {
    using namespace cfg_detail;
    ConfigFile cfg;
    std::vector<std::string> issues;
    auto sections = tokenize(in);

    std::vector<std::string> seen;
    for (const auto& raw : sections) {
        // boundary and nondesign sections may repeat: same name = union
        bool repeatable = raw.name.rfind("boundary.", 0) == 0 ||
                          raw.name.rfind("nondesign.", 0) == 0;
        if (!repeatable && std::find(seen.begin(), seen.end(), raw.name) != seen.end()) {
            issues.push_back("duplicate section [" + raw.name + "]");
            continue;
        }
        seen.push_back(raw.name);
        SectionReader r(raw, issues);

        if (raw.name == "domain") {
            cfg.width = r.get_double("width").value_or(cfg.width);
            cfg.height = r.get_double("height").value_or(cfg.height);
            cfg.nx = r.get_int("nx").value_or(cfg.nx);
            cfg.ny = r.get_int("ny").value_or(cfg.ny);
            if (cfg.width <= 0 || cfg.height <= 0) r.fail("width", "domain must be positive");
            if (cfg.nx < 1 || cfg.ny < 1) r.fail("nx", "resolution must be >= 1");
        } else if (raw.name == "material") {
            cfg.material.E = r.get_double("E").value_or(cfg.material.E);
            cfg.material.nu = r.get_double("nu").value_or(cfg.material.nu);
            if (!cfg.material.valid()) r.fail("E", "need E > 0 and -1 < nu < 0.5");
        } else if (raw.name == "load") {
            cfg.load_boundary = r.get_string("boundary").value_or("");
            cfg.fixed_boundary = r.get_string("fixed").value_or("");
            cfg.traction.x = r.get_double("tx").value_or(cfg.traction.x);
            cfg.traction.y = r.get_double("ty").value_or(cfg.traction.y);
        } else if (raw.name.rfind("boundary.", 0) == 0) {
            BoundaryDef def;
            def.name = raw.name.substr(9);
            def.region = read_region(r, issues, raw.name, false);
            if (def.region.kind == GeomRegion::Kind::CircleBand) {
                if (auto b = r.get_double("band")) {
                    def.band = *b;
                    def.region.band = *b;
                    if (*b <= 0) r.fail("band", "must be > 0");
                }
            }
            auto target = r.get_string("target").value_or("edges");
            if (target == "edges")
                def.target = BoundaryTarget::Edges;
            else if (target == "nodes")
                def.target = BoundaryTarget::Nodes;
            else
                r.fail("target", "expected 'edges' or 'nodes'");
            cfg.boundaries.push_back(std::move(def));
        } else if (raw.name.rfind("nondesign.", 0) == 0) {
            NonDesignDef def;
            def.name = raw.name.substr(10);
            def.region = read_region(r, issues, raw.name, true);
            auto state = r.get_string("state").value_or("void");
            if (state == "solid")
                def.state = ElementRegion::NonDesignSolid;
            else if (state == "void")
                def.state = ElementRegion::NonDesignVoid;
            else
                r.fail("state", "expected 'solid' or 'void'");
            cfg.nondesign.push_back(std::move(def));
        } else if (raw.name == "shielding" || raw.name == "penetrating") {
            FeatureConfig& f = raw.name == "shielding" ? cfg.shielding : cfg.penetrating;
            f.enabled = true;
            f.kappa_solid = r.get_double("kappa_solid").value_or(f.kappa_solid);
            f.kappa_void = r.get_double("kappa_void").value_or(f.kappa_void);
            f.length = r.get_double("length").value_or(f.length);
            f.omega = r.get_double("omega").value_or(f.omega);
            f.out = r.get_string("out").value_or(f.out);
            f.in = r.get_string("in").value_or(f.in);
            if (!(f.kappa_solid > 0 && f.kappa_solid < f.kappa_void))
                r.fail("kappa_solid", "need 0 < kappa_solid < kappa_void");
            if (f.omega < 0) r.fail("omega", "must be >= 0");
            if (f.length < 0) r.fail("length", "must be >= 0 (0 = automatic)");
        } else if (raw.name == "levelset") {
            cfg.levelset.delta = r.get_double("delta").value_or(cfg.levelset.delta);
            cfg.levelset.tau = r.get_double("tau").value_or(cfg.levelset.tau);
            cfg.levelset.k_coef = r.get_double("k_coef").value_or(cfg.levelset.k_coef);
            cfg.levelset.k_coef = r.get_double("K_coef").value_or(cfg.levelset.k_coef);
            cfg.levelset.dt = r.get_double("dt").value_or(cfg.levelset.dt);
            cfg.mold_boundary = r.get_string("mold_boundary").value_or("");
            if (auto d = r.get_string("dDm")) cfg.mold_boundary = *d;
            if (cfg.levelset.delta <= 0 || cfg.levelset.tau <= 0 ||
                cfg.levelset.k_coef <= 0 || cfg.levelset.dt <= 0)
                r.fail("delta", "level-set parameters must be positive");
        } else if (raw.name == "auglag") {
            cfg.auglag.lambda0 = r.get_double("lambda0").value_or(cfg.auglag.lambda0);
            cfg.auglag.mu0 = r.get_double("mu0").value_or(cfg.auglag.mu0);
            cfg.auglag.growth = r.get_double("growth").value_or(cfg.auglag.growth);
            cfg.auglag.mu_max_factor =
                r.get_double("mu_max_factor").value_or(cfg.auglag.mu_max_factor);
            if (cfg.auglag.growth < 1.0) r.fail("growth", "must be >= 1");
        } else if (raw.name == "volume") {
            cfg.vmax = r.get_double("vmax").value_or(cfg.vmax);
            if (!(cfg.vmax > 0 && cfg.vmax <= 1.0)) r.fail("vmax", "must be in (0, 1]");
        } else if (raw.name == "run") {
            cfg.iterations = r.get_int("iterations").value_or(cfg.iterations);
            cfg.output_dir = r.get_string("output_dir").value_or(cfg.output_dir);
            cfg.vtk_every = r.get_int("vtk_every").value_or(cfg.vtk_every);
            if (cfg.iterations < 0) r.fail("iterations", "must be >= 0");
            if (cfg.vtk_every < 0) r.fail("vtk_every", "must be >= 0");
        } else if (raw.name.rfind("crosssection.", 0) == 0) {
            CrossSectionDef def;
            def.name = raw.name.substr(13);
            def.p0 = {r.get_double("x0").value_or(0.0), r.get_double("y0").value_or(0.0)};
            def.p1 = {r.get_double("x1").value_or(0.0), r.get_double("y1").value_or(0.0)};
            def.samples = r.get_int("samples").value_or(def.samples);
            if (def.samples < 2) r.fail("samples", "need at least 2");
            cfg.sections.push_back(std::move(def));
        } else {
            issues.push_back("unknown section [" + raw.name + "] (line " +
                             std::to_string(raw.line) + ")");
            continue;
        }
        r.finish();
    }

    if (cfg.shielding.omega + cfg.penetrating.omega >= 1.0)
        issues.push_back("[shielding]/[penetrating] omega_s + omega_p must be < 1");

    if (!issues.empty()) throw validation_error(std::move(issues));
    return cfg;
}

inline ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open config file: " + path);
    return parse_config(in);
}

inline std::string emit_config(const ConfigFile& cfg) {
    std::ostringstream os;
    os.precision(17);
    auto region = [&](const GeomRegion& g, double band) {
        if (g.kind == GeomRegion::Kind::Box) {
            os << "kind = box\n";
            os << "x0 = " << g.x0 << "\ny0 = " << g.y0 << "\nx1 = " << g.x1
               << "\ny1 = " << g.y1 << "\n";
        } else {
            os << "kind = circle\n";
            os << "cx = " << g.center.x << "\ncy = " << g.center.y << "\nr = "
               << (g.radius > 0 ? g.radius : g.band) << "\n";
            if (band > 0) os << "band = " << band << "\n";
        }
    };
    os << "[domain]\nwidth = " << cfg.width << "\nheight = " << cfg.height
       << "\nnx = " << cfg.nx << "\nny = " << cfg.ny << "\n\n";
    os << "[material]\nE = " << cfg.material.E << "\nnu = " << cfg.material.nu << "\n\n";
    os << "[load]\nboundary = " << cfg.load_boundary << "\nfixed = " << cfg.fixed_boundary
       << "\ntx = " << cfg.traction.x << "\nty = " << cfg.traction.y << "\n\n";
    for (const auto& b : cfg.boundaries) {
        os << "[boundary." << b.name << "]\n";
        region(b.region, b.band);
        os << "target = " << (b.target == BoundaryTarget::Edges ? "edges" : "nodes")
           << "\n\n";
    }
    for (const auto& n : cfg.nondesign) {
        os << "[nondesign." << n.name << "]\n";
        region(n.region, -1.0);
        os << "state = " << (n.state == ElementRegion::NonDesignSolid ? "solid" : "void")
           << "\n\n";
    }
    for (const FeatureConfig* f : {&cfg.shielding, &cfg.penetrating}) {
        if (!f->enabled) continue;
        os << (f == &cfg.shielding ? "[shielding]\n" : "[penetrating]\n");
        os << "kappa_solid = " << f->kappa_solid << "\nkappa_void = " << f->kappa_void
           << "\nlength = " << f->length << "\nomega = " << f->omega << "\nout = " << f->out
           << "\nin = " << f->in << "\n\n";
    }
    os << "[levelset]\ndelta = " << cfg.levelset.delta << "\ntau = " << cfg.levelset.tau
       << "\nk_coef = " << cfg.levelset.k_coef << "\ndt = " << cfg.levelset.dt << "\n";
    if (!cfg.mold_boundary.empty()) os << "mold_boundary = " << cfg.mold_boundary << "\n";
    os << "\n[auglag]\nlambda0 = " << cfg.auglag.lambda0;
    if (cfg.auglag.mu0 >= 0) os << "\nmu0 = " << cfg.auglag.mu0;
    os << "\ngrowth = " << cfg.auglag.growth
       << "\nmu_max_factor = " << cfg.auglag.mu_max_factor << "\n\n";
    os << "[volume]\nvmax = " << cfg.vmax << "\n\n";
    os << "[run]\niterations = " << cfg.iterations << "\noutput_dir = " << cfg.output_dir
       << "\nvtk_every = " << cfg.vtk_every << "\n";
    for (const auto& cs : cfg.sections) {
        os << "\n[crosssection." << cs.name << "]\nx0 = " << cs.p0.x << "\ny0 = " << cs.p0.y
           << "\nx1 = " << cs.p1.x << "\ny1 = " << cs.p1.y << "\nsamples = " << cs.samples
           << "\n";
    }
    return os.str();
}

// Builds the mesh with all boundary tags, node sets and non-design labels.
inline Mesh build_mesh(const ConfigFile& cfg) {
    Mesh mesh = generate_rect_mesh(cfg.width, cfg.height, cfg.nx, cfg.ny);
    double half_cell = 0.5 * std::min(cfg.width / cfg.nx, cfg.height / cfg.ny);
    std::vector<std::string> applied;
    for (const auto& b : cfg.boundaries) {
        GeomRegion region = b.region;
        if (region.kind == GeomRegion::Kind::CircleBand && region.band <= 0)
            region.band = half_cell;
        bool extend = std::find(applied.begin(), applied.end(), b.name) != applied.end();
        applied.push_back(b.name);
        if (b.target == BoundaryTarget::Edges)
            mesh = tag_boundary(std::move(mesh), b.name, region, extend);
        else
            mesh = tag_node_set(std::move(mesh), b.name, region, extend);
    }
    for (const auto& n : cfg.nondesign) mesh = mark_nondesign(std::move(mesh), n.region, n.state);
    return mesh;
}

namespace cfg_detail {

inline Vec2 set_centroid(const Mesh& mesh, const std::vector<int>& nodes) {
    Vec2 c{0, 0};
    for (int n : nodes) c = c + mesh.nodes[n];
    return (1.0 / nodes.size()) * c;
}

inline FictitiousParams make_feature(const Mesh& mesh, const FeatureConfig& f,
                                     std::vector<std::string>& issues,
                                     const char* section) {
    FictitiousParams p;
    p.kappa_solid = f.kappa_solid;
    p.kappa_void = f.kappa_void;
    p.weight = f.omega;
    auto out_nodes = mesh.node_set(f.out);
    auto in_nodes = mesh.node_set(f.in);
    if (out_nodes.empty())
        issues.push_back(std::string("[") + section + "] out boundary '" + f.out +
                         "' is not defined");
    if (in_nodes.empty())
        issues.push_back(std::string("[") + section + "] in boundary '" + f.in +
                         "' is not defined");
    if (f.length > 0)
        p.length = f.length;
    else if (!out_nodes.empty() && !in_nodes.empty())
        p.length = norm(set_centroid(mesh, out_nodes) - set_centroid(mesh, in_nodes));
    return p;
}

}  // namespace cfg_detail

inline ProblemSpec build_problem(const ConfigFile& cfg) {
    std::vector<std::string> issues;
    ProblemSpec spec;
    spec.mesh = build_mesh(cfg);
    spec.material = cfg.material;
    spec.load.traction = cfg.traction;
    spec.load.fixed_boundary = cfg.fixed_boundary;
    spec.load.traction_boundary = cfg.load_boundary;
    if (cfg.fixed_boundary.empty() || spec.mesh.node_set(cfg.fixed_boundary).empty())
        issues.push_back("[load] fixed boundary '" + cfg.fixed_boundary +
                         "' is not defined");
    if (cfg.load_boundary.empty() || spec.mesh.tagged_edges(cfg.load_boundary).empty())
        issues.push_back("[load] traction boundary '" + cfg.load_boundary +
                         "' has no tagged edges");

    if (cfg.shielding.enabled) {
        spec.shielding = cfg_detail::make_feature(spec.mesh, cfg.shielding, issues,
                                                  "shielding");
        spec.shield_out = cfg.shielding.out;
        spec.shield_in = cfg.shielding.in;
    }
    if (cfg.penetrating.enabled) {
        spec.penetrating = cfg_detail::make_feature(spec.mesh, cfg.penetrating, issues,
                                                    "penetrating");
        spec.pen_out = cfg.penetrating.out;
        spec.pen_in = cfg.penetrating.in;
        if (spec.mesh.tagged_edges(cfg.penetrating.out).empty())
            issues.push_back("[penetrating] out boundary '" + cfg.penetrating.out +
                             "' must be a tagged edge set (flux boundary)");
    }
    if (!cfg.mold_boundary.empty() && spec.mesh.node_set(cfg.mold_boundary).empty())
        issues.push_back("[levelset] mold_boundary '" + cfg.mold_boundary +
                         "' is not defined");

    spec.mold_boundary = cfg.mold_boundary;
    spec.v_max = cfg.vmax;
    spec.max_iterations = cfg.iterations;
    spec.levelset = cfg.levelset;
    spec.auglag = cfg.auglag;

    if (!issues.empty()) throw validation_error(std::move(issues));
    spec.validate();
    return spec;
}

}  // namespace fictop
