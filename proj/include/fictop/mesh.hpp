#pragma once

// Structured triangular meshes over rectangular design domains, with
// tagged boundary edges, named node sets and non-design element regions.

#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fictop {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

enum class ElementRegion { Design, NonDesignSolid, NonDesignVoid };

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    std::string tag;
};

// Geometric selector for boundary tagging and non-design marking.
// A box selects points inside [x0,x1]x[y0,y1]; a circle selects points
// with |r - radius| <= band (band == radius selects the full disk).
struct GeomRegion {
    enum class Kind { Box, CircleBand };
    Kind kind = Kind::Box;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // box
    Vec2 center{};                          // circle
    double radius = 0;
    double band = 0;

    static GeomRegion box(double x0, double y0, double x1, double y1) {
        GeomRegion r;
        r.kind = Kind::Box;
        r.x0 = x0; r.y0 = y0; r.x1 = x1; r.y1 = y1;
        return r;
    }
    static GeomRegion disk(Vec2 c, double radius) {
        GeomRegion r;
        r.kind = Kind::CircleBand;
        r.center = c;
        r.radius = 0.0;
        r.band = radius;
        return r;
    }
    static GeomRegion circle_band(Vec2 c, double radius, double band) {
        GeomRegion r;
        r.kind = Kind::CircleBand;
        r.center = c;
        r.radius = radius;
        r.band = band;
        return r;
    }

    bool contains(Vec2 p) const {
        if (kind == Kind::Box)
            return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
        return std::abs(norm(p - center) - radius) <= band;
    }

    friend bool operator==(const GeomRegion&, const GeomRegion&) = default;

    std::string describe() const {
        std::ostringstream os;
        if (kind == Kind::Box)
            os << "box [" << x0 << "," << x1 << "]x[" << y0 << "," << y1 << "]";
        else
            os << "circle center (" << center.x << "," << center.y << ") r=" << radius
               << " band=" << band;
        return os.str();
    }
};

struct tagging_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct region_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise
    std::vector<BoundaryEdge> boundary_edges;
    std::map<std::string, std::vector<int>> node_sets;
    std::vector<ElementRegion> element_regions;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_elements() const { return static_cast<int>(triangles.size()); }

    double element_area(int e) const {
        const auto& t = triangles[e];
        Vec2 d1 = nodes[t[1]] - nodes[t[0]];
        Vec2 d2 = nodes[t[2]] - nodes[t[0]];
        return 0.5 * (d1.x * d2.y - d1.y * d2.x);
    }

    Vec2 element_centroid(int e) const {
        const auto& t = triangles[e];
        return (1.0 / 3.0) * (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]);
    }

    double total_area() const {
        double a = 0.0;
        for (int e = 0; e < num_elements(); ++e) a += element_area(e);
        return a;
    }

    bool has_tag(const std::string& name) const {
        for (const auto& be : boundary_edges)
            if (be.tag == name) return true;
        return false;
    }

    std::vector<std::pair<int, int>> tagged_edges(const std::string& name) const {
        std::vector<std::pair<int, int>> out;
        for (const auto& be : boundary_edges)
            if (be.tag == name) out.emplace_back(be.a, be.b);
        return out;
    }

    // Nodes of the edges carrying `name`, or an explicit node set of that name.
    std::vector<int> node_set(const std::string& name) const {
        if (auto it = node_sets.find(name); it != node_sets.end()) return it->second;
        std::set<int> s;
        for (const auto& be : boundary_edges)
            if (be.tag == name) {
                s.insert(be.a);
                s.insert(be.b);
            }
        return {s.begin(), s.end()};
    }
};

// Structured crossed-diagonal triangulation: the diagonal direction
// alternates per cell so the grid carries no preferred orientation.
inline Mesh generate_rect_mesh(double width, double height, int nx, int ny) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("generate_rect_mesh: dimensions must be positive");
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("generate_rect_mesh: nx and ny must be >= 1");

    Mesh m;
    m.nodes.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.push_back({width * i / nx, height * j / ny});

    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    m.triangles.reserve(static_cast<size_t>(2) * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            int n00 = id(i, j), n10 = id(i + 1, j);
            int n01 = id(i, j + 1), n11 = id(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                m.triangles.push_back({n00, n10, n11});
                m.triangles.push_back({n00, n11, n01});
            } else {
                m.triangles.push_back({n00, n10, n01});
                m.triangles.push_back({n10, n11, n01});
            }
        }

    for (int i = 0; i < nx; ++i) {
        m.boundary_edges.push_back({id(i, 0), id(i + 1, 0), "outer"});
        m.boundary_edges.push_back({id(i + 1, ny), id(i, ny), "outer"});
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.push_back({id(nx, j), id(nx, j + 1), "outer"});
        m.boundary_edges.push_back({id(0, j + 1), id(0, j), "outer"});
    }

    m.element_regions.assign(m.triangles.size(), ElementRegion::Design);
    return m;
}

// Tags every boundary edge whose midpoint lies in `region`. A copy of each
// matching edge is added carrying `name`, so an edge may hold several tags.
// With extend = true an existing tag of the same name grows instead of
// being rejected.
inline Mesh tag_boundary(Mesh mesh, const std::string& name, const GeomRegion& region,
                         bool extend = false) {
    if ((mesh.has_tag(name) && !extend) || mesh.node_sets.count(name))
        throw tagging_error("tag_boundary: tag '" + name + "' already in use");
    size_t n_before = mesh.boundary_edges.size();
    std::vector<BoundaryEdge> added;
    for (size_t k = 0; k < n_before; ++k) {
        const auto& be = mesh.boundary_edges[k];
        Vec2 mid = 0.5 * (mesh.nodes[be.a] + mesh.nodes[be.b]);
        if (region.contains(mid)) added.push_back({be.a, be.b, name});
    }
    if (added.empty())
        throw tagging_error("tag_boundary: no boundary edge matches " + region.describe());
    // drop duplicates from edges listed under multiple existing tags, and
    // edges the same tag already covers
    std::set<std::pair<int, int>> seen;
    for (const auto& be : mesh.boundary_edges)
        if (be.tag == name) seen.insert({be.a, be.b});
    for (const auto& be : added)
        if (seen.insert({be.a, be.b}).second) mesh.boundary_edges.push_back(be);
    return mesh;
}

// Names the set of nodes inside `region` (used for interior Dirichlet
// boundaries, e.g. the perimeter band of a circular non-design domain).
inline Mesh tag_node_set(Mesh mesh, const std::string& name, const GeomRegion& region,
                         bool extend = false) {
    if (mesh.has_tag(name) || (mesh.node_sets.count(name) && !extend))
        throw tagging_error("tag_node_set: tag '" + name + "' already in use");
    std::set<int> nodes(mesh.node_sets[name].begin(), mesh.node_sets[name].end());
    size_t before = nodes.size();
    for (int n = 0; n < mesh.num_nodes(); ++n)
        if (region.contains(mesh.nodes[n])) nodes.insert(n);
    if (nodes.size() == before)
        throw tagging_error("tag_node_set: no node matches " + region.describe());
    mesh.node_sets[name] = {nodes.begin(), nodes.end()};
    return mesh;
}

inline Mesh mark_nondesign(Mesh mesh, const GeomRegion& region, ElementRegion kind) {
    if (kind == ElementRegion::Design)
        throw std::invalid_argument("mark_nondesign: kind must be solid or void");
    int count = 0;
    for (int e = 0; e < mesh.num_elements(); ++e)
        if (region.contains(mesh.element_centroid(e))) {
            mesh.element_regions[e] = kind;
            ++count;
        }
    if (count == 0)
        throw region_error("mark_nondesign: no element centroid inside " + region.describe());
    return mesh;
}

// Uniform-grid spatial index for point-in-element queries.
class ElementLocator {
  public:
    explicit ElementLocator(const Mesh& mesh, int cells_per_axis = 64) : mesh_(&mesh) {
        xmin_ = ymin_ = 1e300;
        xmax_ = ymax_ = -1e300;
        for (const auto& p : mesh.nodes) {
            xmin_ = std::min(xmin_, p.x);
            xmax_ = std::max(xmax_, p.x);
            ymin_ = std::min(ymin_, p.y);
            ymax_ = std::max(ymax_, p.y);
        }
        nx_ = ny_ = std::max(1, cells_per_axis);
        bins_.resize(static_cast<size_t>(nx_) * ny_);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const auto& t = mesh.triangles[e];
            double ex0 = 1e300, ex1 = -1e300, ey0 = 1e300, ey1 = -1e300;
            for (int v : t) {
                ex0 = std::min(ex0, mesh.nodes[v].x);
                ex1 = std::max(ex1, mesh.nodes[v].x);
                ey0 = std::min(ey0, mesh.nodes[v].y);
                ey1 = std::max(ey1, mesh.nodes[v].y);
            }
            for (int j = cell_y(ey0); j <= cell_y(ey1); ++j)
                for (int i = cell_x(ex0); i <= cell_x(ex1); ++i)
                    bins_[static_cast<size_t>(j) * nx_ + i].push_back(e);
        }
    }

    // Returns the containing element, or -1 when outside the mesh.
    int locate(Vec2 p) const {
        if (p.x < xmin_ || p.x > xmax_ || p.y < ymin_ || p.y > ymax_) return -1;
        const auto& bin = bins_[static_cast<size_t>(cell_y(p.y)) * nx_ + cell_x(p.x)];
        for (int e : bin) {
            const auto& t = mesh_->triangles[e];
            Vec2 a = mesh_->nodes[t[0]], b = mesh_->nodes[t[1]], c = mesh_->nodes[t[2]];
            double d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            double l1 = ((b.x - p.x) * (c.y - p.y) - (b.y - p.y) * (c.x - p.x)) / d;
            double l2 = ((c.x - p.x) * (a.y - p.y) - (c.y - p.y) * (a.x - p.x)) / d;
            if (l1 >= -1e-12 && l2 >= -1e-12 && 1.0 - l1 - l2 >= -1e-12) return e;
        }
        return -1;
    }

  private:
    int cell_x(double x) const {
        int i = static_cast<int>((x - xmin_) / (xmax_ - xmin_) * nx_);
        return std::min(std::max(i, 0), nx_ - 1);
    }
    int cell_y(double y) const {
        int j = static_cast<int>((y - ymin_) / (ymax_ - ymin_) * ny_);
        return std::min(std::max(j, 0), ny_ - 1);
    }

    const Mesh* mesh_;
    double xmin_, xmax_, ymin_, ymax_;
    int nx_, ny_;
    std::vector<std::vector<int>> bins_;
};

// Line-oriented text import: `nodes N` then N lines `x y`; `triangles M`
// then M index triples; optional `edgeset <name> K` blocks of node pairs.
inline Mesh import_mesh(std::istream& in) {
    Mesh m;
    std::string keyword;
    while (in >> keyword) {
        if (keyword == "nodes") {
            int n;
            if (!(in >> n) || n < 1) throw std::runtime_error("import_mesh: bad node count");
            m.nodes.resize(n);
            for (auto& p : m.nodes)
                if (!(in >> p.x >> p.y)) throw std::runtime_error("import_mesh: bad node line");
        } else if (keyword == "triangles") {
            int n;
            if (!(in >> n) || n < 1) throw std::runtime_error("import_mesh: bad triangle count");
            m.triangles.resize(n);
            for (auto& t : m.triangles) {
                if (!(in >> t[0] >> t[1] >> t[2]))
                    throw std::runtime_error("import_mesh: bad triangle line");
                for (int v : t)
                    if (v < 0 || v >= m.num_nodes())
                        throw std::runtime_error("import_mesh: triangle index out of range");
            }
        } else if (keyword == "edgeset") {
            std::string name;
            int n;
            if (!(in >> name >> n) || n < 0)
                throw std::runtime_error("import_mesh: bad edgeset header");
            for (int k = 0; k < n; ++k) {
                int a, b;
                if (!(in >> a >> b) || a < 0 || b < 0 || a >= m.num_nodes() ||
                    b >= m.num_nodes())
                    throw std::runtime_error("import_mesh: bad edgeset line");
                m.boundary_edges.push_back({a, b, name});
            }
        } else {
            throw std::runtime_error("import_mesh: unknown keyword '" + keyword + "'");
        }
    }
    for (int e = 0; e < m.num_elements(); ++e)
        if (m.element_area(e) <= 0)
            throw std::runtime_error("import_mesh: non-positive area in element " +
                                     std::to_string(e));
    m.element_regions.assign(m.triangles.size(), ElementRegion::Design);
    return m;
}

}  // namespace fictop
