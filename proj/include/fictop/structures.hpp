#pragma once

// Hand-built test structures: the two-wall geometries used to contrast
// shielded and penetrated configurations, and helpers to build sharp
// characteristic fields from geometric regions.

#include <stdexcept>
#include <string>
#include <vector>

#include "fictop/fem.hpp"
#include "fictop/levelset.hpp"
#include "fictop/mesh.hpp"

namespace fictop {

inline CharacteristicField chi_from_regions(const Mesh& mesh,
                                            const std::vector<GeomRegion>& solid) {
    CharacteristicField c;
    c.chi.resize(mesh.num_nodes());
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        bool in = false;
        for (const auto& r : solid)
            if (r.contains(mesh.nodes[n])) { in = true; break; }
        c.chi[n] = in ? 1.0 : 0.0;
    }
    c.chi_elem.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vec2 p = mesh.element_centroid(e);
        bool in = false;
        for (const auto& r : solid)
            if (r.contains(p)) { in = true; break; }
        c.chi_elem[e] = in ? 1.0 : 0.0;
    }
    return c;
}

inline CharacteristicField uniform_chi(const Mesh& mesh, double value) {
    CharacteristicField c;
    c.chi = ScalarField::Constant(mesh.num_nodes(), value);
    c.chi_elem.assign(mesh.num_elements(), value);
    return c;
}

// Two parallel walls on a 2 x 1 domain between a source boundary (left
// edge, 'gamma_out') and a sink boundary (right edge, 'gamma_in').
// Penetrated: staggered partial walls leave a void path snaking through.
// Shielded: both walls span the full height.
enum class TwoWallKind { Penetrated, Shielded };

struct TwoWallStructure {
    Mesh mesh;
    CharacteristicField chi;
};

inline TwoWallStructure two_wall_structure(TwoWallKind kind, int nx = 160, int ny = 80) {
    Mesh mesh = generate_rect_mesh(2.0, 1.0, nx, ny);
    mesh = tag_boundary(std::move(mesh), "gamma_out", GeomRegion::box(-1e-9, -1e-9, 1e-9, 1.0));
    mesh = tag_boundary(std::move(mesh), "gamma_in",
                        GeomRegion::box(2.0 - 1e-9, -1e-9, 2.0 + 1e-9, 1.0));
    std::vector<GeomRegion> walls;
    if (kind == TwoWallKind::Penetrated) {
        walls.push_back(GeomRegion::box(0.8, 0.0, 0.9, 0.7));   // gap at top
        walls.push_back(GeomRegion::box(1.1, 0.3, 1.2, 1.0));   // gap at bottom
    } else {
        walls.push_back(GeomRegion::box(0.8, 0.0, 0.9, 1.0));
        walls.push_back(GeomRegion::box(1.1, 0.0, 1.2, 1.0));
    }
    CharacteristicField chi = chi_from_regions(mesh, walls);
    return {std::move(mesh), std::move(chi)};
}

struct CrossSection {
    Vec2 p0;
    Vec2 p1;
};

// Named cross-sections of the two-wall setup. Sections 1-x run through the
// void channel between the walls, sections 2-x through the first wall's
// midline; x = 1 is read on the penetrated structure, x = 2 on the shielded
// one.
inline CrossSection two_wall_cross_section(const std::string& name) {
    double margin = 0.02;  // keep sample endpoints off the outer boundary
    if (name == "1-1" || name == "1-2") return {{1.0, margin}, {1.0, 1.0 - margin}};
    if (name == "2-1" || name == "2-2") return {{0.85, margin}, {0.85, 1.0 - margin}};
    throw std::invalid_argument("two_wall_cross_section: unknown section '" + name + "'");
}

}  // namespace fictop
