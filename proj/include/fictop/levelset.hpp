#pragma once

// Level-set design field, regularized characteristic function and the
// semi-implicit reaction-diffusion update with normalized sensitivity.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fictop/fem.hpp"
#include "fictop/mesh.hpp"

namespace fictop {

struct degenerate_sensitivity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quintic smoothed step: 0 below -delta, 1 above +delta, C1 at both ends.
inline double heaviside(double phi, double delta) {
    if (delta <= 0) throw std::invalid_argument("heaviside: delta must be positive");
    if (phi > delta) return 1.0;
    if (phi < -delta) return 0.0;
    double r = phi / delta;
    double r2 = r * r;
    return 0.5 + r * (15.0 / 16.0 + r2 * (-5.0 / 8.0 + r2 * (3.0 / 16.0)));
}

struct LevelSetField {
    ScalarField phi;      // clamped to [-1, 1]
    double delta = 0.01;  // transition half-width of the smoothed step
    double tau = 1e-4;    // diffusive regularization strength
    double k_coef = 1.0;  // update proportionality coefficient
    double dt = 0.3;      // fictitious time step

    bool params_valid() const { return delta > 0 && tau > 0 && k_coef > 0 && dt > 0; }
};

// Per-node pin derived from non-design element labels; solid wins when a
// node touches both kinds.
enum class NodePin : char { Free, Solid, Void };

inline std::vector<NodePin> node_pins(const Mesh& mesh) {
    std::vector<NodePin> pins(mesh.num_nodes(), NodePin::Free);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        ElementRegion r = mesh.element_regions[e];
        if (r == ElementRegion::Design) continue;
        for (int i = 0; i < 3; ++i) {
            NodePin& p = pins[mesh.triangles[e][i]];
            if (r == ElementRegion::NonDesignSolid)
                p = NodePin::Solid;
            else if (p == NodePin::Free)
                p = NodePin::Void;
        }
    }
    return pins;
}

inline void pin_phi(ScalarField& phi, const std::vector<NodePin>& pins) {
    for (size_t n = 0; n < pins.size(); ++n) {
        if (pins[n] == NodePin::Solid) phi[n] = 1.0;
        if (pins[n] == NodePin::Void) phi[n] = -1.0;
    }
}

inline LevelSetField initial_level_set(const Mesh& mesh, double delta, double tau,
                                       double k_coef, double dt) {
    LevelSetField f;
    f.phi = ScalarField::Constant(mesh.num_nodes(), 1.0);
    f.delta = delta;
    f.tau = tau;
    f.k_coef = k_coef;
    f.dt = dt;
    pin_phi(f.phi, node_pins(mesh));
    return f;
}

struct CharacteristicField {
    ScalarField chi;               // nodal, in [0, 1]
    std::vector<double> chi_elem;  // centroid average per element
};

inline CharacteristicField characteristic(const Mesh& mesh, const LevelSetField& field) {
    CharacteristicField c;
    c.chi.resize(mesh.num_nodes());
    auto pins = node_pins(mesh);
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        if (pins[n] == NodePin::Solid)
            c.chi[n] = 1.0;
        else if (pins[n] == NodePin::Void)
            c.chi[n] = 0.0;
        else
            c.chi[n] = heaviside(field.phi[n], field.delta);
    }
    c.chi_elem.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        if (mesh.element_regions[e] == ElementRegion::NonDesignSolid)
            c.chi_elem[e] = 1.0;
        else if (mesh.element_regions[e] == ElementRegion::NonDesignVoid)
            c.chi_elem[e] = 0.0;
        else
            c.chi_elem[e] = (c.chi[t[0]] + c.chi[t[1]] + c.chi[t[2]]) / 3.0;
    }
    return c;
}

inline double volume_fraction(const CharacteristicField& chi, const Mesh& mesh,
                              const P1Basis& basis) {
    double v = 0.0, total = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        v += chi.chi_elem[e] * basis.area[e];
        total += basis.area[e];
    }
    return v / total;
}

// One semi-implicit step of the regularized reaction-diffusion update:
//   (M/dt + k tau K) phi_new = M phi_old/dt - k M ghat
// with ghat the domain-normalized sensitivity, phi = 1 on the mold-contact
// node set, natural conditions elsewhere. The result is clamped to [-1, 1]
// and non-design nodes are re-pinned.
inline LevelSetField update(const LevelSetField& field, const ScalarField& sensitivity,
                            const Mesh& mesh, const P1Basis& basis,
                            const std::string& mold_boundary = "") {
    if (!field.params_valid())
        throw std::invalid_argument("levelset update: invalid parameters");
    if (sensitivity.size() != mesh.num_nodes())
        throw std::invalid_argument("levelset update: sensitivity size mismatch");
    if (!sensitivity.allFinite())
        throw std::invalid_argument("levelset update: non-finite sensitivity");

    Eigen::VectorXd mass = lumped_mass(mesh, basis);
    double total_area = mass.sum();
    double denom = mass.dot(sensitivity.cwiseAbs());
    ScalarField ghat;
    if (denom == 0.0) {
        if (sensitivity.cwiseAbs().maxCoeff() > 0.0)
            throw degenerate_sensitivity_error(
                "levelset update: sensitivity integrates to zero");
        // identically zero sensitivity: pure diffusion step
        ghat = ScalarField::Zero(mesh.num_nodes());
    } else {
        ghat = sensitivity * (total_area / denom);
    }

    std::vector<double> ones(mesh.num_elements(), 1.0);
    SparseSystem sys = assemble_diffusion(mesh, basis, ones);
    sys.K *= field.k_coef * field.tau;
    std::vector<Eigen::Triplet<double>> diag;
    for (int n = 0; n < mesh.num_nodes(); ++n) diag.emplace_back(n, n, mass[n] / field.dt);
    Eigen::SparseMatrix<double> Md(mesh.num_nodes(), mesh.num_nodes());
    Md.setFromTriplets(diag.begin(), diag.end());
    sys.K += Md;
    sys.rhs = mass.cwiseProduct(field.phi / field.dt - field.k_coef * ghat);

    if (!mold_boundary.empty()) {
        auto nodes = mesh.node_set(mold_boundary);
        if (!nodes.empty()) apply_dirichlet(sys, nodes, 1.0);
    }

    LevelSetField next = field;
    next.phi = solve(sys, 1e-10);
    next.phi = next.phi.cwiseMax(-1.0).cwiseMin(1.0);
    pin_phi(next.phi, node_pins(mesh));
    return next;
}

}  // namespace fictop
