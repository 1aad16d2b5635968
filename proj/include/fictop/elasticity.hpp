#pragma once

// Linear elasticity state solve, mean compliance and its
// topological-derivative sensitivity.

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fictop/fem.hpp"
#include "fictop/levelset.hpp"
#include "fictop/mesh.hpp"

namespace fictop {

constexpr double kErsatzStiffness = 1e-4;  // stiffness floor for void elements

struct LoadCase {
    Vec2 traction{0.0, -1.0};      // force per unit length on the traction boundary
    std::string fixed_boundary;    // node set name, displacement pinned to zero
    std::string traction_boundary; // edge tag name
};

// Coefficient tensor of the compliance topological derivative. Built from
// the 3D isotropic formula; 2D use restricts to in-plane indices under
// plane stress. Carries full minor and major symmetries.
struct TensorA {
    double prefactor;
    double dd;    // delta_ij delta_kl coefficient (before prefactor)
    double pair;  // (delta_ik delta_jl + delta_il delta_jk) coefficient

    explicit TensorA(const MaterialParams& mat) {
        if (!mat.valid()) throw std::invalid_argument("TensorA: invalid material");
        double nu = mat.nu, E = mat.E;
        prefactor = 3.0 * (1.0 - nu) / (2.0 * (1.0 + nu) * (7.0 - 5.0 * nu));
        dd = -(1.0 - 14.0 * nu + 15.0 * nu * nu) * E / ((1.0 - 2.0 * nu) * (1.0 - 2.0 * nu));
        pair = 5.0 * E;
    }

    double operator()(int i, int j, int k, int l) const {
        auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
        return prefactor * (dd * d(i, j) * d(k, l) + pair * (d(i, k) * d(j, l) + d(i, l) * d(j, k)));
    }

    // eps : A : eps for a symmetric 2x2 strain.
    double contract(const Eigen::Matrix2d& eps) const {
        double tr = eps.trace();
        double frob = eps.cwiseProduct(eps).sum();
        return prefactor * (dd * tr * tr + 2.0 * pair * frob);
    }
};

inline std::vector<double> stiffness_scales(const CharacteristicField& chi) {
    std::vector<double> s(chi.chi_elem.size());
    for (size_t e = 0; e < s.size(); ++e) s[e] = std::max(chi.chi_elem[e], kErsatzStiffness);
    return s;
}

inline SparseSystem elasticity_system(const Mesh& mesh, const P1Basis& basis,
                                      const CharacteristicField& chi,
                                      const MaterialParams& mat, const LoadCase& load) {
    auto scales = stiffness_scales(chi);
    SparseSystem sys = assemble_elasticity(mesh, basis, scales, mat);
    auto fixed = mesh.node_set(load.fixed_boundary);
    if (fixed.empty())
        throw configuration_error("elasticity: fixed boundary '" + load.fixed_boundary +
                                      "' resolves to no nodes");
    std::vector<int> dofs;
    dofs.reserve(2 * fixed.size());
    for (int n : fixed) {
        dofs.push_back(2 * n);
        dofs.push_back(2 * n + 1);
    }
    apply_dirichlet(sys, dofs, 0.0);
    auto edges = mesh.tagged_edges(load.traction_boundary);
    if (edges.empty())
        throw configuration_error("elasticity: traction boundary '" +
                                      load.traction_boundary + "' resolves to no edges");
    if (load.traction.x != 0.0) apply_neumann(sys, mesh, edges, load.traction.x, 2, 0);
    if (load.traction.y != 0.0) apply_neumann(sys, mesh, edges, load.traction.y, 2, 1);
    return sys;
}

inline VectorField solve_state(const Mesh& mesh, const P1Basis& basis,
                               const CharacteristicField& chi, const MaterialParams& mat,
                               const LoadCase& load, double tol = 1e-9,
                               const VectorField* guess = nullptr) {
    SparseSystem sys = elasticity_system(mesh, basis, chi, mat, load);
    return solve(sys, tol, -1, guess);
}

// Mean compliance as the boundary work of the applied traction,
// evaluated through load-vector duality.
inline double eval_Ju(const Mesh& mesh, const LoadCase& load, const VectorField& u) {
    auto edges = mesh.tagged_edges(load.traction_boundary);
    double j = 0.0;
    for (auto [a, b] : edges) {
        double len = norm(mesh.nodes[b] - mesh.nodes[a]);
        Vec2 ua{u[2 * a], u[2 * a + 1]}, ub{u[2 * b], u[2 * b + 1]};
        j += 0.5 * len * (dot(load.traction, ua) + dot(load.traction, ub));
    }
    return j;
}

inline Eigen::Matrix2d element_strain(const Mesh& mesh, const P1Basis& basis, int e,
                                      const VectorField& u) {
    const auto& t = mesh.triangles[e];
    Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 3; ++i) {
        grad_u(0, 0) += u[2 * t[i]] * basis.grad[e][i].x;
        grad_u(0, 1) += u[2 * t[i]] * basis.grad[e][i].y;
        grad_u(1, 0) += u[2 * t[i] + 1] * basis.grad[e][i].x;
        grad_u(1, 1) += u[2 * t[i] + 1] * basis.grad[e][i].y;
    }
    return 0.5 * (grad_u + grad_u.transpose());
}

// Per-element density chi * eps(u) : A : eps(u); the self-adjoint problem
// needs no separate adjoint solve.
inline std::vector<double> sensitivity_Ju_elements(const Mesh& mesh, const P1Basis& basis,
                                                   const CharacteristicField& chi,
                                                   const VectorField& u,
                                                   const MaterialParams& mat) {
    TensorA A(mat);
    std::vector<double> density(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e)
        density[e] = chi.chi_elem[e] * A.contract(element_strain(mesh, basis, e, u));
    return density;
}

inline ScalarField sensitivity_Ju(const Mesh& mesh, const P1Basis& basis,
                                  const CharacteristicField& chi, const VectorField& u,
                                  const MaterialParams& mat) {
    auto density = sensitivity_Ju_elements(mesh, basis, chi, u, mat);
    return elements_to_nodes(mesh, basis, density);
}

}  // namespace fictop
