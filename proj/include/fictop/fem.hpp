#pragma once

// P1 triangle finite-element assembly for scalar diffusion and 2D
// plane-stress elasticity, with symmetric Dirichlet elimination and a
// diagonally preconditioned conjugate-gradient solve.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fictop/mesh.hpp"

namespace fictop {

using ScalarField = Eigen::VectorXd;   // one value per node
using VectorField = Eigen::VectorXd;   // (ux, uy) interleaved per node

struct MaterialParams {
    double E = 1.0;
    double nu = 0.3;

    bool valid() const { return E > 0.0 && nu > -1.0 && nu < 0.5; }

    friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

struct assembly_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct constraint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct boundary_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct solver_error : std::runtime_error {
    double residual;
    solver_error(const std::string& msg, double res)
        : std::runtime_error(msg), residual(res) {}
};

// Cached element geometry: areas and constant hat-function gradients.
struct P1Basis {
    std::vector<double> area;
    std::vector<std::array<Vec2, 3>> grad;

    explicit P1Basis(const Mesh& mesh) {
        int ne = mesh.num_elements();
        area.resize(ne);
        grad.resize(ne);
        for (int e = 0; e < ne; ++e) {
            const auto& t = mesh.triangles[e];
            Vec2 p0 = mesh.nodes[t[0]], p1 = mesh.nodes[t[1]], p2 = mesh.nodes[t[2]];
            double a2 = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
            if (a2 <= 0)
                throw assembly_error("P1Basis: non-positive area in element " +
                                     std::to_string(e));
            area[e] = 0.5 * a2;
            grad[e][0] = {(p1.y - p2.y) / a2, (p2.x - p1.x) / a2};
            grad[e][1] = {(p2.y - p0.y) / a2, (p0.x - p2.x) / a2};
            grad[e][2] = {(p0.y - p1.y) / a2, (p1.x - p0.x) / a2};
        }
    }
};

struct SparseSystem {
    Eigen::SparseMatrix<double> K;
    Eigen::VectorXd rhs;
    std::vector<char> constrained;
    Eigen::VectorXd constrained_value;

    int ndof() const { return static_cast<int>(K.rows()); }

    void init(int n) {
        K.resize(n, n);
        rhs = Eigen::VectorXd::Zero(n);
        constrained.assign(n, 0);
        constrained_value = Eigen::VectorXd::Zero(n);
    }
};

inline SparseSystem assemble_diffusion(const Mesh& mesh, const P1Basis& basis,
                                       std::span<const double> coeff) {
    if (static_cast<int>(coeff.size()) != mesh.num_elements())
        throw assembly_error("assemble_diffusion: coefficient size mismatch");
    SparseSystem sys;
    sys.init(mesh.num_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(9) * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (!(coeff[e] > 0.0))
            throw assembly_error("assemble_diffusion: non-positive coefficient in element " +
                                 std::to_string(e));
        const auto& t = mesh.triangles[e];
        double cA = coeff[e] * basis.area[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(t[i], t[j], cA * dot(basis.grad[e][i], basis.grad[e][j]));
    }
    sys.K.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

// Lumped P1 mass matrix diagonal (area/3 to each vertex).
inline Eigen::VectorXd lumped_mass(const Mesh& mesh, const P1Basis& basis) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        double third = basis.area[e] / 3.0;
        for (int i = 0; i < 3; ++i) m[t[i]] += third;
    }
    return m;
}

inline SparseSystem assemble_elasticity(const Mesh& mesh, const P1Basis& basis,
                                        std::span<const double> stiffness_scale,
                                        const MaterialParams& mat) {
    if (!mat.valid())
        throw std::invalid_argument("assemble_elasticity: invalid material (E, nu)");
    if (static_cast<int>(stiffness_scale.size()) != mesh.num_elements())
        throw assembly_error("assemble_elasticity: stiffness scale size mismatch");

    // plane stress constitutive matrix
    double f = mat.E / (1.0 - mat.nu * mat.nu);
    Eigen::Matrix3d D;
    D << f, f * mat.nu, 0.0,
         f * mat.nu, f, 0.0,
         0.0, 0.0, f * (1.0 - mat.nu) / 2.0;

    SparseSystem sys;
    sys.init(2 * mesh.num_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(36) * mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (!(stiffness_scale[e] > 0.0))
            throw assembly_error("assemble_elasticity: non-positive stiffness in element " +
                                 std::to_string(e));
        const auto& t = mesh.triangles[e];
        Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
        for (int i = 0; i < 3; ++i) {
            B(0, 2 * i) = basis.grad[e][i].x;
            B(1, 2 * i + 1) = basis.grad[e][i].y;
            B(2, 2 * i) = basis.grad[e][i].y;
            B(2, 2 * i + 1) = basis.grad[e][i].x;
        }
        Eigen::Matrix<double, 6, 6> Ke =
            stiffness_scale[e] * basis.area[e] * B.transpose() * D * B;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                trip.emplace_back(2 * t[i / 2] + i % 2, 2 * t[j / 2] + j % 2, Ke(i, j));
    }
    sys.K.setFromTriplets(trip.begin(), trip.end());
    return sys;
}

inline void apply_dirichlet(SparseSystem& sys, std::span<const int> dofs, double value) {
    if (dofs.empty()) throw constraint_error("apply_dirichlet: empty dof set");
    for (int d : dofs) {
        if (d < 0 || d >= sys.ndof())
            throw std::out_of_range("apply_dirichlet: dof " + std::to_string(d) +
                                    " out of range");
        if (sys.constrained[d] && sys.constrained_value[d] != value)
            throw constraint_error("apply_dirichlet: conflicting values on dof " +
                                   std::to_string(d));
        sys.constrained[d] = 1;
        sys.constrained_value[d] = value;
    }
}

// Adds flux * edge_length, lumped half-and-half onto the edge end nodes.
inline void apply_neumann(SparseSystem& sys, const Mesh& mesh,
                          const std::vector<std::pair<int, int>>& edges, double flux,
                          int dofs_per_node = 1, int component = 0) {
    if (edges.empty()) throw boundary_error("apply_neumann: empty edge set");
    for (auto [a, b] : edges) {
        double len = norm(mesh.nodes[b] - mesh.nodes[a]);
        sys.rhs[dofs_per_node * a + component] += 0.5 * flux * len;
        sys.rhs[dofs_per_node * b + component] += 0.5 * flux * len;
    }
}

// Symmetric elimination of Dirichlet dofs, then preconditioned CG.
// The prescribed values are reproduced exactly in the returned vector.
inline Eigen::VectorXd solve(const SparseSystem& sys, double tol = 1e-9, int max_iter = -1,
                             const Eigen::VectorXd* guess = nullptr) {
    int n = sys.ndof();
    if (max_iter < 0) max_iter = 10 * n;

    Eigen::VectorXd b = sys.rhs;
    for (int k = 0; k < sys.K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.K, k); it; ++it)
            if (sys.constrained[it.col()] && !sys.constrained[it.row()])
                b[it.row()] -= it.value() * sys.constrained_value[it.col()];

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(sys.K.nonZeros() + n);
    for (int k = 0; k < sys.K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.K, k); it; ++it)
            if (!sys.constrained[it.row()] && !sys.constrained[it.col()])
                trip.emplace_back(it.row(), it.col(), it.value());
    double dscale = 0.0;
    for (int i = 0; i < n; ++i)
        if (!sys.constrained[i]) dscale = std::max(dscale, std::abs(sys.K.coeff(i, i)));
    if (dscale == 0.0) dscale = 1.0;
    for (int i = 0; i < n; ++i)
        if (sys.constrained[i]) {
            trip.emplace_back(i, i, dscale);
            b[i] = dscale * sys.constrained_value[i];
        }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(0.1 * tol);
    cg.setMaxIterations(max_iter);
    cg.compute(A);
    Eigen::VectorXd x = guess ? cg.solveWithGuess(b, *guess).eval() : cg.solve(b).eval();

    // The recurrence-based residual estimate can drift from the true
    // residual, especially with a far-off warm start; restarting from the
    // current iterate resets the recurrence.
    double bn = b.norm();
    double res = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        for (int i = 0; i < n; ++i)
            if (sys.constrained[i]) x[i] = sys.constrained_value[i];
        res = bn > 0 ? (A * x - b).norm() / bn : (A * x).norm();
        if ((res <= tol && x.allFinite()) || !x.allFinite()) break;
        x = cg.solveWithGuess(b, x).eval();
    }
    if (!(res <= tol) || !x.allFinite()) {
        std::ostringstream msg;
        msg << "solve: CG did not converge (residual " << res << ")";
        throw solver_error(msg.str(), res);
    }
    return x;
}

// Constant gradient of a P1 scalar field on each element.
inline std::vector<Vec2> element_gradients(const Mesh& mesh, const P1Basis& basis,
                                           const ScalarField& field) {
    std::vector<Vec2> g(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        Vec2 ge{0, 0};
        for (int i = 0; i < 3; ++i) ge = ge + field[t[i]] * basis.grad[e][i];
        g[e] = ge;
    }
    return g;
}

// Area-weighted element-to-node averaging of per-element densities.
inline ScalarField elements_to_nodes(const Mesh& mesh, const P1Basis& basis,
                                     std::span<const double> density) {
    ScalarField num = ScalarField::Zero(mesh.num_nodes());
    ScalarField den = ScalarField::Zero(mesh.num_nodes());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        for (int i = 0; i < 3; ++i) {
            num[t[i]] += density[e] * basis.area[e];
            den[t[i]] += basis.area[e];
        }
    }
    for (int n = 0; n < mesh.num_nodes(); ++n) num[n] /= den[n];
    return num;
}

}  // namespace fictop
