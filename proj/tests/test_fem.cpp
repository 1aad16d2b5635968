#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "fictop/fem.hpp"
#include "fictop/mesh.hpp"

using namespace fictop;

namespace {

Mesh unit_square(int n) { return generate_rect_mesh(1.0, 1.0, n, n); }

std::vector<int> nodes_where(const Mesh& m, auto pred) {
    std::vector<int> out;
    for (int i = 0; i < m.num_nodes(); ++i)
        if (pred(m.nodes[i])) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("diffusion stiffness has the constant vector in its null space") {
    Mesh m = unit_square(1);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    CHECK(sys.K.rows() == 4);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    CHECK((sys.K * ones).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("diffusion assembly is linear in the coefficient") {
    Mesh m = unit_square(4);
    P1Basis basis(m);
    std::vector<double> one(m.num_elements(), 1.0), two(m.num_elements(), 2.0);
    SparseSystem a = assemble_diffusion(m, basis, one);
    SparseSystem b = assemble_diffusion(m, basis, two);
    Eigen::SparseMatrix<double> diff = b.K - 2.0 * a.K;
    CHECK(diff.coeffs().cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("diffusion assembly is symmetric for random coefficients") {
    Mesh m = unit_square(8);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements());
    for (size_t e = 0; e < coeff.size(); ++e)
        coeff[e] = 0.5 + ((e * 2654435761u) % 1000) / 1000.0;  // deterministic positives
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    Eigen::SparseMatrix<double> t = Eigen::SparseMatrix<double>(sys.K.transpose()) - sys.K;
    CHECK(t.coeffs().cwiseAbs().maxCoeff() < 1e-12 * sys.K.coeffs().cwiseAbs().maxCoeff());
}

TEST_CASE("diffusion assembly rejects non-positive coefficients") {
    Mesh m = unit_square(2);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    coeff[3] = 0.0;
    CHECK_THROWS_AS(assemble_diffusion(m, basis, coeff), assembly_error);
}

TEST_CASE("lumped mass sums to the domain area") {
    Mesh m = generate_rect_mesh(2.0, 0.5, 12, 7);
    P1Basis basis(m);
    CHECK(lumped_mass(m, basis).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("diffusion linear solution is exact at the nodes") {
    // Unit coefficient, T=1 on the left edge, T=0 on the right: the exact
    // solution T = 1 - x lies in the P1 space, so nodal values must match
    // to solver precision.
    Mesh m = unit_square(16);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x < 1e-9; }), 1.0);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x > 1.0 - 1e-9; }), 0.0);
    Eigen::VectorXd T = solve(sys, 1e-12);
    double err = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
        err = std::max(err, std::abs(T[i] - (1.0 - m.nodes[i].x)));
    CHECK(err < 1e-10);
}

TEST_CASE("diffusion maximum principle with uniform coefficient") {
    Mesh m = unit_square(12);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 3.0);
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x < 1e-9; }), 2.0);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x > 1.0 - 1e-9; }), -1.0);
    Eigen::VectorXd T = solve(sys, 1e-11);
    CHECK(T.maxCoeff() <= 2.0 + 1e-9);
    CHECK(T.minCoeff() >= -1.0 - 1e-9);
}

TEST_CASE("elasticity stiffness annihilates rigid translations") {
    Mesh m = unit_square(3);
    P1Basis basis(m);
    std::vector<double> scale(m.num_elements(), 1.0);
    SparseSystem sys = assemble_elasticity(m, basis, scale, {200.0, 0.3});
    Eigen::VectorXd tx = Eigen::VectorXd::Zero(sys.K.rows());
    Eigen::VectorXd rot = Eigen::VectorXd::Zero(sys.K.rows());
    for (int n = 0; n < m.num_nodes(); ++n) {
        tx[2 * n] = 1.0;
        rot[2 * n] = -m.nodes[n].y;  // infinitesimal rotation
        rot[2 * n + 1] = m.nodes[n].x;
    }
    double ref = sys.K.coeffs().cwiseAbs().maxCoeff();
    CHECK((sys.K * tx).cwiseAbs().maxCoeff() < 1e-12 * ref);
    CHECK((sys.K * rot).cwiseAbs().maxCoeff() < 1e-9 * ref);
}

TEST_CASE("elasticity assembly is linear in E") {
    Mesh m = unit_square(3);
    P1Basis basis(m);
    std::vector<double> scale(m.num_elements(), 1.0);
    SparseSystem a = assemble_elasticity(m, basis, scale, {100.0, 0.25});
    SparseSystem b = assemble_elasticity(m, basis, scale, {200.0, 0.25});
    Eigen::SparseMatrix<double> diff = b.K - 2.0 * a.K;
    CHECK(diff.coeffs().cwiseAbs().maxCoeff() <
          1e-12 * a.K.coeffs().cwiseAbs().maxCoeff());
}

TEST_CASE("elasticity patch test reproduces a linear displacement field") {
    // Prescribing an arbitrary linear displacement on the boundary must
    // recover the same linear field at interior nodes: P1 elements
    // represent linear fields exactly.
    Mesh m = unit_square(2);
    P1Basis basis(m);
    std::vector<double> scale(m.num_elements(), 1.0);
    SparseSystem sys = assemble_elasticity(m, basis, scale, {150.0, 0.3});
    auto ux = [](Vec2 p) { return 0.3 * p.x - 0.1 * p.y + 0.05; };
    auto uy = [](Vec2 p) { return -0.2 * p.x + 0.4 * p.y - 0.02; };
    for (int n = 0; n < m.num_nodes(); ++n) {
        Vec2 p = m.nodes[n];
        bool boundary = p.x < 1e-9 || p.x > 1 - 1e-9 || p.y < 1e-9 || p.y > 1 - 1e-9;
        if (!boundary) continue;
        int dx = 2 * n, dy = 2 * n + 1;
        apply_dirichlet(sys, std::vector<int>{dx}, ux(p));
        apply_dirichlet(sys, std::vector<int>{dy}, uy(p));
    }
    Eigen::VectorXd u = solve(sys, 1e-13);
    double err = 0.0;
    for (int n = 0; n < m.num_nodes(); ++n) {
        err = std::max(err, std::abs(u[2 * n] - ux(m.nodes[n])));
        err = std::max(err, std::abs(u[2 * n + 1] - uy(m.nodes[n])));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("apply_dirichlet pins values exactly and detects conflicts") {
    Mesh m = unit_square(4);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    auto all = nodes_where(m, [](Vec2) { return true; });
    apply_dirichlet(sys, all, 0.0);
    Eigen::VectorXd T = solve(sys, 1e-12);
    CHECK(T.cwiseAbs().maxCoeff() == 0.0);

    SparseSystem sys2 = assemble_diffusion(m, basis, coeff);
    std::vector<int> corner{0};
    apply_dirichlet(sys2, corner, 1.0);
    CHECK_THROWS_AS(apply_dirichlet(sys2, corner, 2.0), constraint_error);
}

TEST_CASE("apply_neumann adds flux times edge length to the load") {
    Mesh m = unit_square(4);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);

    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    auto left = m.tagged_edges("outer");
    // restrict to the left side (length 1 split into 4 segments)
    std::vector<std::pair<int, int>> left_edges;
    for (auto [a, b] : left)
        if (m.nodes[a].x < 1e-9 && m.nodes[b].x < 1e-9) left_edges.push_back({a, b});
    REQUIRE(left_edges.size() == 4);
    apply_neumann(sys, m, left_edges, 3.0);
    CHECK(sys.rhs.sum() == doctest::Approx(3.0).epsilon(1e-12));

    SparseSystem sys2 = assemble_diffusion(m, basis, coeff);
    apply_neumann(sys2, m, m.tagged_edges("outer"), 1.0);  // perimeter length 4
    CHECK(sys2.rhs.sum() == doctest::Approx(4.0).epsilon(1e-12));

    SparseSystem sys3 = assemble_diffusion(m, basis, coeff);
    apply_neumann(sys3, m, left_edges, 0.0);
    CHECK(sys3.rhs.cwiseAbs().maxCoeff() == 0.0);

    SparseSystem sys4 = assemble_diffusion(m, basis, coeff);
    CHECK_THROWS_AS(apply_neumann(sys4, m, {}, 1.0), boundary_error);
}

TEST_CASE("solve meets the requested residual and reports failure") {
    Mesh m = unit_square(8);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    SparseSystem sys = assemble_diffusion(m, basis, coeff);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x < 1e-9; }), 1.0);
    apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x > 1 - 1e-9; }), 0.0);
    Eigen::VectorXd x = solve(sys, 1e-10);
    // Galerkin-orthogonality sanity on the full system
    Eigen::VectorXd r = sys.K * x - sys.rhs;
    for (int i = 0; i < r.size(); ++i)
        if (sys.constrained[i]) r[i] = 0.0;
    CHECK(r.norm() <= 1e-9 * std::max(1.0, sys.rhs.norm()));

    // Pure-Neumann with incompatible load: singular system, CG cannot converge.
    SparseSystem bad = assemble_diffusion(m, basis, coeff);
    bad.rhs.setOnes();
    CHECK_THROWS_AS(solve(bad, 1e-12, 50), solver_error);
}

TEST_CASE("solve is deterministic") {
    Mesh m = unit_square(12);
    P1Basis basis(m);
    std::vector<double> coeff(m.num_elements(), 1.0);
    auto make = [&] {
        SparseSystem sys = assemble_diffusion(m, basis, coeff);
        apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x < 1e-9; }), 1.0);
        apply_dirichlet(sys, nodes_where(m, [](Vec2 p) { return p.x > 1 - 1e-9; }), 0.0);
        return solve(sys, 1e-11);
    };
    Eigen::VectorXd a = make(), b = make();
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("element gradients and element-to-node transfer") {
    Mesh m = unit_square(6);
    P1Basis basis(m);
    ScalarField f(m.num_nodes());
    for (int n = 0; n < m.num_nodes(); ++n) f[n] = 2.0 * m.nodes[n].x - 3.0 * m.nodes[n].y;
    auto grads = element_gradients(m, basis, f);
    for (const auto& g : grads) {
        CHECK(g.x == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(g.y == doctest::Approx(-3.0).epsilon(1e-12));
    }
    std::vector<double> ones(m.num_elements(), 1.0);
    ScalarField nodal = elements_to_nodes(m, basis, ones);
    CHECK(nodal.minCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nodal.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}
