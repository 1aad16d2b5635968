#pragma once

// Fictitious diffusion fields for geometric feature evaluation: the
// shielding field (fixed temperature difference) and the penetrating field
// (constant heat flux), their adjoints and sensitivities.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fictop/fem.hpp"
#include "fictop/levelset.hpp"
#include "fictop/mesh.hpp"

namespace fictop {

struct FictitiousParams {
    double kappa_solid = 1.0;
    double kappa_void = 100.0;
    double length = 1.0;  // characteristic length between source and sink boundaries
    double weight = 0.0;  // objective weight

    bool valid() const {
        return kappa_solid > 0.0 && kappa_solid < kappa_void && length > 0.0 && weight >= 0.0;
    }
    void check() const {
        if (!valid())
            throw std::invalid_argument(
                "FictitiousParams: need 0 < kappa_solid < kappa_void, length > 0, weight >= 0");
    }
};

struct FeatureResult {
    ScalarField field;
    ScalarField adjoint;
    double J = 0.0;
    ScalarField sensitivity;              // nodal, area-averaged from elements
    std::vector<double> density_map;      // per-element J integrand
    std::vector<double> sens_density;     // per-element sensitivity integrand
};

// a = (kappa_solid chi^3 + kappa_void (1 - chi^3)) L^2, per element.
inline std::vector<double> diffusion_coefficients(std::span<const double> chi_elem,
                                                  const FictitiousParams& params) {
    params.check();
    std::vector<double> a(chi_elem.size());
    double L2 = params.length * params.length;
    for (size_t e = 0; e < a.size(); ++e) {
        double c3 = chi_elem[e] * chi_elem[e] * chi_elem[e];
        a[e] = (params.kappa_solid * c3 + params.kappa_void * (1.0 - c3)) * L2;
    }
    return a;
}

inline double coefficient_slope(double chi, const FictitiousParams& params) {
    return 3.0 * chi * chi * (params.kappa_solid - params.kappa_void) * params.length *
           params.length;
}

namespace detail {

inline std::vector<int> require_node_set(const Mesh& mesh, const std::string& tag,
                                         const char* what) {
    auto nodes = mesh.node_set(tag);
    if (nodes.empty())
        throw configuration_error(std::string(what) + ": boundary '" + tag +
                                  "' resolves to no nodes");
    return nodes;
}

// rhs_i -= sum_e 2 w_e area_e (grad field)_e . grad hat_i  (weak adjoint source)
inline void add_adjoint_source(SparseSystem& sys, const Mesh& mesh, const P1Basis& basis,
                               const std::vector<Vec2>& grad,
                               std::span<const double> weight_elem) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        for (int i = 0; i < 3; ++i)
            sys.rhs[t[i]] -=
                2.0 * weight_elem[e] * basis.area[e] * dot(grad[e], basis.grad[e][i]);
    }
}

}  // namespace detail

inline ScalarField solve_shielding(const Mesh& mesh, const P1Basis& basis,
                                   const CharacteristicField& chi,
                                   const FictitiousParams& params,
                                   const std::string& out_tag = "gamma_s_out",
                                   const std::string& in_tag = "gamma_s_in",
                                   double tol = 1e-9) {
    auto out_nodes = detail::require_node_set(mesh, out_tag, "solve_shielding");
    auto in_nodes = detail::require_node_set(mesh, in_tag, "solve_shielding");
    auto a = diffusion_coefficients(chi.chi_elem, params);
    SparseSystem sys = assemble_diffusion(mesh, basis, a);
    apply_dirichlet(sys, out_nodes, 1.0);
    apply_dirichlet(sys, in_nodes, 0.0);
    return solve(sys, tol);
}

inline FeatureResult eval_Js(const Mesh& mesh, const P1Basis& basis,
                             const CharacteristicField& chi, const ScalarField& s) {
    FeatureResult r;
    r.field = s;
    r.density_map.resize(mesh.num_elements());
    auto grad = element_gradients(mesh, basis, s);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double v = 1.0 - chi.chi_elem[e];
        r.density_map[e] = v * v * v * dot(grad[e], grad[e]);
        r.J += r.density_map[e] * basis.area[e];
    }
    return r;
}

inline ScalarField solve_shielding_adjoint(const Mesh& mesh, const P1Basis& basis,
                                           const CharacteristicField& chi,
                                           const ScalarField& s,
                                           const FictitiousParams& params,
                                           const std::string& out_tag = "gamma_s_out",
                                           const std::string& in_tag = "gamma_s_in",
                                           double tol = 1e-9) {
    auto out_nodes = detail::require_node_set(mesh, out_tag, "solve_shielding_adjoint");
    auto in_nodes = detail::require_node_set(mesh, in_tag, "solve_shielding_adjoint");
    auto a = diffusion_coefficients(chi.chi_elem, params);
    SparseSystem sys = assemble_diffusion(mesh, basis, a);
    std::vector<double> w(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double v = 1.0 - chi.chi_elem[e];
        w[e] = v * v * v;
    }
    detail::add_adjoint_source(sys, mesh, basis, element_gradients(mesh, basis, s), w);
    apply_dirichlet(sys, out_nodes, 0.0);
    apply_dirichlet(sys, in_nodes, 0.0);
    return solve(sys, tol);
}

// Per-element sensitivity integrand 3(1-chi)^2 |grad s|^2 - da/dchi grad s . grad s_hat.
// Positive values mark void regions whose gradients a shielding wall should kill.
inline std::vector<double> sensitivity_Js_elements(const Mesh& mesh, const P1Basis& basis,
                                                   const CharacteristicField& chi,
                                                   const ScalarField& s,
                                                   const ScalarField& s_hat,
                                                   const FictitiousParams& params) {
    auto gs = element_gradients(mesh, basis, s);
    auto gh = element_gradients(mesh, basis, s_hat);
    std::vector<double> d(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double c = chi.chi_elem[e];
        double v = 1.0 - c;
        d[e] = 3.0 * v * v * dot(gs[e], gs[e]) -
               coefficient_slope(c, params) * dot(gs[e], gh[e]);
    }
    return d;
}

inline ScalarField sensitivity_Js(const Mesh& mesh, const P1Basis& basis,
                                  const CharacteristicField& chi, const ScalarField& s,
                                  const ScalarField& s_hat, const FictitiousParams& params) {
    return elements_to_nodes(mesh, basis,
                             sensitivity_Js_elements(mesh, basis, chi, s, s_hat, params));
}

inline ScalarField solve_penetrating(const Mesh& mesh, const P1Basis& basis,
                                     const CharacteristicField& chi,
                                     const FictitiousParams& params,
                                     const std::string& out_tag = "gamma_p_out",
                                     const std::string& in_tag = "gamma_p_in",
                                     double tol = 1e-9) {
    auto edges = mesh.tagged_edges(out_tag);
    if (edges.empty())
        throw configuration_error("solve_penetrating: boundary '" + out_tag +
                                  "' resolves to no edges");
    auto in_nodes = detail::require_node_set(mesh, in_tag, "solve_penetrating");
    auto a = diffusion_coefficients(chi.chi_elem, params);
    SparseSystem sys = assemble_diffusion(mesh, basis, a);
    apply_neumann(sys, mesh, edges, 1.0);
    apply_dirichlet(sys, in_nodes, 0.0);
    return solve(sys, tol);
}

inline FeatureResult eval_Jp(const Mesh& mesh, const P1Basis& basis,
                             const CharacteristicField& chi, const ScalarField& p) {
    FeatureResult r;
    r.field = p;
    r.density_map.resize(mesh.num_elements());
    auto grad = element_gradients(mesh, basis, p);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double c = chi.chi_elem[e];
        r.density_map[e] = c * c * c * dot(grad[e], grad[e]);
        r.J += r.density_map[e] * basis.area[e];
    }
    return r;
}

inline ScalarField solve_penetrating_adjoint(const Mesh& mesh, const P1Basis& basis,
                                             const CharacteristicField& chi,
                                             const ScalarField& p,
                                             const FictitiousParams& params,
                                             const std::string& in_tag = "gamma_p_in",
                                             double tol = 1e-9) {
    auto in_nodes = detail::require_node_set(mesh, in_tag, "solve_penetrating_adjoint");
    auto a = diffusion_coefficients(chi.chi_elem, params);
    SparseSystem sys = assemble_diffusion(mesh, basis, a);
    std::vector<double> w(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double c = chi.chi_elem[e];
        w[e] = c * c * c;
    }
    detail::add_adjoint_source(sys, mesh, basis, element_gradients(mesh, basis, p), w);
    apply_dirichlet(sys, in_nodes, 0.0);
    return solve(sys, tol);
}

inline std::vector<double> sensitivity_Jp_elements(const Mesh& mesh, const P1Basis& basis,
                                                   const CharacteristicField& chi,
                                                   const ScalarField& p,
                                                   const ScalarField& p_hat,
                                                   const FictitiousParams& params) {
    auto gp = element_gradients(mesh, basis, p);
    auto gh = element_gradients(mesh, basis, p_hat);
    std::vector<double> d(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        double c = chi.chi_elem[e];
        d[e] = -3.0 * c * c * dot(gp[e], gp[e]) -
               coefficient_slope(c, params) * dot(gp[e], gh[e]);
    }
    return d;
}

inline ScalarField sensitivity_Jp(const Mesh& mesh, const P1Basis& basis,
                                  const CharacteristicField& chi, const ScalarField& p,
                                  const ScalarField& p_hat, const FictitiousParams& params) {
    return elements_to_nodes(mesh, basis,
                             sensitivity_Jp_elements(mesh, basis, chi, p, p_hat, params));
}

// Convenience: full shielding evaluation (field, adjoint, J, sensitivity).
inline FeatureResult evaluate_shielding(const Mesh& mesh, const P1Basis& basis,
                                        const CharacteristicField& chi,
                                        const FictitiousParams& params,
                                        const std::string& out_tag = "gamma_s_out",
                                        const std::string& in_tag = "gamma_s_in") {
    ScalarField s = solve_shielding(mesh, basis, chi, params, out_tag, in_tag);
    FeatureResult r = eval_Js(mesh, basis, chi, s);
    r.adjoint = solve_shielding_adjoint(mesh, basis, chi, s, params, out_tag, in_tag);
    r.sens_density = sensitivity_Js_elements(mesh, basis, chi, s, r.adjoint, params);
    r.sensitivity = elements_to_nodes(mesh, basis, r.sens_density);
    return r;
}

inline FeatureResult evaluate_penetrating(const Mesh& mesh, const P1Basis& basis,
                                          const CharacteristicField& chi,
                                          const FictitiousParams& params,
                                          const std::string& out_tag = "gamma_p_out",
                                          const std::string& in_tag = "gamma_p_in") {
    ScalarField p = solve_penetrating(mesh, basis, chi, params, out_tag, in_tag);
    FeatureResult r = eval_Jp(mesh, basis, chi, p);
    r.adjoint = solve_penetrating_adjoint(mesh, basis, chi, p, params, in_tag);
    r.sens_density = sensitivity_Jp_elements(mesh, basis, chi, p, r.adjoint, params);
    r.sensitivity = elements_to_nodes(mesh, basis, r.sens_density);
    return r;
}

// --- Boundary-condition study -------------------------------------------

enum class SourceKind { Dirichlet, Neumann };

// Steady diffusion through a given structure with coefficient 1 in solid
// and kappa_void in void, driven either by a fixed temperature difference
// or by a unit flux, between 'gamma_out' and 'gamma_in'.
inline ScalarField boundary_study(const Mesh& mesh, const P1Basis& basis,
                                  const CharacteristicField& chi, SourceKind source,
                                  double kappa_void = 100.0,
                                  const std::string& out_tag = "gamma_out",
                                  const std::string& in_tag = "gamma_in") {
    FictitiousParams params;
    params.kappa_solid = 1.0;
    params.kappa_void = kappa_void;
    params.length = 1.0;
    if (source == SourceKind::Dirichlet)
        return solve_shielding(mesh, basis, chi, params, out_tag, in_tag);
    return solve_penetrating(mesh, basis, chi, params, out_tag, in_tag);
}

// --- Point sampling ------------------------------------------------------

inline int locate_element(const Mesh& mesh, Vec2 p) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        Vec2 a = mesh.nodes[t[0]], b = mesh.nodes[t[1]], c = mesh.nodes[t[2]];
        double d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        double l1 = ((b.x - p.x) * (c.y - p.y) - (b.y - p.y) * (c.x - p.x)) / d;
        double l2 = ((c.x - p.x) * (a.y - p.y) - (c.y - p.y) * (a.x - p.x)) / d;
        double l3 = 1.0 - l1 - l2;
        double eps = 1e-12;
        if (l1 >= -eps && l2 >= -eps && l3 >= -eps) return e;
    }
    return -1;
}

inline double sample_field(const Mesh& mesh, const ScalarField& f, Vec2 p) {
    int e = locate_element(mesh, p);
    if (e < 0) throw std::invalid_argument("sample_field: point outside mesh");
    const auto& t = mesh.triangles[e];
    Vec2 a = mesh.nodes[t[0]], b = mesh.nodes[t[1]], c = mesh.nodes[t[2]];
    double d = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    double l1 = ((b.x - p.x) * (c.y - p.y) - (b.y - p.y) * (c.x - p.x)) / d;
    double l2 = ((c.x - p.x) * (a.y - p.y) - (c.y - p.y) * (a.x - p.x)) / d;
    double l3 = 1.0 - l1 - l2;
    return l1 * f[t[0]] + l2 * f[t[1]] + l3 * f[t[2]];
}

inline Vec2 gradient_at(const Mesh& mesh, const P1Basis& basis, const ScalarField& f,
                        Vec2 p) {
    int e = locate_element(mesh, p);
    if (e < 0) throw std::invalid_argument("gradient_at: point outside mesh");
    const auto& t = mesh.triangles[e];
    Vec2 g{0, 0};
    for (int i = 0; i < 3; ++i) g = g + f[t[i]] * basis.grad[e][i];
    return g;
}

struct ProfileSample {
    double t;       // arc-length position along the section
    double value;   // interpolated field value
    double grad;    // |grad| of the field at the sample point
};

inline std::vector<ProfileSample> sample_profile(const Mesh& mesh, const P1Basis& basis,
                                                 const ScalarField& f, Vec2 p0, Vec2 p1,
                                                 int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("sample_profile: need >= 2 samples");
    std::vector<ProfileSample> out;
    out.reserve(n_samples);
    double len = norm(p1 - p0);
    for (int k = 0; k < n_samples; ++k) {
        double a = static_cast<double>(k) / (n_samples - 1);
        Vec2 p = p0 + a * (p1 - p0);
        out.push_back({a * len, sample_field(mesh, f, p), norm(gradient_at(mesh, basis, f, p))});
    }
    return out;
}

}  // namespace fictop
