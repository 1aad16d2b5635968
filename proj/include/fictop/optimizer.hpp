#pragma once

// Optimization loop: solve the state and fictitious fields, combine the
// weighted objective and sensitivities, enforce the volume bound through an
// augmented Lagrangian, and advance the level-set field. Also hosts the
// geometric post-checks (void connectivity, wall thickness).

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "fictop/elasticity.hpp"
#include "fictop/fem.hpp"
#include "fictop/fictitious.hpp"
#include "fictop/levelset.hpp"
#include "fictop/mesh.hpp"

namespace fictop {

struct divergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct measurement_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LevelSetParams {
    double delta = 0.01;
    double tau = 1e-4;
    double k_coef = 1.0;
    double dt = 0.3;

    friend bool operator==(const LevelSetParams&, const LevelSetParams&) = default;
};

struct AugLagParams {
    double lambda0 = 0.0;
    double mu0 = -1.0;           // < 0: set to 10 * initial area-mean |compliance sens.|
    double growth = 1.05;        // applied per iteration while infeasible
    double mu_max_factor = 1e4;  // mu_max = factor * mu0

    friend bool operator==(const AugLagParams&, const AugLagParams&) = default;
};

struct ProblemSpec {
    Mesh mesh;
    MaterialParams material{210e9, 0.3};
    LoadCase load;
    std::optional<FictitiousParams> shielding;    // weight field = omega_s
    std::optional<FictitiousParams> penetrating;  // weight field = omega_p
    std::string shield_out = "gamma_s_out";
    std::string shield_in = "gamma_s_in";
    std::string pen_out = "gamma_p_out";
    std::string pen_in = "gamma_p_in";
    std::string mold_boundary;  // level-set Dirichlet node set, usually empty
    double v_max = 1.0;
    int max_iterations = 300;
    LevelSetParams levelset;
    AugLagParams auglag;
    double solver_tol = 1e-9;

    double omega_s() const { return shielding ? shielding->weight : 0.0; }
    double omega_p() const { return penetrating ? penetrating->weight : 0.0; }

    void validate() const {
        if (omega_s() + omega_p() >= 1.0)
            throw configuration_error("ProblemSpec: omega_s + omega_p must be < 1");
        if (!(v_max > 0.0 && v_max <= 1.0))
            throw configuration_error("ProblemSpec: v_max must be in (0, 1]");
        if (max_iterations < 0)
            throw configuration_error("ProblemSpec: negative iteration budget");
        if (!material.valid()) throw configuration_error("ProblemSpec: invalid material");
    }
};

struct HistoryRow {
    int iter = 0;
    double volume_fraction = 0.0;
    double Ju = 0.0;
    double Js = 0.0;
    double Jp = 0.0;
    double J_combined = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
};

using History = std::vector<HistoryRow>;

inline double combined_objective(double Ju, double Js, double Jp, double omega_s,
                                 double omega_p) {
    if (omega_s < 0 || omega_p < 0 || omega_s + omega_p >= 1.0)
        throw configuration_error("combined_objective: invalid weights");
    return (1.0 - omega_s - omega_p) * Ju + omega_s * Js + omega_p * Jp;
}

// Update driver for the level-set step. The feature sensitivities follow
// the retain-material convention (positive where keeping material pays
// off), so they enter negated; the volume term lambda + mu max(0, g) is
// the penalty slope and pushes material out while the bound is violated.
inline ScalarField combined_sensitivity(const ScalarField& Ju_s, const ScalarField& Js_s,
                                        const ScalarField& Jp_s, double omega_s,
                                        double omega_p, double volume_term) {
    if (omega_s < 0 || omega_p < 0 || omega_s + omega_p >= 1.0)
        throw configuration_error("combined_sensitivity: invalid weights");
    if (Js_s.size() != Ju_s.size() || Jp_s.size() != Ju_s.size())
        throw std::logic_error("combined_sensitivity: sensitivity size mismatch");
    double wu = 1.0 - omega_s - omega_p;
    return (-(wu * Ju_s + omega_s * Js_s + omega_p * Jp_s)).array() + volume_term;
}

// Per-iteration snapshot passed to the observer callback.
struct IterationState {
    HistoryRow row;
    const LevelSetField* field = nullptr;
    const CharacteristicField* chi = nullptr;
    const VectorField* u = nullptr;
    const ScalarField* s = nullptr;
    const ScalarField* p = nullptr;
    const ScalarField* sensitivity = nullptr;
};

using IterationObserver = std::function<void(const IterationState&)>;

struct RunResult {
    LevelSetField field;
    History history;
};

inline RunResult run(const ProblemSpec& spec, const IterationObserver& observe = {}) {
    spec.validate();
    const Mesh& mesh = spec.mesh;
    P1Basis basis(mesh);
    double omega_s = spec.omega_s();
    double omega_p = spec.omega_p();

    LevelSetField field = initial_level_set(mesh, spec.levelset.delta, spec.levelset.tau,
                                            spec.levelset.k_coef, spec.levelset.dt);
    History history;
    Eigen::VectorXd mass = lumped_mass(mesh, basis);
    double total_area = mass.sum();

    double lambda = spec.auglag.lambda0;
    double mu = spec.auglag.mu0;
    double mu_max = 0.0;

    VectorField u_prev;
    std::deque<double> recent_J;
    double pen_ref = -1.0;

    for (int iter = 1; iter <= spec.max_iterations; ++iter) {
        CharacteristicField chi = characteristic(mesh, field);
        double vf = volume_fraction(chi, mesh, basis);

        VectorField u;
        try {
            u = solve_state(mesh, basis, chi, spec.material, spec.load, spec.solver_tol,
                            u_prev.size() ? &u_prev : nullptr);
        } catch (const solver_error& e) {
            throw solver_error("iteration " + std::to_string(iter) + ": " + e.what(),
                               e.residual);
        }
        u_prev = u;
        double Ju = eval_Ju(mesh, spec.load, u);
        ScalarField Ju_sens = sensitivity_Ju(mesh, basis, chi, u, spec.material);

        ScalarField zero = ScalarField::Zero(mesh.num_nodes());
        ScalarField Js_sens = zero, Jp_sens = zero;
        double Js = 0.0, Jp = 0.0;
        std::optional<FeatureResult> shield_res, pen_res;
        if (spec.shielding && omega_s > 0.0) {
            shield_res = evaluate_shielding(mesh, basis, chi, *spec.shielding,
                                            spec.shield_out, spec.shield_in);
            Js = shield_res->J;
            Js_sens = shield_res->sensitivity;
        }
        if (spec.penetrating && omega_p > 0.0) {
            pen_res = evaluate_penetrating(mesh, basis, chi, *spec.penetrating,
                                           spec.pen_out, spec.pen_in);
            Jp = pen_res->J;
            Jp_sens = pen_res->sensitivity;
        }

        // The objective terms live on wildly different scales (compliance
        // vs fictitious-field energies), so each sensitivity is normalized
        // to unit area-mean magnitude before weighting; this also makes the
        // update independent of the fictitious fields' scale.
        auto normalize = [&](ScalarField& f) {
            double m = mass.dot(f.cwiseAbs()) / total_area;
            if (m > 0.0) f /= m;
        };
        normalize(Ju_sens);
        normalize(Js_sens);
        // The penetrating term is scaled against the fully solid initial
        // design rather than per iteration: its gradient energy grows as the
        // blocking solid thins and collapses once a channel opens, and that
        // feedback is what drives and then releases the carving pressure.
        // Renormalizing every iteration would amplify the residual gradients
        // of an already penetrated design and erode it indefinitely.
        if (pen_ref < 0.0) {
            double m = mass.dot(Jp_sens.cwiseAbs()) / total_area;
            if (m > 0.0) pen_ref = m;
        }
        if (pen_ref > 0.0) Jp_sens /= pen_ref;

        double J = combined_objective(Ju, Js, Jp, omega_s, omega_p);
        if (!std::isfinite(J))
            throw divergence_error("run: non-finite objective at iteration " +
                                   std::to_string(iter));

        if (mu < 0.0) {
            double mean_abs = mass.dot(Ju_sens.cwiseAbs()) / total_area;
            mu = 10.0 * (mean_abs > 0 ? mean_abs : 1.0);
        }
        if (mu_max == 0.0) mu_max = spec.auglag.mu_max_factor * mu;

        HistoryRow row{iter, vf, Ju, Js, Jp, J, lambda, mu};
        history.push_back(row);

        // The volume bound is phased in over the opening iterations so the
        // design sheds material gradually instead of collapsing; the bound
        // reaches v_max well within the first half of the budget.
        int ramp = std::min(100, std::max(1, spec.max_iterations / 3));
        double v_target =
            1.0 + (spec.v_max - 1.0) * std::min(1.0, static_cast<double>(iter) / ramp);
        double g = vf - v_target;
        lambda = std::max(0.0, lambda + mu * g);
        // While the target is still descending the design trails it by a
        // small persistent gap; growing mu on that gap would ratchet the
        // multiplier, so the penalty only tightens once the bound is final.
        if (g > 0.01 && iter > ramp) mu = std::min(mu * spec.auglag.growth, mu_max);

        double volume_term = lambda + mu * std::max(0.0, g);
        ScalarField driver =
            combined_sensitivity(Ju_sens, Js_sens, Jp_sens, omega_s, omega_p, volume_term);
        field = update(field, driver, mesh, basis, spec.mold_boundary);

        if (observe) {
            IterationState st;
            st.row = row;
            st.field = &field;
            st.chi = &chi;
            st.u = &u;
            st.s = shield_res ? &shield_res->field : nullptr;
            st.p = pen_res ? &pen_res->field : nullptr;
            st.sensitivity = &driver;
            observe(st);
        }

        recent_J.push_back(J);
        if (recent_J.size() > 11) recent_J.pop_front();
        if (recent_J.size() == 11 && iter > ramp) {
            double ref = std::max(std::abs(recent_J.front()), 1e-300);
            if (std::abs(recent_J.back() - recent_J.front()) / ref < 1e-4 &&
                vf - spec.v_max <= 0.01)
                break;
        }
    }
    return {std::move(field), std::move(history)};
}

// True iff a path of void elements (chi below threshold) joins an element
// touching set_a to one touching set_b, walking across shared edges.
inline bool check_void_connectivity(const CharacteristicField& chi, const Mesh& mesh,
                                    const std::vector<int>& set_a,
                                    const std::vector<int>& set_b, double threshold = 0.5) {
    if (set_a.empty() || set_b.empty())
        throw std::invalid_argument("check_void_connectivity: empty node set");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("check_void_connectivity: threshold must be in (0,1)");

    int ne = mesh.num_elements();
    std::vector<char> in_a(mesh.num_nodes(), 0), in_b(mesh.num_nodes(), 0);
    for (int n : set_a) in_a.at(n) = 1;
    for (int n : set_b) in_b.at(n) = 1;

    std::map<std::pair<int, int>, int> edge_owner;
    std::vector<std::vector<int>> adj(ne);
    for (int e = 0; e < ne; ++e) {
        const auto& t = mesh.triangles[e];
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            auto key = std::minmax(a, b);
            auto [it, inserted] = edge_owner.insert({{key.first, key.second}, e});
            if (!inserted) {
                adj[e].push_back(it->second);
                adj[it->second].push_back(e);
            }
        }
    }

    auto is_void = [&](int e) { return chi.chi_elem[e] < threshold; };
    auto touches = [&](int e, const std::vector<char>& set) {
        const auto& t = mesh.triangles[e];
        return set[t[0]] || set[t[1]] || set[t[2]];
    };

    std::vector<char> visited(ne, 0);
    std::queue<int> q;
    for (int e = 0; e < ne; ++e)
        if (is_void(e) && touches(e, in_a)) {
            visited[e] = 1;
            q.push(e);
        }
    while (!q.empty()) {
        int e = q.front();
        q.pop();
        if (touches(e, in_b)) return true;
        for (int f : adj[e])
            if (!visited[f] && is_void(f)) {
                visited[f] = 1;
                q.push(f);
            }
    }
    return false;
}

enum class Axis { X, Y };

// Minimum solid run length over scan lines crossing the domain along
// `axis`. Lines that never meet solid are skipped; if no line meets solid
// the design has no wall to measure.
inline double wall_thickness(const CharacteristicField& chi, const Mesh& mesh, Axis axis,
                             double threshold = 0.5, int n_lines = 40, int n_steps = 800) {
    ElementLocator locator(mesh);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : mesh.nodes) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }

    double best = -1.0;
    for (int l = 0; l < n_lines; ++l) {
        double frac = (l + 0.5) / n_lines;
        Vec2 p0, p1;
        if (axis == Axis::X) {
            double y = ymin + frac * (ymax - ymin);
            p0 = {xmin, y};
            p1 = {xmax, y};
        } else {
            double x = xmin + frac * (xmax - xmin);
            p0 = {x, ymin};
            p1 = {x, ymax};
        }
        double len = norm(p1 - p0);
        double step = len / n_steps;
        double run = 0.0, line_min = -1.0;
        for (int k = 0; k <= n_steps; ++k) {
            Vec2 p = p0 + (static_cast<double>(k) / n_steps) * (p1 - p0);
            int e = locator.locate(p);
            bool solid = e >= 0 && chi.chi_elem[e] >= threshold;
            if (solid) {
                run += step;
            } else if (run > 0.0) {
                if (line_min < 0.0 || run < line_min) line_min = run;
                run = 0.0;
            }
        }
        if (run > 0.0 && (line_min < 0.0 || run < line_min)) line_min = run;
        if (line_min > 0.0 && (best < 0.0 || line_min < best)) best = line_min;
    }
    if (best < 0.0)
        throw measurement_error("wall_thickness: no solid crossing on any scan line");
    return best;
}

}  // namespace fictop
