#pragma once

#include "phigeo/geometry.hpp"
#include "phigeo/models.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace phigeo {

/// Choice of the potential phi in J(gamma) = int(|gamma'|^2 + 2 phi) ds.
struct PhiSpec {
    enum class Kind { c_times_R, custom, signed_custom };
    Kind kind = Kind::c_times_R;
    double c = 0.25;    // for c_times_R
    std::string label;  // for custom / signed_custom

    static PhiSpec cR(double c) { return PhiSpec{Kind::c_times_R, c, {}}; }
    static PhiSpec custom(std::string label) { return PhiSpec{Kind::custom, 0.0, std::move(label)}; }
    static PhiSpec signed_custom(std::string label) {
        return PhiSpec{Kind::signed_custom, 0.0, std::move(label)};
    }
};

/// Resolve a PhiSpec against a model. The returned field aliases model
/// internals; keep the model alive. Positive-definiteness of custom fields is
/// the model's contract; signed_custom is only accepted by the IVP integrator.
std::shared_ptr<const ScalarField> make_phi(const ManifoldModel& model, const PhiSpec& spec);

enum class SolverKind : std::uint8_t { ivp, shooting, direct };

std::string to_string(SolverKind k);

struct GeodesicSolution {
    DiscretePath path;
    std::vector<Vec> velocities;  // S_k at each sample
    double J_value = 0.0;
    double C_estimate = 0.0;
    double C_drift = 0.0;
    SolverKind solver = SolverKind::direct;
    bool converged = false;
    double residual = 0.0;
};

struct VariationField {
    std::vector<Vec> vectors;  // U_k at each path sample
    bool vanishing = true;     // endpoints pinned to zero
};

/// Composite-trapezoid discretization of J: chord-squared kinetic term with
/// the metric at segment midpoints, trapezoid potential term.
double j_functional(const ManifoldModel& model, const ScalarField& phi, const DiscretePath& path);

/// Gradient of the discretized J with respect to the interior samples,
/// flattened as (K-1)*n reals.
Vec j_gradient(const ManifoldModel& model, const ScalarField& phi, const DiscretePath& path);

/// int <U, -nab_S S + grad phi> ds + <U,S>|_0^s_bar by discrete quadrature.
double first_variation(const ManifoldModel& model, const ScalarField& phi,
                       const DiscretePath& path, const VariationField& U);

/// RK4 on the phi-geodesic ODE nab_S S = grad phi from (x, v0).
GeodesicSolution integrate_phi_geodesic(const ManifoldModel& model, const ScalarField& phi,
                                        const ChartPoint& x, const Vec& v0, double s_bar,
                                        double step);

/// Newton shooting on the endpoint map of integrate_phi_geodesic.
GeodesicSolution shoot_bvp(const ManifoldModel& model, const ScalarField& phi,
                           const ChartPoint& x, const ChartPoint& y, double s_bar,
                           const Vec& guess, double tol, int max_iter = 60);

/// Direct minimization of the discretized J over interior samples:
/// metric-preconditioned L-BFGS with a coarse-to-fine refinement ladder and
/// deterministic multistart seeded from the straight chart segment.
GeodesicSolution minimize_j(const ManifoldModel& model, const ScalarField& phi,
                            const ChartPoint& x, const ChartPoint& y, double s_bar, int K,
                            int multistart = 1, std::uint64_t seed = 0,
                            double grad_tol = 1e-8,
                            const DiscretePath* warm_start = nullptr);

/// C = median over samples of |S_k|^2 - 2 phi, drift = max deviation.
std::pair<double, double> conserved_quantity(const ManifoldModel& model, const ScalarField& phi,
                                             const GeodesicSolution& sol);

/// Riemannian distance via minimize_j with phi == 0 on s_bar = 1
/// (d = sqrt(J)), with a unit-speed drift check.
double riemann_distance(const ManifoldModel& model, const ChartPoint& x, const ChartPoint& y,
                        int K = 256, std::uint64_t seed = 0);

struct GradientFlowReport {
    DiscretePath path;
    double max_residual = 0.0;  // max |nab_S S + (1/2) grad R|_g
    bool complete = true;       // false when the curve left the chart domain
};

/// Integrate gamma' = grad f and report how far the curve is from being a
/// (-R/2)-geodesic.
GradientFlowReport gradient_flow_check(const ManifoldModel& model, const ChartPoint& x,
                                       double s_bar, double step);

/// Fourth-order finite-difference velocities on a uniform path grid.
std::vector<Vec> reconstruct_velocities(const DiscretePath& path);

/// JSON round-trip of solutions:
/// {s_bar, K, samples, velocities, J, C, drift, solver, converged}.
std::string solution_to_json(const GeodesicSolution& sol);
GeodesicSolution solution_from_json(const std::string& text);

}  // namespace phigeo
