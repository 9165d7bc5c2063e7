#pragma once

#include "phigeo/fields.hpp"
#include "phigeo/models.hpp"
#include "phigeo/types.hpp"

#include <vector>

namespace phigeo {

/// All curvature data at p. When phi is given, the phi-dependent fields are
/// populated; otherwise they are zero.
CurvaturePack curvature_pack(const ManifoldModel& model, const ChartPoint& p,
                             const ScalarField* phi = nullptr);

/// Christoffel symbols alone (cheaper than the full pack).
Tensor3 christoffel(const MetricJet& jet);

/// Covariant Hessian of a scalar field: d_i d_j u - Gamma^k_ij d_k u.
Mat covariant_hessian(const ManifoldModel& model, const ScalarField& u, const ChartPoint& p);

/// g-inner product of chart vectors at p.
double inner(const Mat& g, const Vec& a, const Vec& b);
double norm(const Mat& g, const Vec& a);

/// Transport v0 (one vector per entry) along the path by RK4 on
/// nabla_S v = 0, one step per segment, Catmull-Rom path interpolation.
/// Returns transported vectors at every sample; result[k][m] is vector m at
/// sample k. No re-orthonormalization is applied.
std::vector<std::vector<Vec>> parallel_transport(const ManifoldModel& model,
                                                 const DiscretePath& path,
                                                 const std::vector<Vec>& v0);

/// Gram-Schmidt a g-orthonormal frame from the chart basis at p.
Frame orthonormal_frame(const ManifoldModel& model, const ChartPoint& p);

/// Orthonormal frame at path start, parallel-transported along the path.
std::vector<std::vector<Vec>> parallel_frame(const ManifoldModel& model, const DiscretePath& path);

struct IdentityReport {
    double max_ricci_f = 0.0;         // max ||Rc_f||
    double max_hamiltonian = 0.0;     // max |R + |grad f|^2 - 1|
    double max_lap_identity = 0.0;    // max |-Delta_f R - 2|Rc|^2|
    double max_gradR_identity = 0.0;  // max ||grad R| - 2|Rc(grad f)||
    bool positive_R = true;           // R > 0 everywhere on the grid
    bool gradf_bounded = true;        // |grad f| <= 1 everywhere on the grid
    int points = 0;

    double worst() const {
        return std::max(std::max(max_ricci_f, max_hamiltonian),
                        std::max(max_lap_identity, max_gradR_identity));
    }
};

/// Per-point residuals of the steady-soliton identities over a grid.
/// Non-soliton models are rejected unless allow_non_soliton is set, in which
/// case the report simply records the failures (diagnostic mode).
IdentityReport check_soliton_identities(const ManifoldModel& model,
                                        const std::vector<ChartPoint>& grid,
                                        bool allow_non_soliton = false);

/// |Rc(grad f)|: the g-norm of the Ricci contraction with grad f.
double ricci_of_gradf_norm(const MetricJet& jet, const CurvaturePack& pack);

}  // namespace phigeo
