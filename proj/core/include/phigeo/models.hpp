#pragma once

#include "phigeo/fields.hpp"
#include "phigeo/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace phigeo {

/// Coordinate-chart geometry provider for one manifold: metric jets, the
/// potential f and scalar curvature R, plus any named auxiliary fields.
class ManifoldModel {
public:
    virtual ~ManifoldModel() = default;

    virtual int dim() const = 0;
    virtual bool soliton() const = 0;
    virtual std::string name() const = 0;
    virtual bool in_domain(const ChartPoint& p) const = 0;
    virtual MetricJet metric_jet(const ChartPoint& p) const = 0;
    virtual const ScalarField& potential() const = 0;         // f
    virtual const ScalarField& scalar_curvature() const = 0;  // R

    /// Model-supplied named field (for custom phi choices); null if unknown.
    virtual const ScalarField* named_field(const std::string& label) const {
        (void)label;
        return nullptr;
    }

    /// True when metric jets come from closed forms rather than differencing.
    virtual bool analytic_jets() const { return true; }

    /// Residual tolerance the model is expected to meet in identity checks.
    virtual double tolerance() const { return analytic_jets() ? 1e-8 : 1e-5; }

    Mat metric(const ChartPoint& p) const { return metric_jet(p).g; }

    void require_in_domain(const ChartPoint& p) const {
        if (!in_domain(p)) throw DomainError(name() + ": point outside chart domain");
    }
};

struct EuclideanSpec {
    int n = 2;
    /// "const" with value c0 > 0, or "half_one_plus_x2" for (1+|x|^2)/2.
    std::string phi_label = "const";
    double c0 = 1.0;
};
struct CigarSpec {};
struct CigarProductSpec {
    int k = 1;  // number of flat factors
};
struct BryantSpec {
    int n = 3;
    double shoot_param = -0.2;
    double r_max = 60.0;
    double tol = 1e-8;
};

struct ModelSpec {
    std::variant<EuclideanSpec, CigarSpec, CigarProductSpec, BryantSpec> kind;
};

/// Rotationally symmetric steady-soliton profile from ODE shooting, sampled
/// on a uniform r-grid for cubic Hermite evaluation.
struct BryantProfile {
    int n = 3;
    std::vector<double> r_grid;  // uniform, r_grid.front() > 0
    std::vector<double> w, wp, fp;
    std::vector<double> f;  // f(r) with f(0) = 0, integrated alongside
    int interpolation_order = 3;
    double hamiltonian_constant = 0.0;  // R + |grad f|^2 before rescaling
    double scale = 0.0;                 // lambda applied to the metric
    // Taylor data at the origin: w = r + w3 r^3 + w5 r^5, f' = a r + b r^3
    double shoot_param = 0.0;  // a = f''(0)
    double w3 = 0.0, w5 = 0.0, fp3 = 0.0;
    double max_hamiltonian_drift = 0.0;
};

std::shared_ptr<ManifoldModel> build_model(const ModelSpec& spec);

/// Integrate the warped-product steady-soliton reduction from the smooth
/// origin, verify the first integral R + |grad f|^2 is r-independent, and
/// rescale so the constant becomes 1.
BryantProfile bryant_solve(int n, double shoot_param, double r_max, double tol);

std::shared_ptr<ManifoldModel> make_bryant_model(const BryantProfile& profile);

/// CSV cache for shooting runs: header `r,w,wp,fp`, 17 significant digits.
void save_bryant_profile(const BryantProfile& profile, const std::string& path);
BryantProfile load_bryant_profile(const std::string& path, int n, double shoot_param);

/// Closed-form helpers for the scaled cigar g = 4(dx^2+dy^2)/(1+x^2+y^2).
namespace cigar {
inline double scalar_curvature_at_r(double r) { return 1.0 / (1.0 + r * r); }
inline double distance_from_origin(double r) { return 2.0 * std::asinh(r); }
inline double radius_at_distance(double d) { return std::sinh(d / 2.0); }
/// |Rc| = R/sqrt(2) in 2-D with Rc = (R/2) g.
inline double ricci_norm_at_r(double r) { return scalar_curvature_at_r(r) / std::sqrt(2.0); }
}  // namespace cigar

}  // namespace phigeo
