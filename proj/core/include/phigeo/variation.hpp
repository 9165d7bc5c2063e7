#pragma once

#include "phigeo/geodesic.hpp"

#include <string>

namespace phigeo {

/// Cutoff zeta on [0, s_bar] with values and derivatives on the path grid.
struct TestFunction {
    enum class Kind { trapezoid, linear_ramp, custom };
    Kind kind = Kind::trapezoid;
    double s_bar = 0.0;
    std::vector<double> values;
    std::vector<double> derivatives;
    bool vanishing = true;  // zeta(0) = zeta(s_bar) = 0

    std::string kind_name() const;

    /// zeta = s on [0,1], 1 on [1, s_bar-1], s_bar - s on [s_bar-1, s_bar].
    /// Requires s_bar > 2 so the plateau is nonempty.
    static TestFunction trapezoid(double s_bar, int K);
    /// zeta = s / s_bar; does not vanish at s_bar (vanishing = false).
    static TestFunction linear_ramp(double s_bar, int K);
    static TestFunction custom(double s_bar, std::vector<double> values,
                               std::vector<double> derivatives, bool vanishing);

    /// int (zeta')^2 ds: exact for trapezoid (= 2) and ramp (= 1/s_bar),
    /// composite trapezoid otherwise.
    double integral_dzeta_sq() const;
    /// int |zeta zeta'| ds: exact for trapezoid (= 1) and ramp (= 1/2).
    double integral_abs_zeta_dzeta() const;
};

/// Two sides of one displayed inequality, with slack = rhs - lhs.
struct InequalityLedger {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    // inputs echo
    std::string model;
    double c = 0.0;
    int n = 0;
    double s_bar = 0.0;
    double C = 0.0;
    std::string zeta;
    bool holds = false;

    static constexpr double tolerance = 1e-8;

    void finish() {
        slack = rhs - lhs;
        holds = slack >= -tolerance;
    }
};

/// Second variation along a converged solution:
/// int(|nab_S U|^2 - <Rm(S,U)U,S> + Hess phi(U,U)) ds.
double index_form(const ManifoldModel& model, const ScalarField& phi, const GeodesicSolution& sol,
                  const VariationField& U);

/// Independent oracle: central second difference of J/2 over the family of
/// paths exponentially perturbed along U.
double second_variation_fd(const ManifoldModel& model, const ScalarField& phi,
                           const GeodesicSolution& sol, const VariationField& U, double h);

/// 0 <= int(n (zeta')^2 + zeta^2 lap phi - zeta^2 Rc(S,S)) ds on minimizers.
InequalityLedger trace_index_inequality(const ManifoldModel& model, const ScalarField& phi,
                                        const GeodesicSolution& sol, const TestFunction& zeta);

/// -int zeta^2 lap_f phi + int zeta^2 Rc_f(S,S)
///   <= int(n (zeta')^2 - 2 zeta zeta' <grad f, S>).
InequalityLedger inequality_exeter(const ManifoldModel& model, const ScalarField& phi,
                                   const GeodesicSolution& sol, const TestFunction& zeta);

/// int zeta^2 |Rc|^2 <= (n/2c) int (zeta')^2 + (sqrt(C+2c)/c) int |zeta zeta'|.
InequalityLedger inequality_369894(const ManifoldModel& model, const GeodesicSolution& sol,
                                   const TestFunction& zeta, double c);

struct GradRLedger {
    InequalityLedger ledger;
    double max_pointwise_residual = 0.0;  // max ||grad R| - 2|Rc(grad f)||
};

/// Same bound for (1/4) int zeta^2 |grad R|^2, plus the pointwise
/// |grad R| = 2|Rc(grad f)| residual along the path.
GradRLedger gradR_variant(const ManifoldModel& model, const GeodesicSolution& sol,
                          const TestFunction& zeta, double c);

/// CSV row `model,c,n,s_bar,C,zeta,lhs,rhs,slack,holds`.
std::string ledger_csv_header();
std::string ledger_csv_row(const InequalityLedger& ledger);

}  // namespace phigeo
