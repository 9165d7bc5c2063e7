#include "phigeo/variation.hpp"

#include "phigeo/io.hpp"

#include <cmath>

namespace phigeo {

namespace {

double trapezoid_quadrature(const std::vector<double>& values, double ds) {
    double sum = 0.0;
    for (size_t k = 0; k + 1 < values.size(); ++k) sum += 0.5 * (values[k] + values[k + 1]) * ds;
    return sum;
}

}  // namespace

std::string TestFunction::kind_name() const {
    switch (kind) {
        case Kind::trapezoid: return "trapezoid";
        case Kind::linear_ramp: return "linear_ramp";
        case Kind::custom: return "custom";
    }
    return "?";
}

TestFunction TestFunction::trapezoid(double s_bar, int K) {
    if (!(s_bar > 2.0))
        throw UsageError("TestFunction::trapezoid: needs s_bar > 2 (nonempty plateau)");
    TestFunction z;
    z.kind = Kind::trapezoid;
    z.s_bar = s_bar;
    z.vanishing = true;
    z.values.resize(K + 1);
    z.derivatives.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
        const double s = s_bar * k / K;
        if (s < 1.0) {
            z.values[k] = s;
            z.derivatives[k] = 1.0;
        } else if (s > s_bar - 1.0) {
            z.values[k] = s_bar - s;
            z.derivatives[k] = -1.0;
        } else {
            z.values[k] = 1.0;
            z.derivatives[k] = 0.0;
        }
        if (s == 1.0) z.derivatives[k] = 0.5;
        if (s == s_bar - 1.0) z.derivatives[k] = -0.5;
    }
    return z;
}

TestFunction TestFunction::linear_ramp(double s_bar, int K) {
    TestFunction z;
    z.kind = Kind::linear_ramp;
    z.s_bar = s_bar;
    z.vanishing = false;  // zeta(s_bar) = 1
    z.values.resize(K + 1);
    z.derivatives.assign(K + 1, 1.0 / s_bar);
    for (int k = 0; k <= K; ++k) z.values[k] = static_cast<double>(k) / K;
    return z;
}

TestFunction TestFunction::custom(double s_bar, std::vector<double> values,
                                  std::vector<double> derivatives, bool vanishing) {
    if (values.size() != derivatives.size() || values.size() < 2)
        throw UsageError("TestFunction::custom: bad sample arrays");
    TestFunction z;
    z.kind = Kind::custom;
    z.s_bar = s_bar;
    z.values = std::move(values);
    z.derivatives = std::move(derivatives);
    z.vanishing = vanishing;
    return z;
}

double TestFunction::integral_dzeta_sq() const {
    if (kind == Kind::trapezoid) return 2.0;
    if (kind == Kind::linear_ramp) return 1.0 / s_bar;
    std::vector<double> sq(derivatives.size());
    for (size_t k = 0; k < sq.size(); ++k) sq[k] = derivatives[k] * derivatives[k];
    return trapezoid_quadrature(sq, s_bar / (static_cast<double>(sq.size()) - 1.0));
}

double TestFunction::integral_abs_zeta_dzeta() const {
    if (kind == Kind::trapezoid) return 1.0;
    if (kind == Kind::linear_ramp) return 0.5;
    std::vector<double> a(values.size());
    for (size_t k = 0; k < a.size(); ++k) a[k] = std::abs(values[k] * derivatives[k]);
    return trapezoid_quadrature(a, s_bar / (static_cast<double>(a.size()) - 1.0));
}

double index_form(const ManifoldModel& model, const ScalarField& phi, const GeodesicSolution& sol,
                  const VariationField& U) {
    if (!U.vanishing) throw UsageError("index_form: variation field must vanish at endpoints");
    const int K = sol.path.segments();
    const int n = model.dim();
    if (static_cast<int>(U.vectors.size()) != K + 1)
        throw UsageError("index_form: variation field size mismatch");

    const auto frame = parallel_frame(model, sol.path);

    // frame coefficients of U; nab_S U in a parallel frame is the plain
    // parameter derivative of the coefficients
    DiscretePath coeffs;
    coeffs.s_bar = sol.path.s_bar;
    coeffs.samples.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
        const Mat g = model.metric(sol.path.point(k));
        Vec u(n);
        for (int i = 0; i < n; ++i) u[i] = U.vectors[k].dot(g * frame[k][i]);
        coeffs.samples[k] = u;
    }
    const std::vector<Vec> dcoeffs = reconstruct_velocities(coeffs);

    std::vector<double> integrand(K + 1);
    for (int k = 0; k <= K; ++k) {
        const CurvaturePack pack = curvature_pack(model, sol.path.point(k), &phi);
        const Vec& S = sol.velocities[k];
        const Vec& Uk = U.vectors[k];
        double rm = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        rm += pack.riemann(i, j, a, b) * S[i] * Uk[j] * Uk[a] * S[b];
        integrand[k] = dcoeffs[k].squaredNorm() - rm + Uk.dot(pack.hess_phi * Uk);
    }
    return trapezoid_quadrature(integrand, sol.path.ds());
}

double second_variation_fd(const ManifoldModel& model, const ScalarField& phi,
                           const GeodesicSolution& sol, const VariationField& U, double h) {
    const int K = sol.path.segments();
    if (static_cast<int>(U.vectors.size()) != K + 1)
        throw UsageError("second_variation_fd: variation field size mismatch");
    const ConstantField zero(0.0);

    auto perturbed = [&](double u) {
        DiscretePath path = sol.path;
        for (int k = 0; k <= K; ++k) {
            if (U.vectors[k].norm() == 0.0) continue;
            const GeodesicSolution hop = integrate_phi_geodesic(
                model, zero, sol.path.point(k), (u >= 0 ? 1.0 : -1.0) * U.vectors[k],
                std::abs(u), std::abs(u) / 4.0);
            if (!hop.converged)
                throw DomainError("second_variation_fd: perturbed sample left the chart domain");
            path.samples[k] = hop.path.samples.back();
        }
        return path;
    };

    const double J0 = j_functional(model, phi, sol.path);
    const double Jp = j_functional(model, phi, perturbed(h));
    const double Jm = j_functional(model, phi, perturbed(-h));
    return 0.5 * (Jp - 2.0 * J0 + Jm) / (h * h);
}

namespace {

void fill_ledger_meta(InequalityLedger& ledger, const ManifoldModel& model,
                      const GeodesicSolution& sol, const TestFunction& zeta, double c) {
    ledger.model = model.name();
    ledger.c = c;
    ledger.n = model.dim();
    ledger.s_bar = sol.path.s_bar;
    ledger.C = sol.C_estimate;
    ledger.zeta = zeta.kind_name();
}

void require_usable(const GeodesicSolution& sol, const TestFunction& zeta) {
    if (!zeta.vanishing)
        throw UsageError("inequality check: zeta must vanish at the endpoints");
    if (static_cast<int>(zeta.values.size()) != sol.path.segments() + 1)
        throw UsageError("inequality check: zeta sampled on a different grid");
}

}  // namespace

InequalityLedger trace_index_inequality(const ManifoldModel& model, const ScalarField& phi,
                                        const GeodesicSolution& sol, const TestFunction& zeta) {
    require_usable(sol, zeta);
    const int K = sol.path.segments();
    std::vector<double> rc_term(K + 1), lap_term(K + 1);
    for (int k = 0; k <= K; ++k) {
        const CurvaturePack pack = curvature_pack(model, sol.path.point(k), &phi);
        const double z2 = zeta.values[k] * zeta.values[k];
        rc_term[k] = z2 * sol.velocities[k].dot(pack.ricci * sol.velocities[k]);
        lap_term[k] = z2 * pack.lap_phi;
    }
    const double ds = sol.path.ds();
    InequalityLedger ledger;
    ledger.lhs = trapezoid_quadrature(rc_term, ds) - trapezoid_quadrature(lap_term, ds);
    ledger.rhs = model.dim() * zeta.integral_dzeta_sq();
    fill_ledger_meta(ledger, model, sol, zeta, 0.0);
    ledger.finish();
    return ledger;
}

InequalityLedger inequality_exeter(const ManifoldModel& model, const ScalarField& phi,
                                   const GeodesicSolution& sol, const TestFunction& zeta) {
    require_usable(sol, zeta);
    const int K = sol.path.segments();
    std::vector<double> lhs_term(K + 1), cross_term(K + 1);
    for (int k = 0; k <= K; ++k) {
        const ChartPoint p = sol.path.point(k);
        const CurvaturePack pack = curvature_pack(model, p, &phi);
        const Mat g = model.metric(p);
        const Vec& S = sol.velocities[k];
        const double z = zeta.values[k];
        const double zp = zeta.derivatives[k];
        lhs_term[k] = z * z * (-pack.f_lap_phi + S.dot(pack.ricci_f * S));
        cross_term[k] = 2.0 * z * zp * pack.grad_f.dot(g * S);
    }
    const double ds = sol.path.ds();
    InequalityLedger ledger;
    ledger.lhs = trapezoid_quadrature(lhs_term, ds);
    ledger.rhs = model.dim() * zeta.integral_dzeta_sq() - trapezoid_quadrature(cross_term, ds);
    fill_ledger_meta(ledger, model, sol, zeta, 0.0);
    ledger.finish();
    return ledger;
}

InequalityLedger inequality_369894(const ManifoldModel& model, const GeodesicSolution& sol,
                                   const TestFunction& zeta, double c) {
    require_usable(sol, zeta);
    const double C = sol.C_estimate;
    if (C + 2.0 * c < 0.0)
        throw DataError("inequality_369894: C + 2c < 0 signals a failed solve");
    const int K = sol.path.segments();
    std::vector<double> lhs_term(K + 1);
    for (int k = 0; k <= K; ++k) {
        const CurvaturePack pack = curvature_pack(model, sol.path.point(k));
        const double z = zeta.values[k];
        lhs_term[k] = z * z * pack.ricci_norm2;
    }
    InequalityLedger ledger;
    ledger.lhs = trapezoid_quadrature(lhs_term, sol.path.ds());
    ledger.rhs = model.dim() / (2.0 * c) * zeta.integral_dzeta_sq() +
                 std::sqrt(C + 2.0 * c) / c * zeta.integral_abs_zeta_dzeta();
    fill_ledger_meta(ledger, model, sol, zeta, c);
    ledger.finish();
    return ledger;
}

GradRLedger gradR_variant(const ManifoldModel& model, const GeodesicSolution& sol,
                          const TestFunction& zeta, double c) {
    require_usable(sol, zeta);
    const double C = sol.C_estimate;
    if (C + 2.0 * c < 0.0) throw DataError("gradR_variant: C + 2c < 0 signals a failed solve");
    const int K = sol.path.segments();
    std::vector<double> lhs_term(K + 1);
    GradRLedger out;
    for (int k = 0; k <= K; ++k) {
        const ChartPoint p = sol.path.point(k);
        const MetricJet jet = model.metric_jet(p);
        const CurvaturePack pack = curvature_pack(model, p);
        const double z = zeta.values[k];
        const double gradR = norm(jet.g, pack.grad_R);
        lhs_term[k] = 0.25 * z * z * gradR * gradR;
        out.max_pointwise_residual =
            std::max(out.max_pointwise_residual,
                     std::abs(gradR - 2.0 * ricci_of_gradf_norm(jet, pack)));
    }
    out.ledger.lhs = trapezoid_quadrature(lhs_term, sol.path.ds());
    out.ledger.rhs = model.dim() / (2.0 * c) * zeta.integral_dzeta_sq() +
                     std::sqrt(C + 2.0 * c) / c * zeta.integral_abs_zeta_dzeta();
    fill_ledger_meta(out.ledger, model, sol, zeta, c);
    out.ledger.finish();
    return out;
}

std::string ledger_csv_header() { return "model,c,n,s_bar,C,zeta,lhs,rhs,slack,holds"; }

std::string ledger_csv_row(const InequalityLedger& ledger) {
    return join_csv({ledger.model, format_double(ledger.c), std::to_string(ledger.n),
                     format_double(ledger.s_bar), format_double(ledger.C), ledger.zeta,
                     format_double(ledger.lhs), format_double(ledger.rhs),
                     format_double(ledger.slack), ledger.holds ? "1" : "0"});
}

}  // namespace phigeo
