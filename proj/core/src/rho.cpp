#include "phigeo/rho.hpp"

#include "phigeo/geometry.hpp"
#include "phigeo/io.hpp"

#include <cmath>

namespace phigeo {

namespace {

/// Warm-start seed for a stencil re-solve: the stored minimizer with the
/// endpoint displacement blended in linearly along the parameter.
DiscretePath warp_to(const DiscretePath& base, const Vec& y_new, double s_bar_new) {
    DiscretePath out = base;
    out.s_bar = s_bar_new;
    const Vec dy = y_new - base.samples.back();
    const int K = base.segments();
    for (int k = 1; k <= K; ++k) out.samples[k] += (static_cast<double>(k) / K) * dy;
    return out;
}

GeodesicSolution stencil_solve(const ManifoldModel& model, const ScalarField& phi,
                               const RhoSample& sample, const Vec& y_new, double s_bar_new,
                               const RhoOptions& opts) {
    const DiscretePath warm = warp_to(sample.minimizer.path, y_new, s_bar_new);
    GeodesicSolution sol = minimize_j(model, phi, sample.x, ChartPoint{y_new, sample.y.chart_id},
                                      s_bar_new, opts.K, 1, opts.seed, opts.grad_tol, &warm);
    if (!sol.converged)
        throw SolverError("rho: stencil re-solve did not converge at s_bar = " +
                          format_double(s_bar_new));
    return sol;
}

double stencil_value(const ManifoldModel& model, const ScalarField& phi, const RhoSample& sample,
                     const Vec& y_new, double s_bar_new, const RhoOptions& opts) {
    return stencil_solve(model, phi, sample, y_new, s_bar_new, opts).J_value;
}

/// Central-difference chart partials of rho in y at literal step h.
Vec rho_partials(const ManifoldModel& model, const ScalarField& phi, const RhoSample& sample,
                 double h, const RhoOptions& opts) {
    const int n = model.dim();
    Vec d(n);
    for (int i = 0; i < n; ++i) {
        Vec yp = sample.y.coords, ym = sample.y.coords;
        yp[i] += h;
        ym[i] -= h;
        d[i] = (stencil_value(model, phi, sample, yp, sample.s_bar, opts) -
                stencil_value(model, phi, sample, ym, sample.s_bar, opts)) /
               (2.0 * h);
    }
    return d;
}

/// Second chart partials of rho in y (diagonal 3-point, mixed 4-point).
Mat rho_second_partials(const ManifoldModel& model, const ScalarField& phi,
                        const RhoSample& sample, double h, const RhoOptions& opts) {
    const int n = model.dim();
    const double rho0 = sample.rho;
    Mat H(n, n);
    for (int i = 0; i < n; ++i) {
        Vec yp = sample.y.coords, ym = sample.y.coords;
        yp[i] += h;
        ym[i] -= h;
        H(i, i) = (stencil_value(model, phi, sample, yp, sample.s_bar, opts) - 2.0 * rho0 +
                   stencil_value(model, phi, sample, ym, sample.s_bar, opts)) /
                  (h * h);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Vec ypp = sample.y.coords, ypm = sample.y.coords;
            Vec ymp = sample.y.coords, ymm = sample.y.coords;
            ypp[i] += h; ypp[j] += h;
            ypm[i] += h; ypm[j] -= h;
            ymp[i] -= h; ymp[j] += h;
            ymm[i] -= h; ymm[j] -= h;
            H(i, j) = (stencil_value(model, phi, sample, ypp, sample.s_bar, opts) -
                       stencil_value(model, phi, sample, ypm, sample.s_bar, opts) -
                       stencil_value(model, phi, sample, ymp, sample.s_bar, opts) +
                       stencil_value(model, phi, sample, ymm, sample.s_bar, opts)) /
                      (4.0 * h * h);
            H(j, i) = H(i, j);
        }
    }
    return H;
}

double rho_s_bar_derivative(const ManifoldModel& model, const ScalarField& phi,
                            const RhoSample& sample, double h, const RhoOptions& opts) {
    return (stencil_value(model, phi, sample, sample.y.coords, sample.s_bar + h, opts) -
            stencil_value(model, phi, sample, sample.y.coords, sample.s_bar - h, opts)) /
           (2.0 * h);
}

}  // namespace

RhoSample rho(const ManifoldModel& model, const ScalarField& phi, const ChartPoint& x,
              const ChartPoint& y, double s_bar, const RhoOptions& opts) {
    if (opts.multistart < 4) throw UsageError("rho: multistart must be >= 4");
    RhoSample sample;
    sample.x = x;
    sample.y = y;
    sample.s_bar = s_bar;
    sample.minimizer =
        minimize_j(model, phi, x, y, s_bar, opts.K, opts.multistart, opts.seed, opts.grad_tol);
    sample.rho = sample.minimizer.J_value;
    sample.stencil_h = opts.stencil_h_scale * (1.0 + y.coords.norm());

    // smoothness diagnostic: every stencil re-solve converges to the same
    // homotopy branch (no O(1) jump in J) and the FD gradient is stable
    // under halving the step
    const int n = model.dim();
    const double h = sample.stencil_h;
    sample.smooth_flag = true;
    try {
        double max_jump = 0.0;
        Vec grad_h(n), grad_h2(n);
        for (int i = 0; i < n; ++i) {
            double vals[4];
            const double steps[2] = {h, 0.5 * h};
            for (int s = 0; s < 2; ++s) {
                Vec yp = y.coords, ym = y.coords;
                yp[i] += steps[s];
                ym[i] -= steps[s];
                vals[2 * s] = stencil_value(model, phi, sample, yp, s_bar, opts);
                vals[2 * s + 1] = stencil_value(model, phi, sample, ym, s_bar, opts);
            }
            for (double v : vals) max_jump = std::max(max_jump, std::abs(v - sample.rho));
            grad_h[i] = (vals[0] - vals[1]) / (2.0 * h);
            grad_h2[i] = (vals[2] - vals[3]) / h;
        }
        for (double ds : {opts.s_bar_h, -opts.s_bar_h}) {
            const double v = stencil_value(model, phi, sample, y.coords, s_bar + ds, opts);
            max_jump = std::max(max_jump, std::abs(v - sample.rho));
        }
        const bool same_branch = max_jump < 0.1 * std::max(1.0, std::abs(sample.rho));
        const bool grad_stable =
            (grad_h - grad_h2).norm() <= 0.05 * grad_h2.norm() + 1e-10;
        sample.smooth_flag = same_branch && grad_stable;
    } catch (const SolverError&) {
        sample.smooth_flag = false;
    }
    return sample;
}

double grad_identity_check(const ManifoldModel& model, const ScalarField& phi,
                           const RhoSample& sample, double h, const RhoOptions& opts) {
    const Vec d = rho_partials(model, phi, sample, h, opts);
    const Mat g = model.metric(sample.y);
    const Vec grad = g.llt().solve(d);
    const Vec two_s = 2.0 * sample.minimizer.velocities.back();
    const Vec diff = grad - two_s;
    const double denom = std::sqrt(std::max(0.0, two_s.dot(Vec(g * two_s))));
    return std::sqrt(std::max(0.0, diff.dot(Vec(g * diff)))) / std::max(denom, 1e-12);
}

double hj_residual(const ManifoldModel& model, const ScalarField& phi, const RhoSample& sample,
                   double h, const RhoOptions& opts) {
    const double drho_ds = rho_s_bar_derivative(model, phi, sample, opts.s_bar_h, opts);
    const Vec d = rho_partials(model, phi, sample, h, opts);
    const Mat g = model.metric(sample.y);
    const double grad_sq = d.dot(Vec(g.llt().solve(d)));
    return std::abs(drho_ds + 0.25 * grad_sq - 2.0 * phi.value(sample.y));
}

InequalityLedger laplacian_comparison(const ManifoldModel& model, const ScalarField& phi,
                                      const RhoSample& sample, double h, const RhoOptions& opts) {
    const int n = model.dim();
    const MetricJet jet = model.metric_jet(sample.y);
    const Mat ginv = jet.g.llt().solve(Mat::Identity(n, n));
    const Tensor3 gamma = christoffel(jet);

    const Vec d = rho_partials(model, phi, sample, h, opts);
    const Mat H = rho_second_partials(model, phi, sample, h, opts);
    double lap = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double hij = H(i, j);
            for (int k = 0; k < n; ++k) hij -= gamma(k, i, j) * d[k];
            lap += ginv(i, j) * hij;
        }

    const DiscretePath& path = sample.minimizer.path;
    const int K = path.segments();
    const double ds = path.ds();
    const double f_y = model.potential().value(sample.y);
    double int_lap_f_phi = 0.0;
    double int_f_gap = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double w = (k == 0 || k == K) ? 0.5 : 1.0;
        const double s = sample.s_bar * k / K;
        const CurvaturePack pack = curvature_pack(model, path.point(k), &phi);
        int_lap_f_phi += w * (s * s / (sample.s_bar * sample.s_bar)) * pack.f_lap_phi * ds;
        int_f_gap += w * (model.potential().value(path.point(k)) - f_y) * ds;
    }
    const CurvaturePack end_pack = curvature_pack(model, sample.y);
    const Vec S_end = sample.minimizer.velocities.back();
    const double s_dot_gradf = S_end.dot(Vec(jet.g * end_pack.grad_f));

    InequalityLedger ledger;
    ledger.lhs = 0.5 * lap;
    ledger.rhs = n / sample.s_bar + int_lap_f_phi + s_dot_gradf +
                 2.0 / (sample.s_bar * sample.s_bar) * int_f_gap;
    ledger.model = model.name();
    ledger.n = n;
    ledger.s_bar = sample.s_bar;
    ledger.C = sample.minimizer.C_estimate;
    ledger.zeta = "none";
    ledger.finish();
    return ledger;
}

KernelSample phi_kernel_check(const ManifoldModel& model, const ScalarField& phi,
                              const RhoSample& sample, double h, const RhoOptions& opts) {
    const int n = model.dim();
    const double s_bar = sample.s_bar;
    const MetricJet jet = model.metric_jet(sample.y);
    const Mat ginv = jet.g.llt().solve(Mat::Identity(n, n));
    const Tensor3 gamma = christoffel(jet);
    const CurvaturePack pack = curvature_pack(model, sample.y, &phi);

    KernelSample out;
    out.phi_kernel = std::pow(s_bar, -0.5 * n) * std::exp(-0.25 * sample.rho);

    // d/ds_bar, grad, Laplacian of Phi by the chain rule from FD of rho
    const double drho_ds = rho_s_bar_derivative(model, phi, sample, opts.s_bar_h, opts);
    const Vec d = rho_partials(model, phi, sample, h, opts);
    const Mat H = rho_second_partials(model, phi, sample, h, opts);
    double lap_rho = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double hij = H(i, j);
            for (int k = 0; k < n; ++k) hij -= gamma(k, i, j) * d[k];
            lap_rho += ginv(i, j) * hij;
        }
    const double grad_rho_sq = d.dot(Vec(ginv * d));
    const Vec df = jet.g * pack.grad_f;  // lowered
    const double gradf_dot_gradrho = df.dot(Vec(ginv * d));

    const double ds_phi = out.phi_kernel * (-0.5 * n / s_bar - 0.25 * drho_ds);
    const double lap_f_phi_kernel =
        out.phi_kernel *
        (-0.25 * lap_rho + grad_rho_sq / 16.0 + 0.25 * gradf_dot_gradrho);
    out.lhs = ds_phi - lap_f_phi_kernel + 0.5 * phi.value(sample.y) * out.phi_kernel;

    // rhs from integrals along the stored minimizer
    const DiscretePath& path = sample.minimizer.path;
    const int K = path.segments();
    const double ds = path.ds();
    const double f_y = model.potential().value(sample.y);
    double int_lap_f_phi = 0.0;
    double int_f_gap = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double w = (k == 0 || k == K) ? 0.5 : 1.0;
        const double s = s_bar * k / K;
        const CurvaturePack node = curvature_pack(model, path.point(k), &phi);
        int_lap_f_phi += w * (s * s / (s_bar * s_bar)) * node.f_lap_phi * ds;
        int_f_gap += w * (model.potential().value(path.point(k)) - f_y) * ds;
    }
    out.rhs = 0.5 * out.phi_kernel * (int_lap_f_phi + 2.0 / (s_bar * s_bar) * int_f_gap);
    out.residual = out.lhs - out.rhs;
    return out;
}

std::string rho_csv_header(int n) {
    std::vector<std::string> cols;
    for (int i = 1; i <= n; ++i) cols.push_back("y" + std::to_string(i));
    for (const char* c : {"s_bar", "rho", "smooth", "grad_res", "hj_res", "lap_lhs", "lap_rhs",
                          "kernel_res"})
        cols.push_back(c);
    return join_csv(cols);
}

std::string rho_csv_row(const RhoSample& s, double grad_res, double hj_res, double lap_lhs,
                        double lap_rhs, double kernel_res) {
    std::vector<std::string> cols;
    for (int i = 0; i < s.y.coords.size(); ++i) cols.push_back(format_double(s.y.coords[i]));
    cols.push_back(format_double(s.s_bar));
    cols.push_back(format_double(s.rho));
    cols.push_back(s.smooth_flag ? "1" : "0");
    cols.push_back(format_double(grad_res));
    cols.push_back(format_double(hj_res));
    cols.push_back(format_double(lap_lhs));
    cols.push_back(format_double(lap_rhs));
    cols.push_back(format_double(kernel_res));
    return join_csv(cols);
}

}  // namespace phigeo
