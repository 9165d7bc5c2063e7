#pragma once

#include "phigeo/variation.hpp"

namespace phigeo {

/// Value of rho(x, y, s_bar) = inf J over fixed-parameter paths, with the
/// minimizer kept for derivative checks.
struct RhoSample {
    ChartPoint x, y;
    double s_bar = 0.0;
    double rho = 0.0;
    GeodesicSolution minimizer;
    bool smooth_flag = false;
    double stencil_h = 0.0;
};

struct RhoOptions {
    int K = 128;
    int multistart = 4;
    std::uint64_t seed = 0;
    double grad_tol = 1e-8;
    /// Base stencil step; the actual step is stencil_h_scale * (1 + |y|).
    double stencil_h_scale = 1e-2;
    /// Step used for s_bar finite differences (no |y| scaling).
    double s_bar_h = 1e-4;
};

RhoSample rho(const ManifoldModel& model, const ScalarField& phi, const ChartPoint& x,
              const ChartPoint& y, double s_bar, const RhoOptions& opts = {});

/// Relative residual of grad_y rho = 2 gamma'(s_bar), with the gradient from
/// central differences (warm-started re-solves at the stencil points).
double grad_identity_check(const ManifoldModel& model, const ScalarField& phi,
                           const RhoSample& sample, double h, const RhoOptions& opts = {});

/// |d rho/d s_bar + (1/4)|grad rho|^2 - 2 phi(y)|.
double hj_residual(const ManifoldModel& model, const ScalarField& phi, const RhoSample& sample,
                   double h, const RhoOptions& opts = {});

/// (1/2) Delta_y rho <= n/s_bar + int (s^2/s_bar^2) lap_f phi ds
///   + <S, grad f>(s_bar) + (2/s_bar^2) int (f(gamma) - f(y)) ds.
InequalityLedger laplacian_comparison(const ManifoldModel& model, const ScalarField& phi,
                                      const RhoSample& sample, double h,
                                      const RhoOptions& opts = {});

struct KernelSample {
    double phi_kernel = 0.0;  // Phi = s_bar^{-n/2} exp(-rho/4)
    double lhs = 0.0;         // (d/ds_bar - (Delta_y)_f + phi/2) Phi
    double rhs = 0.0;
    double residual = 0.0;    // lhs - rhs, expected <= 0 up to tolerance
};

/// Kernel-type inequality for Phi, assembled by the chain rule from finite
/// differences of rho.
KernelSample phi_kernel_check(const ManifoldModel& model, const ScalarField& phi,
                              const RhoSample& sample, double h, const RhoOptions& opts = {});

std::string rho_csv_header(int n);
std::string rho_csv_row(const RhoSample& s, double grad_res, double hj_res, double lap_lhs,
                        double lap_rhs, double kernel_res);

}  // namespace phigeo
