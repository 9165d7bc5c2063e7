#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace phigeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 coordinate tensor (n x n x n).
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int n) : n_(n), data_(static_cast<size_t>(n) * n * n, 0.0) {}

    double& operator()(int i, int j, int k) { return data_[(static_cast<size_t>(i) * n_ + j) * n_ + k]; }
    double operator()(int i, int j, int k) const { return data_[(static_cast<size_t>(i) * n_ + j) * n_ + k]; }
    int dim() const { return n_; }

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// Dense rank-4 coordinate tensor (n x n x n x n).
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int n) : n_(n), data_(static_cast<size_t>(n) * n * n * n, 0.0) {}

    double& operator()(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    int dim() const { return n_; }

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// A point in one coordinate chart of a model.
struct ChartPoint {
    Vec coords;
    int chart_id = 0;
};

/// Metric with first and second coordinate partials at one point.
/// dg(k,i,j) = d_k g_ij, d2g(l,k,i,j) = d_l d_k g_ij.
struct MetricJet {
    Mat g;
    Tensor3 dg;
    Tensor4 d2g;
};

/// Everything curvature-related at one point, in chart components.
/// riemann(i,j,k,l) = <Rm(e_i,e_j)e_k, e_l> with
/// Rm(X,Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_[X,Y] Z.
struct CurvaturePack {
    Tensor3 christoffel;   // Gamma^k_ij stored as (k,i,j)
    Tensor4 riemann;       // fully covariant
    Mat ricci;             // Rc_ij
    double scalar = 0.0;   // R
    Vec grad_f;            // (nabla f)^i, index raised
    Mat hess_f;            // covariant Hessian of f
    Mat ricci_f;           // Rc + Hess f
    Vec grad_phi;
    Mat hess_phi;
    double lap_phi = 0.0;
    double f_lap_phi = 0.0;  // lap_phi - <grad_f, grad_phi>
    Vec grad_R;
    double ricci_norm2 = 0.0;  // |Rc|^2
};

/// g-orthonormal basis at a point.
struct Frame {
    std::vector<Vec> basis;
};

/// Path sampled at K+1 uniform parameter values on [0, s_bar].
struct DiscretePath {
    std::vector<Vec> samples;
    double s_bar = 0.0;
    int chart_id = 0;

    int segments() const { return static_cast<int>(samples.size()) - 1; }
    double ds() const { return s_bar / segments(); }
    ChartPoint point(int k) const { return ChartPoint{samples[static_cast<size_t>(k)], chart_id}; }
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace phigeo
