#include "phigeo/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace phigeo {

namespace {

Mat inverse_metric(const Mat& g, const std::string& where) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw GeometryError(where + ": metric not positive definite");
    return g.inverse();
}

/// d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
Tensor3 inverse_metric_partials(const Mat& ginv, const Tensor3& dg) {
    const int n = ginv.rows();
    Tensor3 dginv(n);
    for (int m = 0; m < n; ++m) {
        Mat dgm(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) dgm(a, b) = dg(m, a, b);
        Mat out = -ginv * dgm * ginv;
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) dginv(m, k, l) = out(k, l);
    }
    return dginv;
}

}  // namespace

double inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

double norm(const Mat& g, const Vec& a) { return std::sqrt(std::max(0.0, inner(g, a, a))); }

Tensor3 christoffel(const MetricJet& jet) {
    const int n = jet.g.rows();
    const Mat ginv = inverse_metric(jet.g, "christoffel");
    Tensor3 gamma(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double sum = 0.0;
                for (int l = 0; l < n; ++l)
                    sum += ginv(k, l) * (jet.dg(i, j, l) + jet.dg(j, i, l) - jet.dg(l, i, j));
                gamma(k, i, j) = 0.5 * sum;
                gamma(k, j, i) = gamma(k, i, j);
            }
    return gamma;
}

Mat covariant_hessian(const ManifoldModel& model, const ScalarField& u, const ChartPoint& p) {
    model.require_in_domain(p);
    const MetricJet jet = model.metric_jet(p);
    const Tensor3 gamma = christoffel(jet);
    const Vec du = u.partials(p);
    Mat hess = u.second_partials(p);
    const int n = jet.g.rows();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) hess(i, j) -= gamma(k, i, j) * du[k];
    return hess;
}

CurvaturePack curvature_pack(const ManifoldModel& model, const ChartPoint& p,
                             const ScalarField* phi) {
    model.require_in_domain(p);
    const MetricJet jet = model.metric_jet(p);
    const int n = jet.g.rows();
    const Mat ginv = inverse_metric(jet.g, model.name());
    const Tensor3 gamma = christoffel(jet);
    const Tensor3 dginv = inverse_metric_partials(ginv, jet.dg);

    // d_m Gamma^k_ij from (g, dg, d2g)
    Tensor4 dgamma(n);
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double sum = 0.0;
                    for (int l = 0; l < n; ++l) {
                        sum += dginv(m, k, l) * (jet.dg(i, j, l) + jet.dg(j, i, l) - jet.dg(l, i, j));
                        sum += ginv(k, l) * (jet.d2g(m, i, j, l) + jet.d2g(m, j, i, l) -
                                             jet.d2g(m, l, i, j));
                    }
                    dgamma(m, k, i, j) = 0.5 * sum;
                    dgamma(m, k, j, i) = dgamma(m, k, i, j);
                }

    CurvaturePack pack;
    pack.christoffel = gamma;

    // R^m_ijk = d_i Gamma^m_jk - d_j Gamma^m_ik
    //           + Gamma^a_jk Gamma^m_ia - Gamma^a_ik Gamma^m_ja
    Tensor4 riem_up(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) {
                    double v = dgamma(i, m, j, k) - dgamma(j, m, i, k);
                    for (int a = 0; a < n; ++a)
                        v += gamma(a, j, k) * gamma(m, i, a) - gamma(a, i, k) * gamma(m, j, a);
                    riem_up(i, j, k, m) = v;
                }

    pack.riemann = Tensor4(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double v = 0.0;
                    for (int m = 0; m < n; ++m) v += jet.g(l, m) * riem_up(i, j, k, m);
                    pack.riemann(i, j, k, l) = v;
                }

    pack.ricci = Mat(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double v = 0.0;
            for (int i = 0; i < n; ++i)
                for (int l = 0; l < n; ++l) v += ginv(i, l) * pack.riemann(i, j, k, l);
            pack.ricci(j, k) = v;
        }
    pack.scalar = (ginv * pack.ricci).trace();

    const Mat ricci_up = ginv * pack.ricci * ginv;  // both indices raised
    pack.ricci_norm2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pack.ricci_norm2 += ricci_up(i, j) * pack.ricci(i, j);

    const ScalarField& f = model.potential();
    const Vec df = f.partials(p);
    pack.grad_f = ginv * df;
    pack.hess_f = f.second_partials(p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) pack.hess_f(i, j) -= gamma(k, i, j) * df[k];
    pack.ricci_f = pack.ricci + pack.hess_f;

    pack.grad_R = ginv * model.scalar_curvature().partials(p);

    if (phi != nullptr) {
        const Vec dphi = phi->partials(p);
        pack.grad_phi = ginv * dphi;
        pack.hess_phi = phi->second_partials(p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) pack.hess_phi(i, j) -= gamma(k, i, j) * dphi[k];
        pack.lap_phi = (ginv * pack.hess_phi).trace();
        pack.f_lap_phi = pack.lap_phi - inner(jet.g, pack.grad_f, pack.grad_phi);
    } else {
        pack.grad_phi = Vec::Zero(n);
        pack.hess_phi = Mat::Zero(n, n);
    }
    return pack;
}

namespace {

/// Cubic Lagrange interpolation of path samples: position and velocity at
/// parameter s. Falls back to the nearest interior 4-point window at the ends.
struct PathInterp {
    const DiscretePath& path;

    void eval(double s, Vec& pos, Vec& vel) const {
        const int K = path.segments();
        const double ds = path.ds();
        double t = s / ds;
        int k = std::min(K - 1, std::max(0, static_cast<int>(std::floor(t))));
        int i0 = std::min(std::max(k - 1, 0), K - 3 >= 0 ? K - 3 : 0);
        if (K < 3) {
            // too few samples for a cubic: linear within the segment
            const double a = t - k;
            pos = (1.0 - a) * path.samples[k] + a * path.samples[k + 1];
            vel = (path.samples[k + 1] - path.samples[k]) / ds;
            return;
        }
        // local coordinate u in units of ds, relative to node i0
        const double u = t - i0;
        const Vec& p0 = path.samples[i0];
        const Vec& p1 = path.samples[i0 + 1];
        const Vec& p2 = path.samples[i0 + 2];
        const Vec& p3 = path.samples[i0 + 3];
        const double l0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
        const double l1 = u * (u - 2) * (u - 3) / 2.0;
        const double l2 = -u * (u - 1) * (u - 3) / 2.0;
        const double l3 = u * (u - 1) * (u - 2) / 6.0;
        pos = l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
        const double d0 = -((u - 2) * (u - 3) + (u - 1) * (u - 3) + (u - 1) * (u - 2)) / 6.0;
        const double d1 = ((u - 2) * (u - 3) + u * (u - 3) + u * (u - 2)) / 2.0;
        const double d2 = -((u - 1) * (u - 3) + u * (u - 3) + u * (u - 1)) / 2.0;
        const double d3 = ((u - 1) * (u - 2) + u * (u - 1) + u * (u - 2)) / 6.0;
        vel = (d0 * p0 + d1 * p1 + d2 * p2 + d3 * p3) / ds;
    }
};

}  // namespace

std::vector<std::vector<Vec>> parallel_transport(const ManifoldModel& model,
                                                 const DiscretePath& path,
                                                 const std::vector<Vec>& v0) {
    const int K = path.segments();
    if (K < 1) throw UsageError("parallel_transport: path needs at least one segment");
    const int n = model.dim();
    const int m = static_cast<int>(v0.size());
    const double ds = path.ds();
    PathInterp interp{path};

    auto rhs = [&](double s, const std::vector<Vec>& v, std::vector<Vec>& out) {
        Vec pos, vel;
        interp.eval(s, pos, vel);
        ChartPoint p{pos, path.chart_id};
        model.require_in_domain(p);
        const Tensor3 gamma = christoffel(model.metric_jet(p));
        for (int q = 0; q < m; ++q) {
            out[q] = Vec::Zero(n);
            for (int k = 0; k < n; ++k) {
                double sum = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) sum += gamma(k, i, j) * vel[i] * v[q][j];
                out[q][k] = -sum;
            }
        }
    };

    std::vector<std::vector<Vec>> result(K + 1);
    std::vector<Vec> v = v0;
    result[0] = v;
    std::vector<Vec> k1(m), k2(m), k3(m), k4(m), tmp(m);
    for (int seg = 0; seg < K; ++seg) {
        const double s0 = seg * ds;
        if (!(ds > 1e-300)) throw IntegrationError("parallel_transport: step underflow");
        rhs(s0, v, k1);
        for (int q = 0; q < m; ++q) tmp[q] = v[q] + 0.5 * ds * k1[q];
        rhs(s0 + 0.5 * ds, tmp, k2);
        for (int q = 0; q < m; ++q) tmp[q] = v[q] + 0.5 * ds * k2[q];
        rhs(s0 + 0.5 * ds, tmp, k3);
        for (int q = 0; q < m; ++q) tmp[q] = v[q] + ds * k3[q];
        rhs(s0 + ds, tmp, k4);
        for (int q = 0; q < m; ++q)
            v[q] += (ds / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        result[seg + 1] = v;
    }
    return result;
}

Frame orthonormal_frame(const ManifoldModel& model, const ChartPoint& p) {
    const Mat g = model.metric(p);
    const int n = model.dim();
    Frame frame;
    frame.basis.reserve(n);
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Unit(n, i);
        for (const Vec& b : frame.basis) e -= inner(g, e, b) * b;
        const double len = norm(g, e);
        if (len < 1e-14) throw GeometryError("orthonormal_frame: degenerate basis");
        frame.basis.push_back(e / len);
    }
    return frame;
}

std::vector<std::vector<Vec>> parallel_frame(const ManifoldModel& model,
                                             const DiscretePath& path) {
    const Frame frame = orthonormal_frame(model, path.point(0));
    return parallel_transport(model, path, frame.basis);
}

double ricci_of_gradf_norm(const MetricJet& jet, const CurvaturePack& pack) {
    const Vec v = pack.ricci * pack.grad_f;  // covector (Rc grad f)_i
    const Mat ginv = jet.g.inverse();
    return std::sqrt(std::max(0.0, v.dot(ginv * v)));
}

IdentityReport check_soliton_identities(const ManifoldModel& model,
                                        const std::vector<ChartPoint>& grid,
                                        bool allow_non_soliton) {
    if (!model.soliton() && !allow_non_soliton)
        throw UsageError("check_soliton_identities: model not flagged as a soliton");
    if (grid.empty()) throw UsageError("check_soliton_identities: empty grid");

    IdentityReport report;
    report.points = static_cast<int>(grid.size());
    const ScalarField& Rfield = model.scalar_curvature();
    const ScalarField& ffield = model.potential();
    for (const ChartPoint& p : grid) {
        const MetricJet jet = model.metric_jet(p);
        const Mat ginv = jet.g.inverse();
        const CurvaturePack pack = curvature_pack(model, p);

        const Mat rcf_up = ginv * pack.ricci_f * ginv;
        double rcf_norm2 = 0.0;
        const int n = model.dim();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) rcf_norm2 += rcf_up(i, j) * pack.ricci_f(i, j);
        report.max_ricci_f = std::max(report.max_ricci_f, std::sqrt(std::max(0.0, rcf_norm2)));

        const double R = Rfield.value(p);
        const double gradf2 = inner(jet.g, pack.grad_f, pack.grad_f);
        report.max_hamiltonian = std::max(report.max_hamiltonian, std::abs(R + gradf2 - 1.0));
        if (R <= 0.0) report.positive_R = false;
        if (gradf2 > 1.0 + 1e-10) report.gradf_bounded = false;

        const Mat hessR = covariant_hessian(model, Rfield, p);
        const double lapR = (ginv * hessR).trace();
        const Vec df = ffield.partials(p);
        // Delta_f R = Delta R - <grad f, grad R>
        const double f_lap_R = lapR - df.dot(Vec(ginv * Rfield.partials(p)));
        report.max_lap_identity =
            std::max(report.max_lap_identity, std::abs(-f_lap_R - 2.0 * pack.ricci_norm2));

        const double gradR_norm = norm(jet.g, pack.grad_R);
        const double rc_gradf = ricci_of_gradf_norm(jet, pack);
        report.max_gradR_identity =
            std::max(report.max_gradR_identity, std::abs(gradR_norm - 2.0 * rc_gradf));
    }
    return report;
}

}  // namespace phigeo
