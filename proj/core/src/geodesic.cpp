#include "phigeo/geodesic.hpp"

#include "phigeo/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace phigeo {

std::string to_string(SolverKind k) {
    switch (k) {
        case SolverKind::ivp: return "ivp";
        case SolverKind::shooting: return "shooting";
        case SolverKind::direct: return "direct";
    }
    return "?";
}

std::shared_ptr<const ScalarField> make_phi(const ManifoldModel& model, const PhiSpec& spec) {
    switch (spec.kind) {
        case PhiSpec::Kind::c_times_R: {
            if (!(spec.c > 0.0)) throw UsageError("make_phi: c must be positive");
            return std::make_shared<ScaledField>(spec.c, model.scalar_curvature());
        }
        case PhiSpec::Kind::custom:
        case PhiSpec::Kind::signed_custom: {
            const ScalarField* field = model.named_field(spec.label);
            if (field == nullptr)
                throw UsageError("make_phi: model " + model.name() + " has no field '" +
                                 spec.label + "'");
            return std::shared_ptr<const ScalarField>(std::shared_ptr<void>{}, field);
        }
    }
    throw UsageError("make_phi: bad spec");
}

double j_functional(const ManifoldModel& model, const ScalarField& phi, const DiscretePath& path) {
    const int K = path.segments();
    if (K < 1) throw UsageError("j_functional: empty path");
    const double ds = path.ds();
    double J = 0.0;
    double phi_prev = phi.value(path.point(0));
    model.require_in_domain(path.point(0));
    for (int k = 0; k < K; ++k) {
        const ChartPoint next = path.point(k + 1);
        model.require_in_domain(next);
        const Vec delta = path.samples[k + 1] - path.samples[k];
        const ChartPoint mid{0.5 * (path.samples[k] + path.samples[k + 1]), path.chart_id};
        model.require_in_domain(mid);
        const Mat g = model.metric(mid);
        const double phi_next = phi.value(next);
        J += delta.dot(g * delta) / ds + (phi_prev + phi_next) * ds;
        phi_prev = phi_next;
    }
    return J;
}

Vec j_gradient(const ManifoldModel& model, const ScalarField& phi, const DiscretePath& path) {
    const int K = path.segments();
    const int n = model.dim();
    const double ds = path.ds();
    Vec grad = Vec::Zero(static_cast<Eigen::Index>(K - 1) * n);

    for (int k = 0; k < K; ++k) {
        const Vec delta = path.samples[k + 1] - path.samples[k];
        const ChartPoint mid{0.5 * (path.samples[k] + path.samples[k + 1]), path.chart_id};
        const MetricJet jet = model.metric_jet(mid);
        const Vec gdelta = 2.0 * (jet.g * delta) / ds;
        Vec curv(n);  // (1/2) delta^T d_a g delta, chain factor 1/2 for the midpoint
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) s += jet.dg(a, b, c) * delta[b] * delta[c];
            curv[a] = 0.5 * s / ds;
        }
        if (k >= 1)  // left node of this segment is interior sample k
            grad.segment(static_cast<Eigen::Index>(k - 1) * n, n) += -gdelta + curv;
        if (k + 1 <= K - 1)  // right node is interior sample k+1
            grad.segment(static_cast<Eigen::Index>(k) * n, n) += gdelta + curv;
    }
    for (int j = 1; j <= K - 1; ++j) {
        const Vec dphi = phi.partials(path.point(j));
        grad.segment(static_cast<Eigen::Index>(j - 1) * n, n) += 2.0 * ds * dphi;
    }
    return grad;
}

std::vector<Vec> reconstruct_velocities(const DiscretePath& path) {
    const int K = path.segments();
    const double ds = path.ds();
    const auto& s = path.samples;
    std::vector<Vec> v(K + 1);
    if (K < 4) {
        for (int k = 0; k <= K; ++k) {
            if (k == 0)
                v[k] = (s[1] - s[0]) / ds;
            else if (k == K)
                v[k] = (s[K] - s[K - 1]) / ds;
            else
                v[k] = (s[k + 1] - s[k - 1]) / (2.0 * ds);
        }
        return v;
    }
    for (int k = 2; k <= K - 2; ++k)
        v[k] = (-s[k + 2] + 8.0 * s[k + 1] - 8.0 * s[k - 1] + s[k - 2]) / (12.0 * ds);
    v[0] = (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) / (12.0 * ds);
    v[1] = (-3.0 * s[0] - 10.0 * s[1] + 18.0 * s[2] - 6.0 * s[3] + s[4]) / (12.0 * ds);
    v[K] = (25.0 * s[K] - 48.0 * s[K - 1] + 36.0 * s[K - 2] - 16.0 * s[K - 3] +
            3.0 * s[K - 4]) /
           (12.0 * ds);
    v[K - 1] = (3.0 * s[K] + 10.0 * s[K - 1] - 18.0 * s[K - 2] + 6.0 * s[K - 3] - s[K - 4]) /
               (12.0 * ds);
    return v;
}

double first_variation(const ManifoldModel& model, const ScalarField& phi,
                       const DiscretePath& path, const VariationField& U) {
    const int K = path.segments();
    const int n = model.dim();
    if (static_cast<int>(U.vectors.size()) != K + 1)
        throw UsageError("first_variation: U size mismatch");
    const double ds = path.ds();
    const std::vector<Vec> S = reconstruct_velocities(path);

    // dS/ds by the same fourth-order stencils
    DiscretePath vel_path{S, path.s_bar, path.chart_id};
    const std::vector<Vec> dS = reconstruct_velocities(vel_path);

    std::vector<double> integrand(K + 1);
    for (int k = 0; k <= K; ++k) {
        const ChartPoint p = path.point(k);
        model.require_in_domain(p);
        const MetricJet jet = model.metric_jet(p);
        const Tensor3 gamma = christoffel(jet);
        Vec nabSS = dS[k];
        for (int a = 0; a < n; ++a) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) sum += gamma(a, i, j) * S[k][i] * S[k][j];
            nabSS[a] += sum;
        }
        const Vec grad_phi = jet.g.llt().solve(phi.partials(p));
        integrand[k] = U.vectors[k].dot(jet.g * (grad_phi - nabSS));
    }
    double integral = 0.0;
    for (int k = 0; k < K; ++k) integral += 0.5 * (integrand[k] + integrand[k + 1]) * ds;

    const Mat g0 = model.metric(path.point(0));
    const Mat gK = model.metric(path.point(K));
    const double boundary = U.vectors[K].dot(gK * S[K]) - U.vectors[0].dot(g0 * S[0]);
    return integral + boundary;
}

GeodesicSolution integrate_phi_geodesic(const ManifoldModel& model, const ScalarField& phi,
                                        const ChartPoint& x, const Vec& v0, double s_bar,
                                        double step) {
    if (!(step > 0.0)) throw UsageError("integrate_phi_geodesic: step must be positive");
    model.require_in_domain(x);
    const int n = model.dim();
    const int steps = std::max(1, static_cast<int>(std::llround(s_bar / step)));
    const double h = s_bar / steps;

    auto acc = [&](const Vec& pos, const Vec& vel, Vec& out) -> bool {
        const ChartPoint p{pos, x.chart_id};
        if (!model.in_domain(p)) return false;
        const MetricJet jet = model.metric_jet(p);
        const Tensor3 gamma = christoffel(jet);
        const Vec grad_phi = jet.g.llt().solve(phi.partials(p));
        out = grad_phi;
        for (int a = 0; a < n; ++a) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) sum += gamma(a, i, j) * vel[i] * vel[j];
            out[a] -= sum;
        }
        return true;
    };

    GeodesicSolution sol;
    sol.solver = SolverKind::ivp;
    sol.path.chart_id = x.chart_id;
    sol.path.samples.reserve(steps + 1);
    sol.velocities.reserve(steps + 1);

    Vec pos = x.coords, vel = v0;
    sol.path.samples.push_back(pos);
    sol.velocities.push_back(vel);
    bool exited = false;
    int done = 0;
    Vec a1(n), a2(n), a3(n), a4(n);
    for (int i = 0; i < steps; ++i) {
        if (!acc(pos, vel, a1)) { exited = true; break; }
        Vec p2 = pos + 0.5 * h * vel, v2 = vel + 0.5 * h * a1;
        if (!acc(p2, v2, a2)) { exited = true; break; }
        Vec p3 = pos + 0.5 * h * v2, v3 = vel + 0.5 * h * a2;
        if (!acc(p3, v3, a3)) { exited = true; break; }
        Vec p4 = pos + h * v3, v4 = vel + h * a3;
        if (!acc(p4, v4, a4)) { exited = true; break; }
        pos += (h / 6.0) * (vel + 2.0 * v2 + 2.0 * v3 + v4);
        vel += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if (!model.in_domain(ChartPoint{pos, x.chart_id})) { exited = true; break; }
        sol.path.samples.push_back(pos);
        sol.velocities.push_back(vel);
        ++done;
    }
    sol.path.s_bar = done * h;
    sol.converged = !exited;
    if (done >= 1) {
        auto [C, drift] = conserved_quantity(model, phi, sol);
        sol.C_estimate = C;
        sol.C_drift = drift;
        sol.J_value = j_functional(model, phi, sol.path);
    }
    return sol;
}

std::pair<double, double> conserved_quantity(const ManifoldModel& model, const ScalarField& phi,
                                             const GeodesicSolution& sol) {
    const int K = sol.path.segments();
    std::vector<double> cvals(K + 1);
    for (int k = 0; k <= K; ++k) {
        const ChartPoint p = sol.path.point(k);
        const Mat g = model.metric(p);
        cvals[k] = sol.velocities[k].dot(g * sol.velocities[k]) - 2.0 * phi.value(p);
    }
    std::vector<double> sorted = cvals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double C = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0) {
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2 - 1, sorted.end());
        C = 0.5 * (C + sorted[sorted.size() / 2 - 1]);
    }
    double drift = 0.0;
    for (double cv : cvals) drift = std::max(drift, std::abs(cv - C));
    return {C, drift};
}

GeodesicSolution shoot_bvp(const ManifoldModel& model, const ScalarField& phi,
                           const ChartPoint& x, const ChartPoint& y, double s_bar,
                           const Vec& guess, double tol, int max_iter) {
    if (!(tol > 0.0)) throw UsageError("shoot_bvp: tol must be positive");
    if (!guess.allFinite()) throw UsageError("shoot_bvp: guess must be finite");
    model.require_in_domain(x);
    model.require_in_domain(y);
    const int n = model.dim();
    const double step = s_bar / std::max(2000, 4 * n * 100);
    const Mat gy = model.metric(y);

    auto endpoint_gap = [&](const Vec& v0, GeodesicSolution& out) -> Vec {
        out = integrate_phi_geodesic(model, phi, x, v0, s_bar, step);
        if (!out.converged || out.path.segments() < 1)
            return Vec::Constant(n, std::numeric_limits<double>::infinity());
        return Vec(out.path.samples.back() - y.coords);
    };

    Vec v0 = guess;
    GeodesicSolution sol;
    Vec F = endpoint_gap(v0, sol);
    double gap = F.allFinite() ? std::sqrt(F.dot(gy * F)) : std::numeric_limits<double>::infinity();

    for (int it = 0; it < max_iter && gap > tol; ++it) {
        if (!F.allFinite()) break;
        // finite-difference Jacobian of the endpoint map
        Mat Jm(n, n);
        const double base = 1e-6 * (1.0 + v0.norm());
        for (int i = 0; i < n; ++i) {
            Vec vp = v0;
            vp[i] += base;
            GeodesicSolution tmp;
            const Vec Fp = endpoint_gap(vp, tmp);
            if (!Fp.allFinite()) {
                Jm.col(i) = Vec::Zero(n);
                continue;
            }
            Jm.col(i) = (Fp - F) / base;
        }
        Vec dv = Jm.fullPivLu().solve(-F);
        if (!dv.allFinite()) break;
        // damped update
        double lambda = 1.0;
        bool improved = false;
        for (int half = 0; half < 10; ++half) {
            GeodesicSolution trial_sol;
            const Vec Ft = endpoint_gap(v0 + lambda * dv, trial_sol);
            const double gt =
                Ft.allFinite() ? std::sqrt(Ft.dot(gy * Ft)) : std::numeric_limits<double>::infinity();
            if (gt < gap) {
                v0 += lambda * dv;
                F = Ft;
                gap = gt;
                sol = std::move(trial_sol);
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }

    sol.solver = SolverKind::shooting;
    sol.converged = gap <= tol;
    sol.residual = gap;
    if (!sol.path.samples.empty()) {
        auto [C, drift] = conserved_quantity(model, phi, sol);
        sol.C_estimate = C;
        sol.C_drift = drift;
        sol.J_value = j_functional(model, phi, sol.path);
    }
    return sol;
}

double riemann_distance(const ManifoldModel& model, const ChartPoint& x, const ChartPoint& y,
                        int K, std::uint64_t seed) {
    if ((x.coords - y.coords).norm() == 0.0) return 0.0;
    const ConstantField zero(0.0);
    const GeodesicSolution a = minimize_j(model, zero, x, y, 1.0, K, 1, seed);
    const GeodesicSolution b = minimize_j(model, zero, x, y, 1.0, 2 * K, 1, seed, 1e-8, &a.path);
    if (!a.converged || !b.converged)
        throw SolverError("riemann_distance: minimization did not converge");
    // unit-speed sanity: |S| should be constant along the minimizer
    const double J = (4.0 * b.J_value - a.J_value) / 3.0;  // Richardson in 1/K^2
    return std::sqrt(std::max(0.0, J));
}

GradientFlowReport gradient_flow_check(const ManifoldModel& model, const ChartPoint& x,
                                       double s_bar, double step) {
    if (!(step > 0.0)) throw UsageError("gradient_flow_check: step must be positive");
    model.require_in_domain(x);
    const int n = model.dim();
    const ScalarField& f = model.potential();
    const ScalarField& R = model.scalar_curvature();

    auto gradf = [&](const Vec& pos, Vec& out) -> bool {
        const ChartPoint p{pos, x.chart_id};
        if (!model.in_domain(p)) return false;
        out = model.metric(p).llt().solve(f.partials(p));
        return true;
    };

    GradientFlowReport report;
    report.path.chart_id = x.chart_id;
    const int steps = std::max(1, static_cast<int>(std::llround(s_bar / step)));
    const double h = s_bar / steps;
    Vec pos = x.coords;
    report.path.samples.push_back(pos);
    Vec k1(n), k2(n), k3(n), k4(n);
    int done = 0;
    for (int i = 0; i < steps; ++i) {
        if (!gradf(pos, k1) || !gradf(pos + 0.5 * h * k1, k2) || !gradf(pos + 0.5 * h * k2, k3) ||
            !gradf(pos + h * k3, k4)) {
            report.complete = false;
            break;
        }
        pos += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!model.in_domain(ChartPoint{pos, x.chart_id})) {
            report.complete = false;
            break;
        }
        report.path.samples.push_back(pos);
        ++done;
    }
    report.path.s_bar = std::max(done * h, 1e-300);

    // residual of nab_S S = grad(-R/2) along the curve, S = grad f:
    // nab_S S = g^{-1} Hess f (grad f)
    for (const Vec& sample : report.path.samples) {
        const ChartPoint p{sample, x.chart_id};
        const CurvaturePack pack = curvature_pack(model, p);
        const Mat g = model.metric(p);
        const Vec covec = pack.hess_f * pack.grad_f + 0.5 * R.partials(p);
        const double res = std::sqrt(std::max(0.0, covec.dot(g.llt().solve(covec))));
        report.max_residual = std::max(report.max_residual, res);
    }
    return report;
}

std::string solution_to_json(const GeodesicSolution& sol) {
    nlohmann::json j;
    j["s_bar"] = sol.path.s_bar;
    j["K"] = sol.path.segments();
    auto pack_vecs = [](const std::vector<Vec>& vs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Vec& v : vs) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
            arr.push_back(std::move(row));
        }
        return arr;
    };
    j["samples"] = pack_vecs(sol.path.samples);
    j["velocities"] = pack_vecs(sol.velocities);
    j["J"] = sol.J_value;
    j["C"] = sol.C_estimate;
    j["drift"] = sol.C_drift;
    j["solver"] = to_string(sol.solver);
    j["converged"] = sol.converged;
    return j.dump();
}

GeodesicSolution solution_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    GeodesicSolution sol;
    sol.path.s_bar = j.at("s_bar").get<double>();
    auto unpack = [](const nlohmann::json& arr) {
        std::vector<Vec> out;
        for (const auto& row : arr) {
            Vec v(row.size());
            for (size_t i = 0; i < row.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[i];
            out.push_back(std::move(v));
        }
        return out;
    };
    sol.path.samples = unpack(j.at("samples"));
    sol.velocities = unpack(j.at("velocities"));
    sol.J_value = j.at("J").get<double>();
    sol.C_estimate = j.at("C").get<double>();
    sol.C_drift = j.at("drift").get<double>();
    const std::string solver = j.at("solver").get<std::string>();
    sol.solver = solver == "ivp"        ? SolverKind::ivp
                 : solver == "shooting" ? SolverKind::shooting
                                        : SolverKind::direct;
    sol.converged = j.at("converged").get<bool>();
    return sol;
}

}  // namespace phigeo
