#include "phigeo/geometry.hpp"
#include "phigeo/io.hpp"
#include "phigeo/models.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace phigeo {

namespace {

// Warped-product steady-soliton reduction, state (w, w', f', f):
//   w'' = (n-2)(1 - w'^2)/w + f' w'
//   f'' = (n-1) w''/w
struct Reduction {
    int n;

    double w2(double w, double wp, double fp) const {
        return (n - 2) * (1.0 - wp * wp) / w + fp * wp;
    }
    double f2(double w, double wp, double fp) const { return (n - 1) * w2(w, wp, fp) / w; }

    std::array<double, 4> rhs(const std::array<double, 4>& y) const {
        const double w = y[0], wp = y[1], fp = y[2];
        const double wpp = w2(w, wp, fp);
        return {wp, wpp, (n - 1) * wpp / w, fp};
    }

    /// Unscaled scalar curvature from the profile.
    double R(double w, double wp, double wpp) const {
        return -2.0 * (n - 1) * wpp / w + (n - 1) * (n - 2) * (1.0 - wp * wp) / (w * w);
    }

    double hamiltonian(double w, double wp, double fp) const {
        return R(w, wp, w2(w, wp, fp)) + fp * fp;
    }

    // closures for higher r-derivatives of the profile
    double w3d(double w, double wp, double fp) const {
        const double wpp = w2(w, wp, fp);
        const double fpp = (n - 1) * wpp / w;
        return (n - 2) * (-2.0 * wp * wpp / w - (1.0 - wp * wp) * wp / (w * w)) + fpp * wp +
               fp * wpp;
    }
    double w4d(double w, double wp, double fp) const {
        const double wpp = w2(w, wp, fp);
        const double wppp = w3d(w, wp, fp);
        const double one_wp2 = 1.0 - wp * wp;
        const double t1 = -2.0 * (wpp * wpp + wp * wppp) / w + 2.0 * wp * wp * wpp / (w * w);
        const double t2 = (2.0 * wp * wp * wpp - one_wp2 * wpp) / (w * w) +
                          2.0 * one_wp2 * wp * wp / (w * w * w);
        const double t3 = (n - 1) * ((wppp * wp + wpp * wpp) / w - wpp * wp * wp / (w * w));
        const double t4 = (n - 1) * wpp * wpp / w + fp * wppp;
        return (n - 2) * (t1 + t2) + t3 + t4;
    }
};

struct Taylor {
    double a, w3, w5, b;
    explicit Taylor(int n, double shoot) : a(shoot) {
        w3 = a / (6.0 * (n - 1));
        w5 = 3.0 * w3 * w3 * (13.0 * n - 10.0) / (10.0 * (n + 2));
        b = (n - 1) * (20.0 * w5 - 6.0 * w3 * w3) / 3.0;
    }
    double w(double r) const { return r + w3 * r * r * r + w5 * std::pow(r, 5); }
    double wp(double r) const { return 1.0 + 3.0 * w3 * r * r + 5.0 * w5 * std::pow(r, 4); }
    double fp(double r) const { return a * r + b * r * r * r; }
    double f(double r) const { return 0.5 * a * r * r + 0.25 * b * std::pow(r, 4); }
};

constexpr double kOriginStart = 1e-2;

BryantProfile integrate_profile(int n, double shoot_param, double r_max, double tol) {
    if (!(r_max > 1.0)) throw SpecError("bryant_solve: r_max must exceed 1");
    if (!(tol > 0.0)) throw SpecError("bryant_solve: tol must be positive");

    const Reduction red{n};
    const Taylor tay(n, shoot_param);

    const double h = std::min(1e-3, 0.1 * std::pow(tol, 0.25));
    const double r0 = kOriginStart;
    const int steps = static_cast<int>(std::ceil((r_max - r0) / h));

    BryantProfile prof;
    prof.n = n;
    prof.shoot_param = shoot_param;
    prof.w3 = tay.w3;
    prof.w5 = tay.w5;
    prof.fp3 = tay.b;

    prof.r_grid.reserve(steps + 1);
    prof.w.reserve(steps + 1);
    prof.wp.reserve(steps + 1);
    prof.fp.reserve(steps + 1);
    prof.f.reserve(steps + 1);

    std::array<double, 4> y = {tay.w(r0), tay.wp(r0), tay.fp(r0), tay.f(r0)};
    const double hh = (r_max - r0) / steps;
    const double H0 = red.hamiltonian(y[0], y[1], y[2]);
    double drift = 0.0;

    auto push = [&](double r, const std::array<double, 4>& s) {
        prof.r_grid.push_back(r);
        prof.w.push_back(s[0]);
        prof.wp.push_back(s[1]);
        prof.fp.push_back(s[2]);
        prof.f.push_back(s[3]);
    };
    push(r0, y);

    auto rk4_step = [&](double step) {
        const auto k1 = red.rhs(y);
        std::array<double, 4> t;
        for (int q = 0; q < 4; ++q) t[q] = y[q] + 0.5 * step * k1[q];
        const auto k2 = red.rhs(t);
        for (int q = 0; q < 4; ++q) t[q] = y[q] + 0.5 * step * k2[q];
        const auto k3 = red.rhs(t);
        for (int q = 0; q < 4; ++q) t[q] = y[q] + step * k3[q];
        const auto k4 = red.rhs(t);
        for (int q = 0; q < 4; ++q)
            y[q] += (step / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    };

    for (int i = 0; i < steps; ++i) {
        // substep while 1/w is large, keeping the output grid uniform
        const int sub = (r0 + i * hh < 0.5) ? 20 : 1;
        for (int q = 0; q < sub; ++q) rk4_step(hh / sub);

        if (!(y[0] > 1e-10) || !(y[1] > 1e-10))
            throw SolverError("bryant_solve: profile degenerated (w or w' hit zero) at r = " +
                              std::to_string(r0 + (i + 1) * hh) +
                              "; try a different shoot_param");
        push(r0 + (i + 1) * hh, y);
        drift = std::max(drift, std::abs(red.hamiltonian(y[0], y[1], y[2]) - H0));
    }

    prof.hamiltonian_constant = H0;
    prof.max_hamiltonian_drift = drift;
    if (drift > 10.0 * tol)
        throw IntegrationError("bryant_solve: first-integral drift " + std::to_string(drift) +
                               " exceeds 10*tol");
    if (H0 < 1e-10)
        throw ConstructionError(
            "bryant_solve: degenerate profile (R + |grad f|^2 <= 0); zero potential gives no "
            "complete R>0 steady soliton of this form");
    // monotonicity diagnostics
    for (size_t i = 0; i < prof.r_grid.size(); ++i) {
        const double R = red.R(prof.w[i], prof.wp[i], red.w2(prof.w[i], prof.wp[i], prof.fp[i]));
        if (!(prof.wp[i] > 0.0) || !(prof.fp[i] < 0.0) || !(R > 0.0))
            throw ConstructionError("bryant_solve: monotonicity diagnostics failed at r = " +
                                    std::to_string(prof.r_grid[i]));
    }
    prof.scale = H0;
    return prof;
}

}  // namespace

BryantProfile bryant_solve(int n, double shoot_param, double r_max, double tol) {
    if (n < 3) throw SpecError("bryant_solve: n must be >= 3");
    double a = shoot_param;
    for (int attempt = 0;; ++attempt) {
        try {
            return integrate_profile(n, a, r_max, tol);
        } catch (const SolverError&) {
            if (attempt >= 6 || a >= 0.0) throw;
            a *= 0.5;  // bisection retry toward the attractor
        }
    }
}

namespace {

/// Piecewise-cubic Hermite evaluation on the uniform profile grid.
struct Hermite {
    const std::vector<double>* r;
    const std::vector<double>* v;
    const std::vector<double>* dv;

    double operator()(double x) const {
        const auto& rg = *r;
        const double h = rg[1] - rg[0];
        int i = static_cast<int>((x - rg.front()) / h);
        i = std::max(0, std::min(i, static_cast<int>(rg.size()) - 2));
        const double t = (x - rg[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * (*v)[i] + h * h10 * (*dv)[i] + h01 * (*v)[i + 1] + h * h11 * (*dv)[i + 1];
    }
};

constexpr double kSeriesSwitch = 5e-2;

/// Rotationally symmetric model on a global Cartesian chart:
/// g_ij = lambda [ A(r) delta_ij + B(r) x_i x_j ],
/// A = w^2/r^2, B = (r^2 - w^2)/r^4.
class BryantModel final : public ManifoldModel {
public:
    explicit BryantModel(BryantProfile profile) : prof_(std::move(profile)), red_{prof_.n} {
        w2nodes_.resize(prof_.r_grid.size());
        f2nodes_.resize(prof_.r_grid.size());
        for (size_t i = 0; i < prof_.r_grid.size(); ++i) {
            w2nodes_[i] = red_.w2(prof_.w[i], prof_.wp[i], prof_.fp[i]);
            f2nodes_[i] = red_.f2(prof_.w[i], prof_.wp[i], prof_.fp[i]);
        }
        f_field_ = std::make_unique<LambdaField>(
            [this](const ChartPoint& p) { return radial_value(p, Radial::f); },
            [this](const ChartPoint& p) { return radial_partials(p, Radial::f); },
            [this](const ChartPoint& p) { return radial_second(p, Radial::f); });
        R_field_ = std::make_unique<LambdaField>(
            [this](const ChartPoint& p) { return radial_value(p, Radial::R); },
            [this](const ChartPoint& p) { return radial_partials(p, Radial::R); },
            [this](const ChartPoint& p) { return radial_second(p, Radial::R); });
        neg_half_R_ = std::make_unique<ScaledField>(-0.5, *R_field_);
    }

    int dim() const override { return prof_.n; }
    bool soliton() const override { return true; }
    std::string name() const override { return "bryant" + std::to_string(prof_.n); }
    double tolerance() const override { return 1e-4; }

    bool in_domain(const ChartPoint& p) const override {
        return p.coords.size() == prof_.n && p.coords.allFinite() &&
               p.coords.norm() < prof_.r_grid.back();
    }

    MetricJet metric_jet(const ChartPoint& p) const override {
        require_in_domain(p);
        const int n = prof_.n;
        const double r = p.coords.norm();
        double A, Ap, App, B, Bp, Bpp;
        warp_coeffs(r, A, Ap, App, B, Bp, Bpp);
        const double lam = prof_.scale;
        // finite ratios at the origin
        const double a1 = (r > kSeriesSwitch) ? Ap / r : series_a1(r);
        const double c2 = (r > kSeriesSwitch) ? (App - a1) / (r * r) : series_c2();
        const double b1 = (r > kSeriesSwitch) ? Bp / r : series_b1();
        const double d2 = (r > kSeriesSwitch) ? (Bpp - b1) / (r * r) : 0.0;

        MetricJet jet{Mat(n, n), Tensor3(n), Tensor4(n)};
        const Vec& x = p.coords;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                jet.g(i, j) = lam * (A * (i == j ? 1.0 : 0.0) + B * x[i] * x[j]);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double dij = (i == j) ? 1.0 : 0.0;
                    jet.dg(k, i, j) =
                        lam * (a1 * x[k] * dij + b1 * x[k] * x[i] * x[j] +
                               B * ((k == i ? 1.0 : 0.0) * x[j] + (k == j ? 1.0 : 0.0) * x[i]));
                }
        for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double dij = (i == j) ? 1.0 : 0.0;
                        const double dkl = (k == l) ? 1.0 : 0.0;
                        const double dki = (k == i) ? 1.0 : 0.0;
                        const double dkj = (k == j) ? 1.0 : 0.0;
                        const double dil = (i == l) ? 1.0 : 0.0;
                        const double djl = (j == l) ? 1.0 : 0.0;
                        double v = (c2 * x[l] * x[k] + a1 * dkl) * dij;
                        v += d2 * x[l] * x[k] * x[i] * x[j] +
                             b1 * (dkl * x[i] * x[j] + dil * x[k] * x[j] + djl * x[k] * x[i]);
                        v += b1 * x[l] * (dki * x[j] + dkj * x[i]);
                        v += B * (dki * djl + dkj * dil);
                        jet.d2g(l, k, i, j) = lam * v;
                    }
        return jet;
    }

    const ScalarField& potential() const override { return *f_field_; }
    const ScalarField& scalar_curvature() const override { return *R_field_; }
    const ScalarField* named_field(const std::string& label) const override {
        if (label == "neg_half_R") return neg_half_R_.get();
        return nullptr;
    }

    const BryantProfile& profile() const { return prof_; }

private:
    enum class Radial { f, R };

    double interp_w(double r) const { return Hermite{&prof_.r_grid, &prof_.w, &prof_.wp}(r); }
    double interp_wp(double r) const { return Hermite{&prof_.r_grid, &prof_.wp, &w2nodes_}(r); }
    double interp_fp(double r) const { return Hermite{&prof_.r_grid, &prof_.fp, &f2nodes_}(r); }
    double interp_f(double r) const { return Hermite{&prof_.r_grid, &prof_.f, &prof_.fp}(r); }

    // radial profile u(r), u'(r), u''(r) for f and (scaled) R
    void radial_jet(double r, Radial which, double& u, double& up, double& upp) const {
        const Taylor tay = taylor();
        if (which == Radial::f) {
            if (r < kSeriesSwitch) {
                u = tay.f(r);
                up = tay.fp(r);
                upp = tay.a + 3.0 * tay.b * r * r;
            } else {
                u = interp_f(r);
                up = interp_fp(r);
                upp = red_.f2(interp_w(r), interp_wp(r), up);
            }
            return;
        }
        const double lam = prof_.scale;
        if (r < kSeriesSwitch) {
            const double R2 = series_R2();
            const double R0 = -6.0 * prof_.w3 * prof_.n * (prof_.n - 1);
            u = (R0 + R2 * r * r) / lam;
            up = 2.0 * R2 * r / lam;
            upp = 2.0 * R2 / lam;
            return;
        }
        const double w = interp_w(r), wp = interp_wp(r), fp = interp_fp(r);
        const double wpp = red_.w2(w, wp, fp);
        const double wppp = red_.w3d(w, wp, fp);
        const double wpppp = red_.w4d(w, wp, fp);
        const int n = prof_.n;
        const double G = wpp / w;
        const double Gp = wppp / w - wpp * wp / (w * w);
        const double Gpp = wpppp / w - 2.0 * wppp * wp / (w * w) - wpp * wpp / (w * w) +
                           2.0 * wpp * wp * wp / (w * w * w);
        const double one_wp2 = 1.0 - wp * wp;
        const double Hv = one_wp2 / (w * w);
        const double Hp = -2.0 * wp * wpp / (w * w) - 2.0 * one_wp2 * wp / (w * w * w);
        const double Hpp = -2.0 * (wpp * wpp + wp * wppp) / (w * w) +
                           8.0 * wp * wp * wpp / (w * w * w) -
                           2.0 * one_wp2 * wpp / (w * w * w) +
                           6.0 * one_wp2 * wp * wp / (w * w * w * w);
        u = (-2.0 * (n - 1) * G + (n - 1) * (n - 2) * Hv) / lam;
        up = (-2.0 * (n - 1) * Gp + (n - 1) * (n - 2) * Hp) / lam;
        upp = (-2.0 * (n - 1) * Gpp + (n - 1) * (n - 2) * Hpp) / lam;
    }

    double radial_value(const ChartPoint& p, Radial which) const {
        double u, up, upp;
        radial_jet(p.coords.norm(), which, u, up, upp);
        return u;
    }
    Vec radial_partials(const ChartPoint& p, Radial which) const {
        const double r = p.coords.norm();
        double u, up, upp;
        radial_jet(r, which, u, up, upp);
        // u'(r)/r is finite at the origin since u' is odd
        const double ratio = (r > kSeriesSwitch) ? up / r : radial_up_over_r(r, which);
        return ratio * p.coords;
    }
    Mat radial_second(const ChartPoint& p, Radial which) const {
        const double r = p.coords.norm();
        double u, up, upp;
        radial_jet(r, which, u, up, upp);
        const int n = prof_.n;
        const double ratio = (r > kSeriesSwitch) ? up / r : radial_up_over_r(r, which);
        Mat out(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double dij = (i == j) ? 1.0 : 0.0;
                // (upp - u'/r) -> 0 as r -> 0, so the unit-direction factor is safe
                out(i, j) = (upp - ratio) * series_xx(p, i, j) + ratio * dij;
            }
        return out;
    }

    // u'(r)/r near the origin from stored series
    double radial_up_over_r(double r, Radial which) const {
        const Taylor tay = taylor();
        if (which == Radial::f) return tay.a + tay.b * r * r;
        return 2.0 * series_R2() / prof_.scale;
    }

    static double series_xx(const ChartPoint& p, int i, int j) {
        const double rr = p.coords.squaredNorm();
        if (rr < 1e-30) return 0.0;
        return p.coords[i] * p.coords[j] / rr;
    }

    Taylor taylor() const { return Taylor(prof_.n, prof_.shoot_param); }

    double series_s() const { return prof_.w3 * prof_.w3 + 2.0 * prof_.w5; }
    double series_a1(double r) const { return 4.0 * prof_.w3 + 4.0 * series_s() * r * r; }
    double series_c2() const { return 8.0 * series_s(); }
    double series_b1() const { return -2.0 * series_s(); }
    double series_R2() const {
        const int n = prof_.n;
        return -2.0 * (n - 1) * (20.0 * prof_.w5 - 6.0 * prof_.w3 * prof_.w3) +
               (n - 1) * (n - 2) * (3.0 * prof_.w3 * prof_.w3 - 10.0 * prof_.w5);
    }

    void warp_coeffs(double r, double& A, double& Ap, double& App, double& B, double& Bp,
                     double& Bpp) const {
        if (r < kSeriesSwitch) {
            const double s = series_s();
            const double w3 = prof_.w3;
            A = 1.0 + 2.0 * w3 * r * r + s * std::pow(r, 4);
            Ap = 4.0 * w3 * r + 4.0 * s * r * r * r;
            App = 4.0 * w3 + 12.0 * s * r * r;
            B = -2.0 * w3 - s * r * r;
            Bp = -2.0 * s * r;
            Bpp = -2.0 * s;
            return;
        }
        const double w = interp_w(r), wp = interp_wp(r);
        const double fp = interp_fp(r);
        const double wpp = red_.w2(w, wp, fp);
        A = w * w / (r * r);
        Ap = 2.0 * w * wp / (r * r) - 2.0 * w * w / (r * r * r);
        App = 2.0 * (wp * wp + w * wpp) / (r * r) - 8.0 * w * wp / (r * r * r) +
              6.0 * w * w / (r * r * r * r);
        B = (1.0 - A) / (r * r);
        Bp = -Ap / (r * r) - 2.0 * (1.0 - A) / (r * r * r);
        Bpp = -App / (r * r) + 4.0 * Ap / (r * r * r) + 6.0 * (1.0 - A) / (r * r * r * r);
    }

    BryantProfile prof_;
    Reduction red_;
    std::vector<double> w2nodes_, f2nodes_;
    std::unique_ptr<LambdaField> f_field_, R_field_;
    std::unique_ptr<ScaledField> neg_half_R_;
};

}  // namespace

std::shared_ptr<ManifoldModel> make_bryant_model(const BryantProfile& profile) {
    return std::make_shared<BryantModel>(profile);
}

void save_bryant_profile(const BryantProfile& profile, const std::string& path) {
    std::string out = "r,w,wp,fp\n";
    for (size_t i = 0; i < profile.r_grid.size(); ++i) {
        out += format_double_17(profile.r_grid[i]);
        out += ',';
        out += format_double_17(profile.w[i]);
        out += ',';
        out += format_double_17(profile.wp[i]);
        out += ',';
        out += format_double_17(profile.fp[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

BryantProfile load_bryant_profile(const std::string& path, int n, double shoot_param) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "r,w,wp,fp")
        throw DataError("bryant profile: bad header in " + path);

    BryantProfile prof;
    prof.n = n;
    prof.shoot_param = shoot_param;
    const Taylor tay(n, shoot_param);
    prof.w3 = tay.w3;
    prof.w5 = tay.w5;
    prof.fp3 = tay.b;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::array<double, 4> vals{};
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(row, cell, ',')) throw DataError("bryant profile: short row");
            vals[i] = std::stod(cell);
        }
        prof.r_grid.push_back(vals[0]);
        prof.w.push_back(vals[1]);
        prof.wp.push_back(vals[2]);
        prof.fp.push_back(vals[3]);
    }
    if (prof.r_grid.size() < 4) throw DataError("bryant profile: too few rows");

    // reconstruct f by trapezoid quadrature of f' on the fine grid
    prof.f.resize(prof.r_grid.size());
    prof.f[0] = tay.f(prof.r_grid.front());
    for (size_t i = 1; i < prof.r_grid.size(); ++i)
        prof.f[i] = prof.f[i - 1] + 0.5 * (prof.fp[i] + prof.fp[i - 1]) *
                                        (prof.r_grid[i] - prof.r_grid[i - 1]);

    const Reduction red{n};
    const double H0 = red.hamiltonian(prof.w[0], prof.wp[0], prof.fp[0]);
    double drift = 0.0;
    for (size_t i = 0; i < prof.r_grid.size(); ++i)
        drift = std::max(drift, std::abs(red.hamiltonian(prof.w[i], prof.wp[i], prof.fp[i]) - H0));
    prof.hamiltonian_constant = H0;
    prof.max_hamiltonian_drift = drift;
    prof.scale = H0;
    if (H0 < 1e-10) throw DataError("bryant profile: degenerate first integral");
    return prof;
}

}  // namespace phigeo
