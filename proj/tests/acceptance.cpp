// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.

#include <phigeo/decay.hpp>
#include <phigeo/geodesic.hpp>
#include <phigeo/geometry.hpp>
#include <phigeo/io.hpp>
#include <phigeo/models.hpp>
#include <phigeo/rho.hpp>
#include <phigeo/variation.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace phigeo;

namespace {

int g_failures = 0;

struct Criterion {
    std::string label;
    bool pass = true;
    std::vector<std::string> notes;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Criterion(std::string l) : label(std::move(l)) {}

    void require(bool ok, const std::string& why) {
        if (!ok) {
            pass = false;
            notes.push_back(why);
        }
    }

    void finish() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %s: %s (%.1fs)\n", label.c_str(), pass ? "PASS" : "FAIL", secs);
        for (const auto& n : notes) std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
        if (!pass) ++g_failures;
    }
};

ChartPoint pt(std::initializer_list<double> coords) {
    ChartPoint p{Vec(static_cast<int>(coords.size())), 0};
    int i = 0;
    for (double c : coords) p.coords[i++] = c;
    return p;
}

ChartPoint origin(int n) { return ChartPoint{Vec::Zero(n), 0}; }

std::vector<ChartPoint> grid2d(int m, double half) {
    std::vector<ChartPoint> out;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            out.push_back(
                pt({-half + 2 * half * i / (m - 1), -half + 2 * half * j / (m - 1)}));
    return out;
}

void criterion_identities() {
    Criterion c("1 soliton identities");
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    auto rep = check_soliton_identities(*cigar, grid2d(20, 5.0));
    c.require(rep.worst() <= 1e-7,
              "cigar residual " + format_double(rep.worst()) + " > 1e-7");

    auto prod = build_model(ModelSpec{CigarProductSpec{1}});
    std::vector<ChartPoint> grid3;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 7; ++k)
                grid3.push_back(pt({-5.0 + 10.0 * i / 7.0, -5.0 + 10.0 * j / 7.0,
                                    -5.0 + 10.0 * k / 6.0}));
    auto repp = check_soliton_identities(*prod, grid3);
    c.require(repp.worst() <= 1e-7,
              "cigar_x_R residual " + format_double(repp.worst()) + " > 1e-7");

    auto bryant = build_model(ModelSpec{BryantSpec{3, -0.2, 60.0, 1e-8}});
    std::vector<ChartPoint> gridb;
    for (double r : {0.05, 0.3, 1.0, 2.5, 5.0})
        for (double t : {0.0, 0.5, 1.1, 2.3})
            gridb.push_back(pt({r * std::cos(t), r * std::sin(t), 0.15 * r}));
    auto repb = check_soliton_identities(*bryant, gridb);
    c.require(repb.worst() <= 1e-4,
              "bryant residual " + format_double(repb.worst()) + " > 1e-4");
    c.require(rep.positive_R && repp.positive_R && repb.positive_R, "R <= 0 somewhere");
    c.finish();
}

void criterion_conservation() {
    Criterion c("2 conservation");
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    auto phi = make_phi(*cigar, PhiSpec::cR(0.25));
    Vec v0(2);
    v0 << 0.3, 0.4;
    const ChartPoint x = pt({1.0, 0.0});
    auto sol = integrate_phi_geodesic(*cigar, *phi, x, v0, 20.0, 1e-3);
    c.require(sol.converged, "IVP did not converge");
    c.require(sol.C_drift <= 1e-8, "drift " + format_double(sol.C_drift) + " > 1e-8");
    // fourth-order signal, measured above the rounding floor
    auto coarse = integrate_phi_geodesic(*cigar, *phi, x, v0, 20.0, 0.1);
    auto halved = integrate_phi_geodesic(*cigar, *phi, x, v0, 20.0, 0.05);
    const double ratio = coarse.C_drift / halved.C_drift;
    c.require(ratio >= 12.0, "halving ratio " + format_double(ratio) + " < 12");
    c.finish();
}

void criterion_variation() {
    Criterion c("3 variation oracles");
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    auto phi = make_phi(*cigar, PhiSpec::cR(0.25));
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> box(-1.5, 1.5), amp(-0.3, 0.3);

    // first variation: 10 variation fields on each of 10 converged solutions
    double worst_fv = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        ChartPoint x = pt({box(rng), box(rng)}), y = pt({box(rng), box(rng)});
        while ((x.coords - y.coords).norm() < 0.5) y = pt({box(rng), box(rng)});
        const double d = riemann_distance(*cigar, x, y);
        auto seed_sol = minimize_j(*cigar, *phi, x, y, d, 64, 1, 11);
        auto sol = shoot_bvp(*cigar, *phi, x, y, d, seed_sol.velocities.front(), 1e-10);
        if (!sol.converged) {
            c.require(false, "shooting refinement failed on trial " + std::to_string(trial));
            continue;
        }
        const int K = sol.path.segments();
        for (int field = 0; field < 10; ++field) {
            VariationField U;
            U.vanishing = true;
            U.vectors.resize(K + 1);
            const double a1 = amp(rng), a2 = amp(rng), b1 = amp(rng), b2 = amp(rng);
            for (int k = 0; k <= K; ++k) {
                const double t = double(k) / K;
                Vec v(2);
                v << a1 * std::sin(M_PI * t) + a2 * std::sin(2 * M_PI * t),
                    b1 * std::sin(M_PI * t) + b2 * std::sin(3 * M_PI * t);
                U.vectors[k] = v;
            }
            worst_fv = std::max(worst_fv, std::abs(first_variation(*cigar, *phi, sol.path, U)));
        }
    }
    c.require(worst_fv <= 1e-6, "first variation " + format_double(worst_fv) + " > 1e-6");

    // index form vs finite differences: 20 randomized cases
    auto agree = [&](double idx, double fd) {
        return std::abs(idx - fd) <= std::max(1e-4, 0.01 * std::abs(idx));
    };
    int run = 0;
    while (run < 20) {
        ChartPoint x = pt({box(rng), box(rng)}), y = pt({box(rng), box(rng)});
        if ((x.coords - y.coords).norm() < 0.3) continue;
        const double d = riemann_distance(*cigar, x, y);
        auto sol = minimize_j(*cigar, *phi, x, y, d, 96, 1, 17);
        if (!sol.converged) continue;
        const int K = sol.path.segments();
        VariationField U;
        U.vanishing = true;
        U.vectors.resize(K + 1);
        const double a1 = amp(rng), b1 = amp(rng), b2 = amp(rng);
        for (int k = 0; k <= K; ++k) {
            const double t = double(k) / K;
            Vec v(2);
            v << a1 * std::sin(M_PI * t), b1 * std::sin(M_PI * t) + b2 * std::sin(2 * M_PI * t);
            U.vectors[k] = v;
        }
        const double idx = index_form(*cigar, *phi, sol, U);
        const double fd = second_variation_fd(*cigar, *phi, sol, U, 1e-3);
        c.require(agree(idx, fd), "index/FD disagreement " + format_double(idx) + " vs " +
                                      format_double(fd) + " on case " + std::to_string(run));
        ++run;
    }

    // closed-form flat values
    auto flat = build_model(ModelSpec{EuclideanSpec{2, "const", 1.0}});
    const ConstantField zero(0.0);
    auto straight = minimize_j(*flat, zero, pt({0.0, 0.0}), pt({1.0, 0.0}), 1.0, 256);
    VariationField sine;
    sine.vanishing = true;
    sine.vectors.resize(257);
    for (int k = 0; k <= 256; ++k) {
        Vec v(2);
        v << 0.0, std::sin(M_PI * k / 256.0);
        sine.vectors[k] = v;
    }
    const double idx1 = index_form(*flat, zero, straight, sine);
    c.require(agree(idx1, M_PI * M_PI / 2.0),
              "flat index " + format_double(idx1) + " != pi^2/2");

    auto quad = build_model(ModelSpec{EuclideanSpec{2, "half_one_plus_x2", 1.0}});
    auto qphi = make_phi(*quad, PhiSpec::custom("half_one_plus_x2"));
    auto hyp = shoot_bvp(*quad, *qphi, pt({1.0, 0.0}), pt({std::cosh(1.0), 0.0}), 1.0,
                         Vec::Zero(2), 1e-10);
    const int Kh = hyp.path.segments();
    VariationField sine2;
    sine2.vanishing = true;
    sine2.vectors.resize(Kh + 1);
    for (int k = 0; k <= Kh; ++k) {
        Vec v(2);
        v << 0.0, std::sin(M_PI * k / double(Kh));
        sine2.vectors[k] = v;
    }
    const double idx2 = index_form(*quad, *qphi, hyp, sine2);
    c.require(agree(idx2, M_PI * M_PI / 2.0 + 0.5),
              "quadratic index " + format_double(idx2) + " != pi^2/2 + 1/2");
    c.finish();
}

struct LedgerCell {
    std::string model;
    double c = 0.0, d = 0.0, C = 0.0;
    bool converged = false;
};

std::vector<LedgerCell> g_cells;  // shared with the C-window criterion

void criterion_ledgers() {
    Criterion crit("4 inequality ledgers");
    struct ModelEntry {
        std::shared_ptr<ManifoldModel> model;
        double radial_scale;  // chart radius per unit distance (bryant); 0 = cigar map
    };
    std::vector<ModelEntry> models;
    models.push_back({build_model(ModelSpec{CigarSpec{}}), 0.0});
    models.push_back({build_model(ModelSpec{CigarProductSpec{1}}), 0.0});
    {
        const BryantProfile profile = bryant_solve(3, -0.2, 60.0, 1e-8);
        models.push_back({make_bryant_model(profile), 1.0 / std::sqrt(profile.scale)});
    }

    for (const auto& entry : models) {
        const ManifoldModel& model = *entry.model;
        const int n = model.dim();
        for (double c : {0.05, 0.25, 1.0}) {
            auto phi = make_phi(model, PhiSpec::cR(c));
            const double paper_bound = (n + std::sqrt(1.0 + 2.0 * c)) / c;
            for (double d : {5.0, 10.0, 20.0, 40.0}) {
                Vec v = Vec::Zero(n);
                v[0] = entry.radial_scale > 0.0 ? d * entry.radial_scale
                                                : cigar::radius_at_distance(d);
                const ChartPoint y{v, 0};
                auto sol = minimize_j(model, *phi, origin(n), y, d, 512, 3, 0);
                const std::string where =
                    model.name() + ", c = " + format_double(c) + ", d = " + format_double(d);
                g_cells.push_back({model.name(), c, d, sol.C_estimate, sol.converged});
                if (!sol.converged) {
                    crit.require(false, "minimizer did not converge: " + where);
                    continue;
                }
                const TestFunction zeta = TestFunction::trapezoid(d, sol.path.segments());
                const auto exeter = inequality_exeter(model, *phi, sol, zeta);
                const auto main = inequality_369894(model, sol, zeta, c);
                const auto gradr = gradR_variant(model, sol, zeta, c);
                crit.require(exeter.holds && exeter.slack > 0.0, "exeter violated: " + where);
                crit.require(main.holds && main.slack > 0.0, "369894 violated: " + where);
                crit.require(gradr.ledger.holds && gradr.ledger.slack > 0.0,
                             "gradR variant violated: " + where);
                crit.require(main.rhs < paper_bound, "rhs >= paper bound: " + where);
            }
        }
    }
    crit.finish();
}

void criterion_c_window() {
    Criterion crit("5 C window");
    crit.require(!g_cells.empty(), "no ledger cells recorded");
    for (const auto& cell : g_cells) {
        if (!cell.converged) continue;
        const std::string where =
            cell.model + ", c = " + format_double(cell.c) + ", d = " + format_double(cell.d);
        crit.require(cell.C < 1.0, "C = " + format_double(cell.C) + " >= 1 at " + where);
        if (cell.c <= 0.25)
            crit.require(cell.C >= 0.5 - 1e-6,
                         "C = " + format_double(cell.C) + " < 1/2 at " + where);
    }
    crit.finish();
}

void criterion_decay() {
    Criterion crit("6 curvature decay");
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    std::vector<ChartPoint> targets;
    for (double d : {5.0, 10.0, 20.0, 40.0})
        targets.push_back(pt({cigar::radius_at_distance(d), 0.0}));
    DecayOptions opts;
    opts.K = 512;
    const auto records = decay_run(*cigar, 0.25, origin(2), targets, opts);

    double k_at_5 = 0.0;
    for (const auto& r : records) {
        const std::string where = "d = " + format_double(r.d);
        crit.require(r.converged, "record did not converge at " + where);
        if (!r.converged) continue;
        crit.require(r.half_dist_ok, "witness beyond half distance at " + where);
        const double rz = r.z.coords.norm();
        const double closed_form = cigar::ricci_norm_at_r(rz);
        crit.require(std::abs(r.ric_at_z - closed_form) <= 1e-5,
                     "|Rc|(z) = " + format_double(r.ric_at_z) + " vs closed form " +
                         format_double(closed_form) + " at " + where);
        if (std::abs(r.d - 5.0) < 0.1) k_at_5 = r.K_ratio;
    }
    crit.require(k_at_5 > 0.0, "no record at d = 5");
    for (const auto& r : records)
        if (r.converged)
            crit.require(r.K_ratio <= k_at_5 + 1e-12,
                         "K_ratio " + format_double(r.K_ratio) + " exceeds the d = 5 fit at d = " +
                             format_double(r.d));

    const auto summary = liminf_summary(records);
    crit.require(summary.envelope_decreasing, "envelope not decreasing");
    crit.require(summary.envelope.back() < 0.01,
                 "envelope " + format_double(summary.envelope.back()) + " >= 0.01 at d = 40");
    crit.finish();
}

void criterion_rho() {
    Criterion crit("7 rho analysis");
    RhoOptions opts;

    // flat closed forms, exact to 1e-8
    auto flat = build_model(ModelSpec{EuclideanSpec{2, "const", 0.25}});
    auto fphi = make_phi(*flat, PhiSpec::custom("const"));
    auto fsample = rho(*flat, *fphi, origin(2), pt({2.0, 1.0}), 1.5, opts);
    const double fh = fsample.stencil_h;
    crit.require(grad_identity_check(*flat, *fphi, fsample, fh, opts) <= 1e-8,
                 "flat gradient identity above 1e-8");
    crit.require(hj_residual(*flat, *fphi, fsample, fh, opts) <= 1e-8,
                 "flat HJ residual above 1e-8");
    const auto flap = laplacian_comparison(*flat, *fphi, fsample, fh, opts);
    crit.require(std::abs(flap.lhs - flap.rhs) <= 1e-8, "flat Laplacian comparison above 1e-8");
    const auto fker = phi_kernel_check(*flat, *fphi, fsample, fh, opts);
    crit.require(std::abs(fker.residual) <= 1e-8, "flat kernel check above 1e-8");

    // cigar battery: 7 x 7 grid in [0.5, 3]^2, s_bar in {1, 2, 4}
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    auto phi = make_phi(*cigar, PhiSpec::cR(0.25));
    int samples = 0, nonsmooth = 0;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            for (double s_bar : {1.0, 2.0, 4.0}) {
                const ChartPoint y = pt({0.5 + 2.5 * i / 6.0, 0.5 + 2.5 * j / 6.0});
                const RhoSample sample = rho(*cigar, *phi, origin(2), y, s_bar, opts);
                ++samples;
                if (!sample.smooth_flag) {
                    ++nonsmooth;
                    continue;
                }
                const double h = sample.stencil_h;
                const std::string where = "y = (" + format_double(y.coords[0]) + ", " +
                                          format_double(y.coords[1]) +
                                          "), s_bar = " + format_double(s_bar);
                const double grad_res = grad_identity_check(*cigar, *phi, sample, h, opts);
                crit.require(grad_res <= 1e-3,
                             "grad residual " + format_double(grad_res) + " at " + where);
                // measured two octaves above the base step; below that the
                // residual sits on the K-quadrature floor of rho
                const double hj1 = hj_residual(*cigar, *phi, sample, 4.0 * h, opts);
                const double hj2 = hj_residual(*cigar, *phi, sample, 2.0 * h, opts);
                if (hj2 > 1e-7)
                    crit.require(hj1 / hj2 >= 2.0,
                                 "HJ order below 1 (ratio " + format_double(hj1 / hj2) + ") at " +
                                     where);
                const auto lap = laplacian_comparison(*cigar, *phi, sample, h, opts);
                crit.require(lap.holds, "Laplacian comparison violated at " + where);
                const auto ker = phi_kernel_check(*cigar, *phi, sample, h, opts);
                crit.require(ker.residual <= InequalityLedger::tolerance,
                             "kernel check violated at " + where);
            }
    std::printf("    non-smooth fraction: %d/%d\n", nonsmooth, samples);
    crit.finish();
}

void criterion_gradient_flow() {
    Criterion crit("8 gradient flow");
    auto cigar = build_model(ModelSpec{CigarSpec{}});
    auto rep = gradient_flow_check(*cigar, pt({1.0, 0.0}), 5.0, 1e-3);
    crit.require(rep.complete && rep.max_residual <= 1e-6,
                 "cigar residual " + format_double(rep.max_residual) + " > 1e-6");
    auto bryant = build_model(ModelSpec{BryantSpec{3, -0.2, 60.0, 1e-8}});
    auto repb = gradient_flow_check(*bryant, pt({1.0, 0.0, 0.0}), 5.0, 1e-3);
    crit.require(repb.complete && repb.max_residual <= 1e-4,
                 "bryant residual " + format_double(repb.max_residual) + " > 1e-4");
    crit.finish();
}

void criterion_determinism() {
    Criterion crit("9 determinism");
    const char* cli = std::getenv("PHIGEO_CLI");
    if (cli == nullptr) {
        crit.require(false, "PHIGEO_CLI not set");
        crit.finish();
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "phigeo_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "config.json");
        f << R"({
            "model": {"kind": "cigar"},
            "c": [0.25],
            "experiments": ["geodesic", "decay"],
            "resolution": {"K": 128},
            "targets": {"distances": [5.0, 8.0]},
            "seed": 42
        })";
    }
    auto run = [&](const std::string& out) {
        const std::string cmd = std::string(cli) + " --config " + (dir / "config.json").string() +
                                " --out " + (dir / out).string() + " > " +
                                (dir / (out + ".log")).string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    crit.require(run("a") == 0, "first run failed");
    crit.require(run("b") == 0, "second run failed");
    if (crit.pass) {
        int compared = 0;
        for (const auto& e : fs::directory_iterator(dir / "a")) {
            if (e.path().extension() != ".csv") continue;
            const std::string name = e.path().filename().string();
            const std::string a = read_text_file(e.path().string());
            const std::string b = read_text_file((dir / "b" / name).string());
            crit.require(a == b, "CSV differs between runs: " + name);
            ++compared;
        }
        crit.require(compared > 0, "no CSVs produced");
    }
    crit.finish();
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    criterion_identities();
    criterion_conservation();
    criterion_variation();
    criterion_ledgers();
    criterion_c_window();
    criterion_decay();
    criterion_rho();
    criterion_gradient_flow();
    criterion_determinism();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
