#include "phigeo/decay.hpp"

#include "phigeo/io.hpp"

#include <algorithm>
#include <cmath>

namespace phigeo {

std::vector<DecayRecord> decay_run(const ManifoldModel& model, double c, const ChartPoint& x,
                                   const std::vector<ChartPoint>& targets,
                                   const DecayOptions& opts) {
    if (!model.soliton())
        throw UsageError("decay_run: model rejected, not a soliton with R > 0");
    const ScaledField phi(c, model.scalar_curvature());
    const int n = model.dim();
    const double paper_bound = (n + std::sqrt(1.0 + 2.0 * c)) / c;
    const double speed_bound = std::sqrt(1.0 + 2.0 * c);

    std::vector<DecayRecord> records;
    for (const ChartPoint& y : targets) {
        DecayRecord rec;
        rec.x = x;
        rec.y = y;
        rec.c = c;
        rec.paper_bound = paper_bound;

        rec.d = riemann_distance(model, x, y, 256, opts.seed);
        if (!(rec.d > 2.0))
            throw UsageError("decay_run: target at distance <= 2; the trapezoid cutoff needs a "
                             "nonempty plateau");

        GeodesicSolution sol =
            minimize_j(model, phi, x, y, rec.d, opts.K, opts.multistart, opts.seed);
        rec.converged = sol.converged;

        if (opts.cross_check_shooting && sol.converged) {
            try {
                const GeodesicSolution shot = shoot_bvp(model, phi, x, y, rec.d,
                                                        sol.velocities.front(), 1e-8 * (1 + rec.d));
                if (shot.converged &&
                    std::abs(shot.J_value - sol.J_value) > 1e-3 * std::abs(sol.J_value))
                    rec.converged = false;  // solver disagreement: flag the record
            } catch (const std::runtime_error&) {
                // shooting failure is not fatal; the direct minimizer stands
            }
        }

        rec.C = sol.C_estimate;
        rec.J = sol.J_value;

        if (rec.converged) {
            const int K = sol.path.segments();
            const TestFunction zeta = TestFunction::trapezoid(rec.d, K);
            rec.lhs = inequality_369894(model, sol, zeta, c).lhs;

            // localization: d(gamma(s), y) <= speed_bound * (s_bar - s), so
            // samples with s >= s_bar - (d/2)/speed_bound are within half the
            // distance of y
            const double s_min = rec.d - 0.5 * rec.d / speed_bound;
            int best_k = K;
            double best_ric = std::numeric_limits<double>::infinity();
            for (int k = 0; k <= K; ++k) {
                const double s = rec.d * k / K;
                if (s < s_min) continue;
                const CurvaturePack pack = curvature_pack(model, sol.path.point(k));
                const double ric = std::sqrt(std::max(0.0, pack.ricci_norm2));
                if (ric < best_ric) {
                    best_ric = ric;
                    best_k = k;
                }
            }
            rec.z = sol.path.point(best_k);
            rec.ric_at_z = best_ric;
            rec.K_ratio = best_ric * std::sqrt(rec.d + 1.0);
            const double dzy = (rec.z.coords - y.coords).norm() == 0.0
                                   ? 0.0
                                   : riemann_distance(model, rec.z, y, 256, opts.seed);
            rec.half_dist_ok = dzy <= 0.5 * rec.d + 1e-6;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

DecaySummary liminf_summary(const std::vector<DecayRecord>& records) {
    std::vector<const DecayRecord*> valid;
    for (const auto& r : records)
        if (r.converged) valid.push_back(&r);
    std::sort(valid.begin(), valid.end(), [](const DecayRecord* a, const DecayRecord* b) {
        if (a->d != b->d) return a->d < b->d;
        return std::lexicographical_compare(
            a->z.coords.data(), a->z.coords.data() + a->z.coords.size(), b->z.coords.data(),
            b->z.coords.data() + b->z.coords.size());
    });
    size_t distinct = 0;
    for (size_t i = 0; i < valid.size(); ++i)
        if (i == 0 || valid[i]->d != valid[i - 1]->d) ++distinct;
    if (distinct < 3)
        throw DataError("liminf_summary: fewer than 3 valid records at distinct distances");

    DecaySummary summary;
    double running_min = std::numeric_limits<double>::infinity();
    for (const DecayRecord* r : valid) {
        summary.d_sorted.push_back(r->d);
        running_min = std::min(running_min, r->ric_at_z);
        summary.envelope.push_back(running_min);
        summary.fitted_K = std::max(summary.fitted_K, r->K_ratio);
    }
    // strictly new minima at each new distance scale
    for (size_t i = 1; i < summary.envelope.size(); ++i)
        if (summary.d_sorted[i] > summary.d_sorted[i - 1] &&
            summary.envelope[i] >= summary.envelope[i - 1])
            summary.envelope_decreasing = false;

    const size_t tail_start = valid.size() / 2;
    for (size_t i = tail_start; i < valid.size(); ++i)
        summary.tail_max_ric = std::max(summary.tail_max_ric, valid[i]->ric_at_z);
    return summary;
}

CWindowReport c_window_check(const std::vector<DecayRecord>& records) {
    CWindowReport report;
    for (const auto& r : records) {
        if (!r.converged) continue;
        if (!(r.C < 1.0 - 1e-8)) {
            report.all_below_one = false;
            report.violations.push_back("C = " + format_double(r.C) + " >= 1 at d = " +
                                        format_double(r.d) + ", c = " + format_double(r.c));
        }
        if (r.c <= 0.25 && !(r.C >= 0.5 - 1e-6)) {
            report.lower_bound_holds = false;
            report.violations.push_back("C = " + format_double(r.C) + " < 1/2 at d = " +
                                        format_double(r.d) + ", c = " + format_double(r.c) +
                                        " <= 1/4");
        }
    }
    return report;
}

std::string decay_csv_header() {
    return "model,c,d,C,J,lhs,paper_bound,ric_at_z,K_ratio,half_dist_ok,converged";
}

std::string decay_csv_row(const std::string& model, const DecayRecord& r) {
    return join_csv({model, format_double(r.c), format_double(r.d), format_double(r.C),
                     format_double(r.J), format_double(r.lhs), format_double(r.paper_bound),
                     format_double(r.ric_at_z), format_double(r.K_ratio),
                     r.half_dist_ok ? "1" : "0", r.converged ? "1" : "0"});
}

}  // namespace phigeo
