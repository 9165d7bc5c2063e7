#include <doctest.h>

#include <phigeo/decay.hpp>
#include <phigeo/models.hpp>

#include "common.hpp"

#include <cmath>

using namespace phigeo;
using namespace phigeo::testutil;

namespace {

std::shared_ptr<ManifoldModel> cigar_model() { return build_model(ModelSpec{CigarSpec{}}); }

ChartPoint cigar_target(double d) { return pt(cigar::radius_at_distance(d), 0.0); }

}  // namespace

TEST_CASE("decay_run: cigar targets at d = 5 and d = 10") {
    auto m = cigar_model();
    const double c = 0.25;
    DecayOptions opts;
    opts.K = 256;
    auto records = decay_run(*m, c, pt(0, 0), {cigar_target(5.0), cigar_target(10.0)}, opts);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        CHECK(r.converged);
        CHECK(r.half_dist_ok);
        CHECK(r.C >= 0.5 - 1e-6);
        CHECK(r.C < 1.0);
        CHECK(r.lhs < r.paper_bound);
        CHECK(r.paper_bound == doctest::Approx((2.0 + std::sqrt(1.5)) / 0.25));
    }
    CHECK(records[0].d == doctest::Approx(5.0).epsilon(1e-5));
    CHECK(records[1].d == doctest::Approx(10.0).epsilon(1e-5));

    // witness oracle: on the radial minimizer |Rc|(z) = (1/sqrt 2)/(1+r_z^2),
    // and the best point in the admissible window is the farthest one, which
    // is y itself
    for (const auto& r : records) {
        const double rz = r.z.coords.norm();
        CHECK(r.ric_at_z == doctest::Approx(cigar::ricci_norm_at_r(rz)).epsilon(1e-6));
        const double ry = r.y.coords.norm();
        CHECK(rz == doctest::Approx(ry).epsilon(0.02));
        CHECK(r.K_ratio == doctest::Approx(r.ric_at_z * std::sqrt(r.d + 1.0)).epsilon(1e-12));
    }
    // farther witness sees smaller curvature
    CHECK(records[1].ric_at_z < records[0].ric_at_z);
}

TEST_CASE("decay_run: validation") {
    auto flat = build_model(ModelSpec{EuclideanSpec{2, "const", 0.25}});
    CHECK_THROWS_AS((void)decay_run(*flat, 0.25, pt(0, 0), {pt(3, 0)}), UsageError);
    auto m = cigar_model();
    // d(0, (1,0)) = 1.76 <= 2: no room for the trapezoid plateau
    CHECK_THROWS_AS((void)decay_run(*m, 0.25, pt(0, 0), {pt(1, 0)}), UsageError);
}

TEST_CASE("liminf_summary: envelope over a distance ladder") {
    auto m = cigar_model();
    DecayOptions opts;
    opts.K = 256;
    auto records = decay_run(*m, 0.25, pt(0, 0),
                             {cigar_target(5.0), cigar_target(8.0), cigar_target(12.0)}, opts);
    auto summary = liminf_summary(records);
    REQUIRE(summary.d_sorted.size() == 3);
    CHECK(summary.envelope_decreasing);
    CHECK(summary.envelope.back() < summary.envelope.front());
    CHECK(summary.fitted_K > 0.0);
    for (const auto& r : records) CHECK(r.K_ratio <= summary.fitted_K + 1e-15);
    CHECK(summary.tail_max_ric <= records[0].ric_at_z);
}

TEST_CASE("liminf_summary: needs three distinct distances") {
    auto m = cigar_model();
    DecayOptions opts;
    opts.K = 128;
    auto records = decay_run(*m, 0.25, pt(0, 0), {cigar_target(5.0), cigar_target(5.0)}, opts);
    CHECK_THROWS_AS((void)liminf_summary(records), DataError);
    CHECK_THROWS_AS((void)liminf_summary(std::vector<DecayRecord>{}), DataError);
}

TEST_CASE("c_window_check flags violations and passes honest records") {
    auto m = cigar_model();
    DecayOptions opts;
    opts.K = 128;
    auto records = decay_run(*m, 0.25, pt(0, 0), {cigar_target(5.0)}, opts);
    auto ok = c_window_check(records);
    CHECK(ok.all_below_one);
    CHECK(ok.lower_bound_holds);
    CHECK(ok.violations.empty());

    auto tampered = records;
    tampered[0].C = 1.2;
    auto bad = c_window_check(tampered);
    CHECK_FALSE(bad.all_below_one);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].find(">= 1") != std::string::npos);

    tampered[0].C = 0.3;
    auto low = c_window_check(tampered);
    CHECK_FALSE(low.lower_bound_holds);
    CHECK(low.violations[0].find("< 1/2") != std::string::npos);

    // non-converged records are skipped
    tampered[0].converged = false;
    auto skipped = c_window_check(tampered);
    CHECK(skipped.all_below_one);
    CHECK(skipped.violations.empty());
}

TEST_CASE("c window is one-sided for large c") {
    auto m = cigar_model();
    DecayOptions opts;
    opts.K = 256;
    auto records = decay_run(*m, 1.0, pt(0, 0), {cigar_target(5.0)}, opts);
    REQUIRE(records[0].converged);
    CHECK(records[0].C < 1.0 - 1e-8);
    auto report = c_window_check(records);
    CHECK(report.all_below_one);
}

TEST_CASE("decay CSV format") {
    CHECK(decay_csv_header() == "model,c,d,C,J,lhs,paper_bound,ric_at_z,K_ratio,half_dist_ok,converged");
    DecayRecord r;
    r.c = 0.25;
    r.d = 5.0;
    r.C = 0.875;
    r.J = 6.5;
    r.lhs = 1.25;
    r.paper_bound = 12.898979485566356;
    r.ric_at_z = 0.00193;
    r.K_ratio = 0.0047277;
    r.half_dist_ok = true;
    r.converged = true;
    CHECK(decay_csv_row("cigar", r) ==
          "cigar,0.25,5,0.875,6.5,1.25,12.898979485566356,0.00193,0.0047277,1,1");
}
