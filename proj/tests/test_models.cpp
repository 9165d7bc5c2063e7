#include <doctest.h>

#include <phigeo/geometry.hpp>
#include <phigeo/io.hpp>
#include <phigeo/models.hpp>

#include "common.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace phigeo;
using namespace phigeo::testutil;

TEST_CASE("cigar closed forms") {
    CHECK(cigar::scalar_curvature_at_r(0.0) == doctest::Approx(1.0));
    CHECK(cigar::scalar_curvature_at_r(1.0) == doctest::Approx(0.5));
    CHECK(cigar::distance_from_origin(1.0) == doctest::Approx(1.762747174).epsilon(1e-9));
    CHECK(cigar::distance_from_origin(10.0) == doctest::Approx(5.99646).epsilon(1e-5));
    CHECK(cigar::radius_at_distance(cigar::distance_from_origin(3.7)) ==
          doctest::Approx(3.7).epsilon(1e-12));
    CHECK(cigar::ricci_norm_at_r(0.0) == doctest::Approx(1.0 / std::sqrt(2.0)));

    auto m = build_model(ModelSpec{CigarSpec{}});
    CHECK(m->dim() == 2);
    CHECK(m->soliton());
    CHECK(m->metric(pt(0, 0))(0, 0) == doctest::Approx(4.0));
    CHECK(m->potential().value(pt(1, 0)) == doctest::Approx(-std::log(2.0)));
    CHECK(m->scalar_curvature().value(pt(1, 0)) == doctest::Approx(0.5));
}

TEST_CASE("euclidean model: metric, phi fields") {
    auto m = build_model(ModelSpec{EuclideanSpec{3, "const", 0.7}});
    CHECK(m->dim() == 3);
    CHECK_FALSE(m->soliton());
    CHECK((m->metric(pt(1, 2, 3)) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(m->named_field("const") != nullptr);
    CHECK(m->named_field("const")->value(pt(0, 0, 0)) == doctest::Approx(0.7));
    REQUIRE(m->named_field("half_one_plus_x2") != nullptr);
    CHECK(m->named_field("half_one_plus_x2")->value(pt(1, 2, 2)) == doctest::Approx(5.0));
    CHECK(m->named_field("nonsense") == nullptr);
}

TEST_CASE("model spec validation errors") {
    CHECK_THROWS_AS((void)build_model(ModelSpec{EuclideanSpec{1, "const", 1.0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{EuclideanSpec{7, "const", 1.0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{EuclideanSpec{2, "const", -1.0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{EuclideanSpec{2, "const", 0.0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{EuclideanSpec{2, "bogus", 1.0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{CigarProductSpec{0}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{CigarProductSpec{5}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{BryantSpec{2, -0.2, 20.0, 1e-8}}), SpecError);
    CHECK_THROWS_AS((void)build_model(ModelSpec{BryantSpec{7, -0.2, 20.0, 1e-8}}), SpecError);
}

TEST_CASE("bryant_solve: n=3, a=-0.2 reference run") {
    auto profile = bryant_solve(3, -0.2, 20.0, 1e-8);
    CHECK(profile.n == 3);
    // R + |grad f|^2 = -a n before rescaling
    CHECK(profile.hamiltonian_constant == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(profile.scale == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(profile.max_hamiltonian_drift < 1e-7);
    // Taylor data: w3 = a / (6 (n-1))
    CHECK(profile.w3 == doctest::Approx(-0.2 / 12.0).epsilon(1e-10));
    CHECK(profile.r_grid.front() > 0.0);
    CHECK(profile.r_grid.back() == doctest::Approx(20.0));
    // w is increasing and concave-ish: w' in (0, 1]
    for (double wp : profile.wp) {
        CHECK(wp > 0.0);
        CHECK(wp <= 1.0 + 1e-12);
    }
    // f' < 0 away from the origin (potential decreasing outward)
    CHECK(profile.fp.back() < 0.0);
}

TEST_CASE("bryant_solve: degenerate shoot parameter rejected") {
    CHECK_THROWS_AS((void)bryant_solve(3, 0.0, 20.0, 1e-8), ConstructionError);
    CHECK_THROWS_AS((void)bryant_solve(3, 0.2, 20.0, 1e-8), SolverError);
}

TEST_CASE("bryant_solve: n=4 run stays on the first integral") {
    auto profile = bryant_solve(4, -0.2, 10.0, 1e-8);
    CHECK(profile.hamiltonian_constant == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(profile.max_hamiltonian_drift < 1e-7);
}

TEST_CASE("bryant profile CSV cache round-trips") {
    auto profile = bryant_solve(3, -0.2, 10.0, 1e-8);
    const std::string path =
        (std::filesystem::temp_directory_path() / "phigeo_test_profile.csv").string();
    save_bryant_profile(profile, path);
    auto loaded = load_bryant_profile(path, 3, -0.2);
    REQUIRE(loaded.r_grid.size() == profile.r_grid.size());
    for (size_t i = 0; i < profile.r_grid.size(); ++i) {
        CHECK(loaded.r_grid[i] == profile.r_grid[i]);
        CHECK(loaded.w[i] == profile.w[i]);
        CHECK(loaded.wp[i] == profile.wp[i]);
        CHECK(loaded.fp[i] == profile.fp[i]);
    }
    std::remove(path.c_str());
}

TEST_CASE("bryant model: soliton identities on a coarse grid") {
    auto m = build_model(ModelSpec{BryantSpec{3, -0.2, 20.0, 1e-8}});
    std::vector<ChartPoint> grid;
    for (double r : {0.05, 0.3, 1.0, 3.0, 8.0})
        for (double t : {0.0, 0.4, 1.1}) grid.push_back(pt(r * std::cos(t), r * std::sin(t), 0.2 * r));
    auto report = check_soliton_identities(*m, grid);
    CHECK(report.worst() < 1e-4);
    CHECK(report.positive_R);
    CHECK(report.gradf_bounded);
}

TEST_CASE("bryant model: Hamiltonian R + |grad f|^2 = 1 after rescaling") {
    auto m = build_model(ModelSpec{BryantSpec{3, -0.2, 20.0, 1e-8}});
    for (double r : {0.1, 0.5, 2.0, 6.0}) {
        const ChartPoint p = pt(r, 0.0, 0.0);
        auto pack = curvature_pack(*m, p);
        const double gradf2 = pack.grad_f.dot(Vec(m->metric(p) * pack.grad_f));
        CHECK(pack.scalar + gradf2 == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(pack.scalar > 0.0);
    }
}

TEST_CASE("|grad f| <= 1 on grids for all soliton models") {
    auto check = [](const ManifoldModel& m, const std::vector<ChartPoint>& grid) {
        for (const auto& p : grid) {
            auto pack = curvature_pack(m, p);
            const double gradf = std::sqrt(pack.grad_f.dot(Vec(m.metric(p) * pack.grad_f)));
            CHECK(gradf <= 1.0 + 1e-10);
        }
    };
    check(*build_model(ModelSpec{CigarSpec{}}), grid2d(10, 4.0));
    std::vector<ChartPoint> g3;
    for (double a = -2; a <= 2; a += 1.0)
        for (double b = -2; b <= 2; b += 1.0) g3.push_back(pt(a, b, 0.5));
    check(*build_model(ModelSpec{CigarProductSpec{1}}), g3);
    std::vector<ChartPoint> gb;
    for (double r : {0.2, 1.0, 4.0}) gb.push_back(pt(r, 0.1 * r, 0.0));
    check(*build_model(ModelSpec{BryantSpec{3, -0.2, 20.0, 1e-8}}), gb);
}

TEST_CASE("finite-difference jets agree with the bryant chart metric") {
    auto base = build_model(ModelSpec{BryantSpec{3, -0.2, 20.0, 1e-8}});
    FdJetModel fd(base);
    for (double r : {0.8, 2.5, 6.0}) {
        const ChartPoint p = pt(r, 0.3 * r, -0.1 * r);
        auto a = curvature_pack(*base, p);
        auto b = curvature_pack(fd, p);
        CHECK((a.ricci - b.ricci).cwiseAbs().maxCoeff() < 1e-4);
        CHECK(std::abs(a.scalar - b.scalar) < 1e-4);
    }
}

TEST_CASE("format_double round-trips exactly") {
    for (double x : {0.0, 1.0, -0.1, 1.0 / 3.0, 1e-300, 6.02e23, 0.6000000000000001}) {
        const std::string s = format_double(x);
        CHECK(std::stod(s) == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
}
