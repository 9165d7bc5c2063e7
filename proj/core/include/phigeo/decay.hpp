#pragma once

#include "phigeo/variation.hpp"

#include <vector>

namespace phigeo {

/// One endpoint-pair curvature-decay experiment.
struct DecayRecord {
    ChartPoint x, y;
    double d = 0.0;  // Riemannian distance
    double c = 0.0;
    double C = 0.0;
    double J = 0.0;
    double lhs = 0.0;          // int zeta^2 |Rc|^2 over the minimizer
    double paper_bound = 0.0;  // (n + sqrt(1+2c)) / c
    ChartPoint z;              // witness
    double ric_at_z = 0.0;     // |Rc|(z)
    bool half_dist_ok = false; // d(z,y) <= d/2, checked with actual distances
    double K_ratio = 0.0;      // |Rc|(z) * sqrt(d+1)
    bool converged = false;
};

struct DecayOptions {
    int K = 512;
    int multistart = 3;
    std::uint64_t seed = 0;
    bool cross_check_shooting = true;
};

/// For each target y: s_bar = d(x,y), minimize J, evaluate the trapezoid-zeta
/// ledger, and pick the witness z as the |Rc| argmin over the half-path
/// segment localized through the speed bound |S| < sqrt(1+2c).
std::vector<DecayRecord> decay_run(const ManifoldModel& model, double c, const ChartPoint& x,
                                   const std::vector<ChartPoint>& targets,
                                   const DecayOptions& opts = {});

struct DecaySummary {
    double fitted_K = 0.0;        // max K_ratio over valid records
    double tail_max_ric = 0.0;    // max ric_at_z over the far half of records
    bool envelope_decreasing = true;
    std::vector<double> d_sorted;
    std::vector<double> envelope;  // min over tails of ric_at_z
};

/// Sort by d and check that min_{d' >= d} ric_at_z is nonincreasing toward 0.
DecaySummary liminf_summary(const std::vector<DecayRecord>& records);

struct CWindowReport {
    bool all_below_one = true;      // C < 1 - 1e-8 on valid records
    bool lower_bound_holds = true;  // C >= 1/2 - 1e-6 whenever c <= 1/4
    std::vector<std::string> violations;
};

CWindowReport c_window_check(const std::vector<DecayRecord>& records);

std::string decay_csv_header();
std::string decay_csv_row(const std::string& model, const DecayRecord& r);

}  // namespace phigeo
