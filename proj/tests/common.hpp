#pragma once

#include <phigeo/geometry.hpp>
#include <phigeo/models.hpp>

#include <memory>
#include <vector>

namespace phigeo::testutil {

inline ChartPoint pt(double a, double b) {
    ChartPoint p{Vec(2), 0};
    p.coords << a, b;
    return p;
}

inline ChartPoint pt(double a, double b, double c) {
    ChartPoint p{Vec(3), 0};
    p.coords << a, b, c;
    return p;
}

/// Uniform m x m grid on [-half, half]^2 (chart_id 0).
inline std::vector<ChartPoint> grid2d(int m, double half) {
    std::vector<ChartPoint> out;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            out.push_back(pt(-half + 2.0 * half * i / (m - 1), -half + 2.0 * half * j / (m - 1)));
    return out;
}

/// Wrapper that replaces a model's analytic metric jets with central finite
/// differences of g, step h = max(1e-4, 1e-6 (1+|coords|)). Used as an
/// independent oracle for curvature formulas.
class FdJetModel final : public ManifoldModel {
public:
    explicit FdJetModel(std::shared_ptr<const ManifoldModel> base) : base_(std::move(base)) {}

    int dim() const override { return base_->dim(); }
    bool soliton() const override { return base_->soliton(); }
    std::string name() const override { return base_->name() + "_fd"; }
    bool in_domain(const ChartPoint& p) const override { return base_->in_domain(p); }
    const ScalarField& potential() const override { return base_->potential(); }
    const ScalarField& scalar_curvature() const override { return base_->scalar_curvature(); }
    bool analytic_jets() const override { return false; }

    MetricJet metric_jet(const ChartPoint& p) const override {
        const int n = dim();
        const double h = std::max(1e-4, 1e-6 * (1.0 + p.coords.norm()));
        MetricJet jet{base_->metric(p), Tensor3(n), Tensor4(n)};
        auto at = [&](int a, double da, int b, double db) {
            ChartPoint q = p;
            q.coords[a] += da;
            if (b >= 0) q.coords[b] += db;
            return base_->metric(q);
        };
        for (int k = 0; k < n; ++k) {
            const Mat d = (at(k, h, -1, 0) - at(k, -h, -1, 0)) / (2.0 * h);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) jet.dg(k, i, j) = d(i, j);
        }
        for (int l = 0; l < n; ++l)
            for (int k = 0; k <= l; ++k) {
                Mat d2;
                if (k == l) {
                    d2 = (at(k, h, -1, 0) - 2.0 * jet.g + at(k, -h, -1, 0)) / (h * h);
                } else {
                    d2 = (at(l, h, k, h) - at(l, h, k, -h) - at(l, -h, k, h) + at(l, -h, k, -h)) /
                         (4.0 * h * h);
                }
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        jet.d2g(l, k, i, j) = d2(i, j);
                        jet.d2g(k, l, i, j) = d2(i, j);
                    }
            }
        return jet;
    }

private:
    std::shared_ptr<const ManifoldModel> base_;
};

}  // namespace phigeo::testutil
