#include "phigeo/models.hpp"

#include "phigeo/geometry.hpp"

#include <cmath>

namespace phigeo {

namespace {

bool finite_coords(const ChartPoint& p) { return p.coords.allFinite(); }

class EuclideanModel final : public ManifoldModel {
public:
    EuclideanModel(int n, std::string phi_label, double c0)
        : n_(n), phi_label_(std::move(phi_label)), f_(0.0), R_(0.0), const_phi_(c0) {
        half_quad_ = std::make_unique<LambdaField>(
            [](const ChartPoint& p) { return 0.5 * (1.0 + p.coords.squaredNorm()); },
            [](const ChartPoint& p) { return Vec(p.coords); },
            [](const ChartPoint& p) {
                return Mat(Mat::Identity(p.coords.size(), p.coords.size()));
            });
    }

    int dim() const override { return n_; }
    bool soliton() const override { return false; }
    std::string name() const override { return "euclidean" + std::to_string(n_); }
    bool in_domain(const ChartPoint& p) const override {
        return p.coords.size() == n_ && finite_coords(p);
    }
    MetricJet metric_jet(const ChartPoint& p) const override {
        require_in_domain(p);
        return MetricJet{Mat::Identity(n_, n_), Tensor3(n_), Tensor4(n_)};
    }
    const ScalarField& potential() const override { return f_; }
    const ScalarField& scalar_curvature() const override { return R_; }
    const ScalarField* named_field(const std::string& label) const override {
        if (label == "const") return &const_phi_;
        if (label == "half_one_plus_x2") return half_quad_.get();
        return nullptr;
    }

private:
    int n_;
    std::string phi_label_;
    ConstantField f_, R_, const_phi_;
    std::unique_ptr<LambdaField> half_quad_;
};

/// Scaled cigar, possibly crossed with k flat factors. Chart is global
/// Cartesian; the conformal factor 4/(1 + x1^2 + x2^2) acts on the first two
/// coordinates only.
class CigarModel final : public ManifoldModel {
public:
    explicit CigarModel(int flat_factors) : k_(flat_factors), n_(2 + flat_factors) {
        f_ = std::make_unique<LambdaField>(
            [](const ChartPoint& p) { return -std::log(1.0 + q2(p)); },
            [this](const ChartPoint& p) {
                Vec out = Vec::Zero(n_);
                const double w = 1.0 + q2(p);
                out[0] = -2.0 * p.coords[0] / w;
                out[1] = -2.0 * p.coords[1] / w;
                return out;
            },
            [this](const ChartPoint& p) {
                Mat out = Mat::Zero(n_, n_);
                const double w = 1.0 + q2(p);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        out(i, j) = -2.0 * (i == j ? 1.0 : 0.0) / w +
                                    4.0 * p.coords[i] * p.coords[j] / (w * w);
                return out;
            });
        R_ = std::make_unique<LambdaField>(
            [](const ChartPoint& p) { return 1.0 / (1.0 + q2(p)); },
            [this](const ChartPoint& p) {
                Vec out = Vec::Zero(n_);
                const double w = 1.0 + q2(p);
                out[0] = -2.0 * p.coords[0] / (w * w);
                out[1] = -2.0 * p.coords[1] / (w * w);
                return out;
            },
            [this](const ChartPoint& p) {
                Mat out = Mat::Zero(n_, n_);
                const double w = 1.0 + q2(p);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        out(i, j) = -2.0 * (i == j ? 1.0 : 0.0) / (w * w) +
                                    8.0 * p.coords[i] * p.coords[j] / (w * w * w);
                return out;
            });
        neg_half_R_ = std::make_unique<ScaledField>(-0.5, *R_);
    }

    int dim() const override { return n_; }
    bool soliton() const override { return true; }
    std::string name() const override {
        return k_ == 0 ? "cigar" : "cigar_x_R" + std::to_string(k_);
    }
    bool in_domain(const ChartPoint& p) const override {
        return p.coords.size() == n_ && finite_coords(p);
    }

    MetricJet metric_jet(const ChartPoint& p) const override {
        require_in_domain(p);
        MetricJet jet{Mat::Identity(n_, n_), Tensor3(n_), Tensor4(n_)};
        const double w = 1.0 + q2(p);
        const double psi = 4.0 / w;
        for (int i = 0; i < 2; ++i) jet.g(i, i) = psi;
        // d_k psi = -8 x_k / w^2, d_l d_k psi = -8 delta_kl / w^2 + 32 x_k x_l / w^3
        for (int k = 0; k < 2; ++k) {
            const double dpsi = -8.0 * p.coords[k] / (w * w);
            for (int i = 0; i < 2; ++i) jet.dg(k, i, i) = dpsi;
        }
        for (int l = 0; l < 2; ++l)
            for (int k = 0; k < 2; ++k) {
                const double d2psi = -8.0 * (k == l ? 1.0 : 0.0) / (w * w) +
                                     32.0 * p.coords[k] * p.coords[l] / (w * w * w);
                for (int i = 0; i < 2; ++i) jet.d2g(l, k, i, i) = d2psi;
            }
        return jet;
    }

    const ScalarField& potential() const override { return *f_; }
    const ScalarField& scalar_curvature() const override { return *R_; }
    const ScalarField* named_field(const std::string& label) const override {
        if (label == "neg_half_R") return neg_half_R_.get();
        return nullptr;
    }

private:
    static double q2(const ChartPoint& p) {
        return p.coords[0] * p.coords[0] + p.coords[1] * p.coords[1];
    }

    int k_, n_;
    std::unique_ptr<LambdaField> f_, R_;
    std::unique_ptr<ScaledField> neg_half_R_;
};

void validate_soliton(const ManifoldModel& model) {
    std::vector<ChartPoint> grid;
    const int n = model.dim();
    for (double r : {0.0, 0.7, 1.9}) {
        Vec v = Vec::Zero(n);
        v[0] = r;
        if (n > 1) v[1] = 0.3 * r;
        grid.push_back(ChartPoint{v, 0});
    }
    const IdentityReport rep = check_soliton_identities(model, grid);
    if (rep.worst() > 10.0 * model.tolerance() || !rep.positive_R || !rep.gradf_bounded)
        throw ConstructionError(model.name() + ": soliton identity check failed, worst residual " +
                                std::to_string(rep.worst()));
}

}  // namespace

std::shared_ptr<ManifoldModel> build_model(const ModelSpec& spec) {
    std::shared_ptr<ManifoldModel> model;
    if (const auto* e = std::get_if<EuclideanSpec>(&spec.kind)) {
        if (e->n < 2 || e->n > 6) throw SpecError("euclidean: dimension must be in 2..6");
        if (e->phi_label == "const" && !(e->c0 > 0.0))
            throw SpecError("euclidean: constant phi must be positive");
        if (e->phi_label != "const" && e->phi_label != "half_one_plus_x2")
            throw SpecError("euclidean: unknown phi choice '" + e->phi_label + "'");
        model = std::make_shared<EuclideanModel>(e->n, e->phi_label, e->c0);
    } else if (std::get_if<CigarSpec>(&spec.kind)) {
        model = std::make_shared<CigarModel>(0);
    } else if (const auto* cp = std::get_if<CigarProductSpec>(&spec.kind)) {
        if (cp->k < 1 || 2 + cp->k > 6) throw SpecError("cigar_product: need 1 <= k <= 4");
        model = std::make_shared<CigarModel>(cp->k);
    } else if (const auto* b = std::get_if<BryantSpec>(&spec.kind)) {
        if (b->n < 3 || b->n > 6) throw SpecError("bryant: dimension must be in 3..6");
        const BryantProfile profile = bryant_solve(b->n, b->shoot_param, b->r_max, b->tol);
        model = make_bryant_model(profile);
    } else {
        throw SpecError("unknown model kind");
    }
    if (model->soliton()) validate_soliton(*model);
    return model;
}

}  // namespace phigeo
