#pragma once

#include "phigeo/types.hpp"

#include <functional>
#include <memory>

namespace phigeo {

/// Scalar function on a chart with coordinate partials. Derivatives fall back
/// to central finite differences when a subclass does not provide them.
class ScalarField {
public:
    virtual ~ScalarField() = default;

    virtual double value(const ChartPoint& p) const = 0;

    /// d_i u
    virtual Vec partials(const ChartPoint& p) const;

    /// d_i d_j u
    virtual Mat second_partials(const ChartPoint& p) const;

    /// Finite-difference step used by the fallbacks.
    virtual double fd_step(const ChartPoint& p) const;
};

/// u == c
class ConstantField final : public ScalarField {
public:
    explicit ConstantField(double c) : c_(c) {}
    double value(const ChartPoint&) const override { return c_; }
    Vec partials(const ChartPoint& p) const override { return Vec::Zero(p.coords.size()); }
    Mat second_partials(const ChartPoint& p) const override {
        return Mat::Zero(p.coords.size(), p.coords.size());
    }

private:
    double c_;
};

/// a * u for a wrapped field.
class ScaledField final : public ScalarField {
public:
    ScaledField(double a, const ScalarField& u) : a_(a), u_(u) {}
    double value(const ChartPoint& p) const override { return a_ * u_.value(p); }
    Vec partials(const ChartPoint& p) const override { return a_ * u_.partials(p); }
    Mat second_partials(const ChartPoint& p) const override { return a_ * u_.second_partials(p); }
    double fd_step(const ChartPoint& p) const override { return u_.fd_step(p); }

private:
    double a_;
    const ScalarField& u_;
};

/// Field from callables; analytic derivative callables are optional.
class LambdaField final : public ScalarField {
public:
    using ValueFn = std::function<double(const ChartPoint&)>;
    using GradFn = std::function<Vec(const ChartPoint&)>;
    using HessFn = std::function<Mat(const ChartPoint&)>;

    explicit LambdaField(ValueFn v, GradFn g = nullptr, HessFn h = nullptr)
        : v_(std::move(v)), g_(std::move(g)), h_(std::move(h)) {}

    double value(const ChartPoint& p) const override { return v_(p); }
    Vec partials(const ChartPoint& p) const override {
        return g_ ? g_(p) : ScalarField::partials(p);
    }
    Mat second_partials(const ChartPoint& p) const override {
        return h_ ? h_(p) : ScalarField::second_partials(p);
    }

private:
    ValueFn v_;
    GradFn g_;
    HessFn h_;
};

}  // namespace phigeo
