#include "phigeo/fields.hpp"

namespace phigeo {

double ScalarField::fd_step(const ChartPoint& p) const {
    return std::max(1e-4, 1e-6 * (1.0 + p.coords.norm()));
}

Vec ScalarField::partials(const ChartPoint& p) const {
    const int n = static_cast<int>(p.coords.size());
    const double h = fd_step(p);
    Vec out(n);
    ChartPoint q = p;
    for (int i = 0; i < n; ++i) {
        q.coords = p.coords;
        q.coords[i] += h;
        const double up = value(q);
        q.coords[i] -= 2.0 * h;
        const double um = value(q);
        out[i] = (up - um) / (2.0 * h);
    }
    return out;
}

Mat ScalarField::second_partials(const ChartPoint& p) const {
    const int n = static_cast<int>(p.coords.size());
    const double h = fd_step(p);
    Mat out(n, n);
    const double u0 = value(p);
    ChartPoint q = p;
    for (int i = 0; i < n; ++i) {
        q.coords = p.coords;
        q.coords[i] += h;
        const double up = value(q);
        q.coords[i] = p.coords[i] - h;
        const double um = value(q);
        out(i, i) = (up - 2.0 * u0 + um) / (h * h);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            q.coords = p.coords;
            q.coords[i] += h;
            q.coords[j] += h;
            const double upp = value(q);
            q.coords[j] = p.coords[j] - h;
            const double upm = value(q);
            q.coords[i] = p.coords[i] - h;
            const double umm = value(q);
            q.coords[j] = p.coords[j] + h;
            const double ump = value(q);
            out(i, j) = out(j, i) = (upp - upm - ump + umm) / (4.0 * h * h);
        }
    }
    return out;
}

}  // namespace phigeo
