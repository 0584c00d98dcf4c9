#pragma once

#include <vector>

namespace ldexpand {

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

/// Gauss-Legendre rule of the given order, computed by Newton iteration on the
/// Legendre polynomial roots. Rules are cached per order.
const GaussLegendreRule& gauss_legendre(int order);

/// Composite Simpson on [a, b] with a fixed number of panels.
template <class F>
double simpson(F&& f, double a, double b, int panels = 2) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace ldexpand
