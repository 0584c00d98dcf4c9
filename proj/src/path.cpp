#include "ldexpand/path.hpp"

#include <algorithm>
#include <cmath>

#include "ldexpand/error.hpp"

namespace ldexpand {

double PathGrid::operator()(double t) const {
    const std::size_t N = n();
    if (N == 0) return phi.empty() ? 0.0 : phi[0];
    const double s = std::clamp(t / T, 0.0, 1.0) * static_cast<double>(N);
    const std::size_t i = std::min(static_cast<std::size_t>(s), N - 1);
    const double w = s - static_cast<double>(i);
    return phi[i] + w * (phi[i + 1] - phi[i]);
}

PathGrid PathGrid::resampled(std::size_t m) const {
    PathGrid out(T, m);
    for (std::size_t i = 0; i <= m; ++i) out.phi[i] = (*this)(out.t(i));
    return out;
}

double sup_distance(const PathGrid& a, const PathGrid& b) {
    require(a.n() == b.n(), "sup_distance: grids differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.phi.size(); ++i) d = std::max(d, std::abs(a.phi[i] - b.phi[i]));
    return d;
}

TiltPath::TiltPath(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    require(!knots_.empty() && knots_.size() == values_.size(), "tilt path needs matching non-empty knots");
    require(std::is_sorted(knots_.begin(), knots_.end()), "tilt path knots must increase");
}

double TiltPath::operator()(double t) const {
    const std::size_t n = knots_.size();
    if (n == 1) return values_[0];
    std::size_t i;
    if (t <= knots_[0])
        i = 0;
    else if (t >= knots_[n - 1])
        i = n - 2;
    else
        i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin()) - 1;
    const double w = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

double sup_norm(const SamplePath& p) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        s = std::max(s, std::abs(p.values[k]));
        if (p.jump[k] != 0.0) s = std::max(s, std::abs(p.left_limit(k)));
    }
    return s;
}

}  // namespace ldexpand
