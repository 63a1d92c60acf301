#include "chaospde/grid.hpp"

#include "chaospde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chaospde {

void GridSpec::validate() const {
    if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw ValidationError("grid requires finite x_min < x_max");
    if (nx < 3)
        throw ValidationError("grid requires nx >= 3 (got " + std::to_string(nx) + ")");
    if (!(T > 0.0) || !std::isfinite(T))
        throw ValidationError("grid requires a positive finite time horizon T");
    if (nt < 2)
        throw ValidationError("grid requires nt >= 2 (got " + std::to_string(nt) + ")");
}

std::vector<double> GridSpec::nodes() const {
    std::vector<double> v(nx);
    for (std::size_t i = 0; i < nx; ++i)
        v[i] = x(i);
    return v;
}

std::vector<double> GridSpec::times() const {
    std::vector<double> v(nt);
    for (std::size_t n = 0; n < nt; ++n)
        v[n] = t(n);
    return v;
}

GridFunction::GridFunction(std::size_t levels, std::size_t nodes, double fill)
    : levels_(levels), nodes_(nodes), values_(levels * nodes, fill) {}

bool GridFunction::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool GridFunction::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    if (other.nodes_ != nodes_ || other.levels_ != levels_)
        throw ShapeError("grid function shapes differ in +=");
    for (std::size_t i = 0; i < values_.size(); ++i)
        values_[i] += other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    if (other.nodes_ != nodes_ || other.levels_ != levels_)
        throw ShapeError("grid function shapes differ in -=");
    for (std::size_t i = 0; i < values_.size(); ++i)
        values_[i] -= other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(double c) noexcept {
    for (auto& v : values_)
        v *= c;
    return *this;
}

double l2_norm(std::span<const double> row, double dx) noexcept {
    if (row.empty())
        return 0.0;
    double s = 0.0;
    for (double v : row)
        s += v * v;
    s -= 0.5 * (row.front() * row.front() + row.back() * row.back());
    return std::sqrt(std::max(0.0, s * dx));
}

double sup_norm(std::span<const double> row) noexcept {
    double m = 0.0;
    for (double v : row)
        m = std::max(m, std::abs(v));
    return m;
}

double sup_t_l2_norm(const GridFunction& f, double dx) noexcept {
    double m = 0.0;
    for (std::size_t n = 0; n < f.levels(); ++n)
        m = std::max(m, l2_norm(f.row(n), dx));
    return m;
}

double sup_norm(const GridFunction& f) noexcept {
    return sup_norm(f.values());
}

} // namespace chaospde
