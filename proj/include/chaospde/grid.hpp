#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaospde {

/// Uniform space-time grid on [x_min, x_max] x [0, T].
struct GridSpec {
    double x_min = -10.0;
    double x_max = 10.0;
    std::size_t nx = 401;
    double T = 0.5;
    std::size_t nt = 201;

    /// Throws ValidationError unless x_min < x_max, nx >= 3, T > 0 and nt >= 2.
    void validate() const;

    double dx() const noexcept { return (x_max - x_min) / static_cast<double>(nx - 1); }
    double dt() const noexcept { return T / static_cast<double>(nt - 1); }
    double x(std::size_t i) const noexcept { return x_min + dx() * static_cast<double>(i); }
    double t(std::size_t n) const noexcept { return dt() * static_cast<double>(n); }
    std::vector<double> nodes() const;
    std::vector<double> times() const;

    bool operator==(const GridSpec&) const = default;
};

/// Real values on a grid: either one row per time level or a single
/// time-independent row. Row-major, `levels() x nodes()`.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::size_t levels, std::size_t nodes, double fill = 0.0);

    static GridFunction space(const GridSpec& grid, double fill = 0.0) {
        return GridFunction(1, grid.nx, fill);
    }
    static GridFunction space_time(const GridSpec& grid, double fill = 0.0) {
        return GridFunction(grid.nt, grid.nx, fill);
    }

    std::size_t levels() const noexcept { return levels_; }
    std::size_t nodes() const noexcept { return nodes_; }
    bool time_dependent() const noexcept { return levels_ > 1; }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t level, std::size_t node) noexcept {
        return values_[level * nodes_ + node];
    }
    double operator()(std::size_t level, std::size_t node) const noexcept {
        return values_[level * nodes_ + node];
    }

    std::span<double> row(std::size_t level) noexcept {
        return {values_.data() + level * nodes_, nodes_};
    }
    std::span<const double> row(std::size_t level) const noexcept {
        return {values_.data() + level * nodes_, nodes_};
    }
    /// Row for a time level, broadcasting time-independent data.
    std::span<const double> row_at(std::size_t level) const noexcept {
        return row(levels_ == 1 ? 0 : level);
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool all_finite() const noexcept;
    bool is_zero() const noexcept;

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double c) noexcept;

    bool operator==(const GridFunction&) const = default;

private:
    std::size_t levels_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> values_;
};

/// Trapezoid-weighted discrete L2 norm of one row.
double l2_norm(std::span<const double> row, double dx) noexcept;
/// max_i |row_i|
double sup_norm(std::span<const double> row) noexcept;
/// sup over time levels of the row L2 norms (plain L2 for one row).
double sup_t_l2_norm(const GridFunction& f, double dx) noexcept;
/// sup over all values.
double sup_norm(const GridFunction& f) noexcept;

} // namespace chaospde
