#pragma once

// Dense direct solve of the whole coupled Crank-Nicolson system: every
// interior node of every coefficient at every time level in one matrix.

#include "chaospde/propagator.hpp"

#include <Eigen/Dense>

namespace chaospde::testing {

inline ChaosField monolithic_solve(const ProblemSpec& spec) {
    const auto& trunc = *spec.truncation;
    const auto& grid = spec.grid;
    const std::size_t m = grid.nx - 2;
    const std::size_t steps = grid.nt - 1;
    const std::size_t ng = trunc.size();
    const double dx = grid.dx(), dt = grid.dt();
    const double r = 1.0 / (dx * dx);
    const auto n_unknowns = static_cast<Eigen::Index>(ng * steps * m);
    auto idx = [&](std::size_t g, std::size_t n, std::size_t j) {
        // n in 1..steps, j in 0..m-1 (interior node j+1)
        return static_cast<Eigen::Index>((g * steps + (n - 1)) * m + j);
    };

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_unknowns, n_unknowns);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_unknowns);

    // contribution coef * u_beta(level, node) to row `row`
    auto add = [&](Eigen::Index row, std::size_t g, std::size_t level, std::size_t j, double coef) {
        if (level == 0) {
            const auto* g0 = spec.G.find(trunc[g]);
            if (g0)
                b(row) -= coef * (*g0)(0, j + 1);
        } else {
            A(row, idx(g, level, j)) += coef;
        }
    };

    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gamma = trunc[g];
        const auto* f = spec.F.find(gamma);
        for (std::size_t n = 1; n <= steps; ++n)
            for (std::size_t j = 0; j < m; ++j) {
                const auto row = idx(g, n, j);
                for (std::size_t lvl : {n, n - 1}) {
                    const double sign = lvl == n ? 1.0 : -1.0;
                    add(row, g, lvl, j, sign / dt + r);
                    if (j > 0)
                        add(row, g, lvl, j - 1, -0.5 * r);
                    if (j + 1 < m)
                        add(row, g, lvl, j + 1, -0.5 * r);
                }
                for (const auto& [alpha, beta] : decompositions(gamma)) {
                    const auto* q = spec.Qb.find(alpha);
                    if (!q)
                        continue;
                    const std::size_t gb = *trunc.index_of(beta);
                    const double qa = 0.5 * (*q)(0, j + 1);
                    add(row, gb, n, j, qa);
                    add(row, gb, n - 1, j, qa);
                }
                if (f)
                    b(row) += 0.5 * (f->row_at(n - 1)[j + 1] + f->row_at(n)[j + 1]);
            }
    }
    const Eigen::VectorXd x = A.partialPivLu().solve(b);

    ChaosField U(spec.truncation, grid, SpaceNorm::sup_t_l2_in_x, true);
    for (std::size_t g = 0; g < ng; ++g) {
        auto c = GridFunction::space_time(grid);
        if (const auto* g0 = spec.G.find(trunc[g]))
            for (std::size_t j = 0; j < grid.nx; ++j)
                c(0, j) = (*g0)(0, j);
        for (std::size_t n = 1; n <= steps; ++n)
            for (std::size_t j = 0; j < m; ++j)
                c(n, j + 1) = x(idx(g, n, j));
        U.set(g, std::move(c));
    }
    return U;
}

inline double max_abs_diff(const ChaosField& a, const ChaosField& b) {
    double worst = 0.0;
    for (const auto& gamma : a.truncation().members()) {
        const auto ca = a.coefficient(gamma);
        const auto cb = b.coefficient(gamma);
        for (std::size_t k = 0; k < ca.values().size(); ++k)
            worst = std::max(worst, std::abs(ca.values()[k] - cb.values()[k]));
    }
    return worst;
}

} // namespace chaospde::testing
