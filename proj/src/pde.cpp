#include "chaospde/pde.hpp"

#include "chaospde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chaospde {

void OperatorSpec::validate() const {
    if (!(M > 0.0) || !std::isfinite(M))
        throw ValidationError("operator stability constant M must be positive");
    if (!std::isfinite(w))
        throw ValidationError("operator growth rate w must be finite");
}

double stability_M(double t, double M, double w, double q_inf) {
    return M * std::exp((w + M * q_inf) * t);
}

double stability_Mtilde(double t, double M, double w, double q_inf) {
    const double rate = w + M * q_inf;
    if (std::abs(rate * t) < 1e-14)
        return M * t;
    return M * std::expm1(rate * t) / rate;
}

GridFunction solve_parabolic(const OperatorSpec& op, const GridFunction& q, const GridFunction& f,
                             const GridFunction& g, const GridSpec& grid) {
    op.validate();
    grid.validate();
    const std::size_t nx = grid.nx;
    const std::size_t nt = grid.nt;
    if (q.nodes() != nx || q.levels() != 1)
        throw ShapeError("potential must be a space grid function on the solve grid");
    if (g.nodes() != nx || g.levels() != 1)
        throw ShapeError("initial value must be a space grid function on the solve grid");
    if (f.nodes() != nx || (f.levels() != 1 && f.levels() != nt))
        throw ShapeError("force must be a space or space-time grid function on the solve grid");
    if (!q.all_finite() || !f.all_finite() || !g.all_finite())
        throw ValidationError("parabolic solve received non-finite data");

    const double dx = grid.dx();
    const double dt = grid.dt();
    const double r = dt / (dx * dx);
    const std::size_t m = nx - 2;

    // LHS = I + dt/2 (-D2 + q): constant tridiagonal, factored once.
    const double off = -0.5 * r;
    std::vector<double> diag(m);
    std::vector<double> cprime(m);
    std::vector<double> denom(m);
    for (std::size_t i = 0; i < m; ++i)
        diag[i] = 1.0 + r + 0.5 * dt * q(0, i + 1);
    denom[0] = diag[0];
    cprime[0] = off / denom[0];
    for (std::size_t i = 1; i < m; ++i) {
        denom[i] = diag[i] - off * cprime[i - 1];
        cprime[i] = off / denom[i];
    }

    GridFunction u = GridFunction::space_time(grid);
    std::copy(g.row(0).begin(), g.row(0).end(), u.row(0).begin());

    std::vector<double> rhs(m);
    for (std::size_t n = 0; n + 1 < nt; ++n) {
        auto prev = u.row(n);
        auto f0 = f.row_at(n);
        auto f1 = f.row_at(n + 1);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + 1;
            // Dirichlet: boundary values enter the stencil as zero on every level
            const double left = j == 1 ? 0.0 : prev[j - 1];
            const double right = j == m ? 0.0 : prev[j + 1];
            const double lap = left - 2.0 * prev[j] + right;
            rhs[i] = prev[j] + 0.5 * r * lap - 0.5 * dt * q(0, j) * prev[j] +
                     0.5 * dt * (f0[j] + f1[j]);
        }
        // forward sweep / back substitution
        rhs[0] /= denom[0];
        for (std::size_t i = 1; i < m; ++i)
            rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom[i];
        for (std::size_t i = m - 1; i-- > 0;)
            rhs[i] -= cprime[i] * rhs[i + 1];

        auto next = u.row(n + 1);
        next[0] = 0.0;
        next[nx - 1] = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            next[i + 1] = rhs[i];
    }
    if (!u.all_finite())
        throw NumericalError("parabolic solve produced non-finite values");
    return u;
}

Theorem1Report verify_theorem1_bound(const GridFunction& u, const GridFunction& f,
                                     const GridFunction& g, const BoundEnvelope& envelope,
                                     const GridSpec& grid, double tol_factor) {
    const double dx = grid.dx();
    const double dt = grid.dt();
    const std::size_t nt = u.levels();
    Theorem1Report rep;
    rep.lhs.resize(nt);
    rep.rhs.resize(nt);
    rep.slack.resize(nt);

    const double g_norm = l2_norm(g.row(0), dx);
    double integral = 0.0;
    double prev_f = l2_norm(f.row_at(0), dx);
    for (std::size_t n = 0; n < nt; ++n) {
        if (n > 0) {
            const double cur_f = l2_norm(f.row_at(n), dx);
            integral += 0.5 * dt * (prev_f + cur_f);
            prev_f = cur_f;
        }
        rep.lhs[n] = l2_norm(u.row(n), dx);
        rep.rhs[n] = envelope.M_of_t(grid.t(n)) * (g_norm + integral);
        rep.slack[n] = rep.rhs[n] - rep.lhs[n];
    }
    rep.min_slack = nt ? *std::min_element(rep.slack.begin(), rep.slack.end()) : 0.0;
    rep.data_scale = g_norm + integral;
    rep.tolerance = tol_factor * (dt * dt + dx * dx) * rep.data_scale;
    rep.passed = rep.min_slack >= -rep.tolerance;
    return rep;
}

} // namespace chaospde
