#pragma once

#include "chaospde/grid.hpp"

#include <vector>

namespace chaospde {

enum class OperatorKind { laplacian_1d };

/// Generator of the heat semigroup with stability constants
/// ||T_t|| <= M e^{w t}. The Dirichlet Laplacian on an interval is a
/// contraction semigroup, so M = 1 and w = 0 are the natural values.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::laplacian_1d;
    double M = 1.0;
    double w = 0.0;

    void validate() const;
};

/// M(t) = M exp((w + M q_inf) t).
double stability_M(double t, double M, double w, double q_inf);

/// Mtilde(t) = int_0^t M(s) ds = (M(t) - M) / (w + M q_inf), with the
/// continuous limit M t when the rate vanishes.
double stability_Mtilde(double t, double M, double w, double q_inf);

/// The pair (M(t), Mtilde(t)) for one operator and one bounded potential.
struct BoundEnvelope {
    double M = 1.0;
    double w = 0.0;
    double q_inf = 0.0;

    static BoundEnvelope from(const OperatorSpec& op, double q_inf) { return {op.M, op.w, q_inf}; }

    double M_of_t(double t) const { return stability_M(t, M, w, q_inf); }
    double Mtilde_of_t(double t) const { return stability_Mtilde(t, M, w, q_inf); }
};

/// Crank-Nicolson solve of u_t = u_xx - q u + f on the grid with homogeneous
/// Dirichlet values at both ends and u(0, .) = g. `q` and `g` are space
/// functions; `f` is space-time or a single row broadcast over time.
GridFunction solve_parabolic(const OperatorSpec& op, const GridFunction& q, const GridFunction& f,
                             const GridFunction& g, const GridSpec& grid);

/// Per-level slack of the a-priori bound
/// ||u(t)|| <= M(t) (||g|| + int_0^t ||f(s)|| ds); the time integral uses the
/// trapezoid rule on the grid's time levels.
struct Theorem1Report {
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> slack;
    double min_slack = 0.0;
    double tolerance = 0.0;
    double data_scale = 0.0;
    bool passed = true;
};

/// Failure means some slack below -tolerance, with
/// tolerance = tol_factor (dt^2 + dx^2) * data_scale and
/// data_scale = ||g|| + int_0^T ||f||.
Theorem1Report verify_theorem1_bound(const GridFunction& u, const GridFunction& f,
                                     const GridFunction& g, const BoundEnvelope& envelope,
                                     const GridSpec& grid, double tol_factor = 10.0);

} // namespace chaospde
