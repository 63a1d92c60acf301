#pragma once

#include "chaospde/chaos.hpp"
#include "chaospde/pde.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

namespace chaospde {

/// Data of the Wick-type problem u_t = u_xx - Q wick u + F, u(0) = G, with a
/// bounded chaos potential Q.
struct ProblemSpec {
    OperatorSpec op;
    GridSpec grid;
    std::shared_ptr<const TruncationSet> truncation;
    ChaosField F;   ///< force, space-time (space-only coefficients broadcast)
    ChaosField G;   ///< initial value, space
    ChaosField Qb;  ///< bounded potential, space
    unsigned p_F = 1;
    unsigned p_G = 2;

    /// Shared grid and truncation, Qb and G time-independent, finite data.
    void validate() const;
};

/// Builds a ProblemSpec with empty (zero) F, G and Qb on the given truncation.
ProblemSpec make_problem(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                         OperatorSpec op = {});

struct CoefficientLedger {
    MultiIndex gamma;
    double measured_norm = 0.0;  ///< sup over time levels of ||u_gamma(t)||_{L2}
    double bound = 0.0;          ///< coefficient bound at t = T
    double slack = 0.0;          ///< min over time levels of bound(t) - ||u_gamma(t)||
    double tolerance = 0.0;
    bool passed = true;
};

struct WeakSolution {
    ChaosField U;
    std::vector<CoefficientLedger> ledger;
    BoundEnvelope envelope;  ///< reaction envelope with q_inf = ||q_0||_inf
    double q = 0.0;          ///< sup_gamma ||q_gamma||_inf
    double Mtilde_T = 0.0;
    double s = 0.0;          ///< exponent from (Mtilde(T) q)^2
    unsigned m = 2;
    unsigned p_U = 0;
    double A = 0.0;
    double norm_sq_at_p_U = 0.0;  ///< measured |||U|||^2_{-p_U}
    double norm_bound_p_U = 0.0;  ///< right side of the norm estimate at p_U
    bool envelope_passed = true;  ///< every ledger entry passed
    bool norm_bound_passed = true;
};

struct PropagateOptions {
    std::size_t workers = 1;
    /// Shuffles the processing order inside each order level.
    std::optional<std::uint64_t> shuffle_seed;
    unsigned m = 2;
    /// Ledger tolerance: tol_factor (dt^2 + dx^2) * max(1, bound(T)).
    double tol_factor = 10.0;
    /// Drop coefficients that come out identically zero.
    bool compact = true;
};

/// f_gamma - sum_{alpha + beta = gamma, alpha != 0} q_alpha u_beta over all
/// time levels. Every beta < gamma must be stored in `solved`.
GridFunction tilde_force(const MultiIndex& gamma, const ChaosField& F, const ChaosField& Qb,
                         const ChaosField& solved);

/// Solves the triangular system level by level: u_gamma solves the heat
/// problem with reaction q_0, force tilde_force(gamma) and initial value
/// g_gamma. Fills the coefficient ledger and the norm estimate at p_U.
WeakSolution propagate(const ProblemSpec& spec, const PropagateOptions& opts = {});

/// a_gamma(t) = ||g_gamma||_{L2} + t sup_t ||f_gamma(t)||_{L2}.
double a_gamma(const MultiIndex& gamma, const ChaosField& G, const ChaosField& F, double t);

/// M(t) (a_gamma(t) + sum_{k=1}^{|gamma|} (Mtilde(t) q)^k sum_{beta < gamma, |beta| <= |gamma| - k} a_beta(t)).
/// `a` is indexed by truncation position and must cover every beta < gamma.
double coefficient_bound(const MultiIndex& gamma, double t, const BoundEnvelope& envelope, double q,
                         const TruncationSet& truncation, const std::vector<double>& a);

/// s = ln((Mtilde(T) q)^2) / ln 2 + 1 when (Mtilde(T) q)^2 > 1, else 0.
double theorem_s(double Mtilde_T, double q);

/// floor(max{2 m p_F, 2 m p_G, m (3 + s) / (m - 1)}) + 1.
unsigned p_U_formula(unsigned m, unsigned p_F, unsigned p_G, double s);

/// |||G|||^2_{-p_G} + T^2 |||F|||^2_{-p_F}.
double data_constant_A(const ProblemSpec& spec);

/// 3 M(T)^2 A (1 + 2 C_{p/2m} C_{p(m-1)/m - s - 2}) with the converged C_p.
double norm_bound_ocena(double p, unsigned m, double M_T, double A, double s);

/// Largest Crank-Nicolson midpoint residual of the coupled discrete system
/// over all gamma and interior nodes.
double discrete_residual(const ProblemSpec& spec, const ChaosField& U);

/// Rows {gamma, measured_norm, coefficient_bound, slack} plus the norm estimate.
nlohmann::json ledger_json(const WeakSolution& sol);

} // namespace chaospde
