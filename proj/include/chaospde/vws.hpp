#pragma once

#include "chaospde/propagator.hpp"
#include "chaospde/regularize.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chaospde {

/// ln((Mtilde_eps(T) q_eps)^2) / ln 2 + 1 when the square exceeds 1, else 0.
double s_eps(double Mtilde_T, double q_eps);

struct VwsOptions {
    unsigned m = 2;
    /// Overrides the fixed evaluation exponent; it must still dominate every p_U.
    std::optional<double> p;
    /// Concurrent eps runs.
    std::size_t eps_workers = 1;
    PropagateOptions propagate;
};

struct EpsRun {
    double eps = 0.0;
    double width = 0.0;
    WeakSolution solution;
    ChaosField Q_eps;
    double q_eps = 0.0;          ///< sup_gamma ||q_{gamma,eps}||_inf
    double M_T = 0.0;
    double Mtilde_T = 0.0;
    double s_eps = 0.0;
    unsigned p_U = 0;
    double p_eps_sum = 0.0;      ///< p_U + (m/(m-1)) / eps
    double p_eps_closed = 0.0;   ///< (m/(m-1)) (s_eps + 3 + 1/eps)
    double norm_at_p = 0.0;      ///< |||U_eps|||_{-p} at the fixed evaluation exponent
};

struct VeryWeakSolution {
    std::vector<double> eps;
    std::vector<EpsRun> runs;
    ModerationReport moderation;            ///< on |||U_eps|||_{-p}
    ModerationReport potential_moderation;  ///< on q_eps
    double p_used = 0.0;
    unsigned m_used = 2;
    std::vector<std::string> warnings;
};

/// Regularizes Q at every eps, propagates with Q_eps in place of the bounded
/// potential of `base`, and fits moderateness at one fixed exponent
/// p = max_eps p_U + 2. eps must be strictly decreasing and resolvable.
VeryWeakSolution very_weak_solve(const SingularPotential& Q, const ProblemSpec& base,
                                 const MollifierSpec& mollifier, const std::vector<double>& eps,
                                 const VwsOptions& opts = {});

struct NegligibilityReport {
    std::vector<double> eps;
    std::vector<double> potential_diff;  ///< |||Q_eps - Qtilde_eps|||_{-p}, sup norm in x
    std::vector<double> solution_diff;   ///< |||U_eps - V_eps|||_{-p}
    std::vector<double> M_T;             ///< M_eps(T) of the first net
    bool identical = false;              ///< every difference exactly zero
    std::optional<double> potential_order;
    std::optional<double> solution_order;
    std::optional<double> growth_order;  ///< fitted power of M_eps(T) in 1/eps
    double n_min = 3.0;
    bool potential_negligible = false;
    bool solution_negligible = false;
    bool premise_satisfied = false;  ///< the potential difference is negligible
    bool order_relation_holds = false;
    double p_used = 0.0;
};

struct NegligibilityOptions {
    double n_min = 3.0;
    /// Allowed shortfall in order_relation_holds.
    double order_tolerance = 0.2;
    VwsOptions vws;
};

/// Solves with both regularizations and compares decay orders.
NegligibilityReport negligibility_check(const SingularPotential& Q, const MollifierSpec& net1,
                                        const MollifierSpec& net2, const std::vector<double>& eps,
                                        const ProblemSpec& base,
                                        const NegligibilityOptions& opts = {});

struct ConsistencyReport {
    std::vector<double> eps;
    std::vector<double> differences;      ///< |||U_eps - V|||_{-p}
    std::vector<double> potential_error;  ///< sup_gamma ||q_gamma - q_gamma * phi_eps||_inf
    std::vector<double> envelope;         ///< potential_error * |||V|||_{-p} * Mtilde(T) M(T)
    bool monotone_flag = false;           ///< strictly decreasing along eps
    double decrease_factor = 0.0;         ///< first / last difference
    double extrapolated_limit = 0.0;      ///< intercept of differences against width^2
    double V_norm = 0.0;
    double p = 0.0;
};

/// V solves the problem with the bounded potential base.Qb; U_eps with the
/// mollified potential.
ConsistencyReport consistency_check(const ProblemSpec& base, const MollifierSpec& mollifier,
                                    const std::vector<double>& eps, double p,
                                    const VwsOptions& opts = {});

nlohmann::json to_json(const VeryWeakSolution& v);
nlohmann::json to_json(const NegligibilityReport& r);
nlohmann::json to_json(const ConsistencyReport& r);

} // namespace chaospde
