#include "chaospde/vws.hpp"

#include "chaospde/error.hpp"
#include "chaospde/parallel.hpp"
#include "chaospde/regression.hpp"

#include <algorithm>
#include <cmath>

namespace chaospde {

namespace {

void check_eps_grid(const std::vector<double>& eps) {
    if (eps.empty())
        throw ValidationError("eps list is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || !(eps[i] <= 1.0))
            throw ValidationError("eps values must lie in (0, 1] (got " + format_double(eps[i]) +
                                  ")");
        if (i > 0 && !(eps[i] < eps[i - 1]))
            throw ValidationError("eps values must be strictly decreasing");
    }
}

void check_resolvable(const MollifierSpec& mollifier, const std::vector<double>& eps,
                      const GridSpec& grid) {
    for (double e : eps)
        if (!resolvable(mollifier, e, grid))
            throw NumericalError("mollifier width " + format_double(mollifier.width(e)) +
                                 " at eps " + format_double(e) + " is below 2 dx = " +
                                 format_double(2.0 * grid.dx()) +
                                 "; increase grid.nx or drop the smallest eps values");
}

// Re-throws with the offending eps attached, keeping the error category.
[[noreturn]] void rethrow_at(double eps) {
    const std::string where = " (eps " + format_double(eps) + ")";
    try {
        throw;
    } catch (const NumericalError& e) {
        throw NumericalError(e.what() + where);
    } catch (const ValidationError& e) {
        throw ValidationError(e.what() + where);
    } catch (const DomainError& e) {
        throw DomainError(e.what() + where);
    }
}

double sup_field(const ChaosField& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.has(i))
            m = std::max(m, sup_norm(f.at(i)));
    return m;
}

// Decay order of a positive sequence: slope of log value against log eps.
std::optional<double> decay_order(const std::vector<double>& eps, const std::vector<double>& v) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (v[i] > 0.0) {
            x.push_back(std::log(eps[i]));
            y.push_back(std::log(v[i]));
        }
    if (x.size() < 2)
        return std::nullopt;
    return fit_line(x, y).slope;
}

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

} // namespace

double s_eps(double Mtilde_T, double q_eps) {
    return theorem_s(Mtilde_T, q_eps);
}

VeryWeakSolution very_weak_solve(const SingularPotential& Q, const ProblemSpec& base,
                                 const MollifierSpec& mollifier, const std::vector<double>& eps,
                                 const VwsOptions& opts) {
    check_eps_grid(eps);
    base.validate();
    Q.validate(base.grid, *base.truncation);
    check_resolvable(mollifier, eps, base.grid);

    VeryWeakSolution out;
    out.eps = eps;
    out.m_used = opts.m;
    out.runs.resize(eps.size());
    std::vector<std::vector<std::string>> warnings(eps.size());

    parallel_for(eps.size(), opts.eps_workers, [&](std::size_t k) {
        auto& run = out.runs[k];
        run.eps = eps[k];
        try {
            run.width = mollifier.width(eps[k]);
            run.Q_eps = regularize_potential(Q, mollifier, eps[k], base.grid, base.truncation,
                                             &warnings[k]);
            ProblemSpec spec = base;
            spec.Qb = run.Q_eps;
            spec.Qb += base.Qb;
            PropagateOptions po = opts.propagate;
            po.m = opts.m;
            run.solution = propagate(spec, po);
        } catch (...) {
            rethrow_at(eps[k]);
        }
        const auto& sol = run.solution;
        run.q_eps = sol.q;
        run.M_T = sol.envelope.M_of_t(base.grid.T);
        run.Mtilde_T = sol.Mtilde_T;
        run.s_eps = sol.s;
        run.p_U = sol.p_U;
        const double ratio = static_cast<double>(opts.m) / (opts.m - 1.0);
        run.p_eps_sum = sol.p_U + ratio / eps[k];
        run.p_eps_closed = ratio * (sol.s + 3.0 + 1.0 / eps[k]);
    });
    for (auto& w : warnings)
        out.warnings.insert(out.warnings.end(), w.begin(), w.end());

    unsigned max_p_U = 0;
    for (const auto& r : out.runs)
        max_p_U = std::max(max_p_U, r.p_U);
    out.p_used = opts.p.value_or(max_p_U + 2.0);
    if (out.p_used < max_p_U)
        throw ValidationError("evaluation exponent " + format_double(out.p_used) +
                              " is below p_U = " + std::to_string(max_p_U));

    std::vector<double> norms, qs;
    for (auto& r : out.runs) {
        r.norm_at_p = kondratiev_norm(r.solution.U, out.p_used);
        norms.push_back(r.norm_at_p);
        qs.push_back(r.q_eps);
    }
    if (eps.size() >= 3) {
        out.moderation = moderateness_fit(eps, norms);
        out.potential_moderation = moderateness_fit(eps, qs);
    } else {
        out.warnings.push_back("moderateness fit skipped: fewer than three eps values");
        out.moderation.eps = out.potential_moderation.eps = eps;
        out.moderation.norms = norms;
        out.potential_moderation.norms = qs;
        out.moderation.verdict = out.potential_moderation.verdict = "inconclusive";
    }
    return out;
}

NegligibilityReport negligibility_check(const SingularPotential& Q, const MollifierSpec& net1,
                                        const MollifierSpec& net2, const std::vector<double>& eps,
                                        const ProblemSpec& base, const NegligibilityOptions& opts) {
    const auto a = very_weak_solve(Q, base, net1, eps, opts.vws);
    const auto b = very_weak_solve(Q, base, net2, eps, opts.vws);

    NegligibilityReport rep;
    rep.eps = eps;
    rep.n_min = opts.n_min;
    rep.p_used = std::max(a.p_used, b.p_used);
    for (std::size_t k = 0; k < eps.size(); ++k) {
        auto dq = a.runs[k].Q_eps;
        dq -= b.runs[k].Q_eps;
        rep.potential_diff.push_back(kondratiev_norm(dq, rep.p_used));
        auto du = a.runs[k].solution.U;
        du -= b.runs[k].solution.U;
        rep.solution_diff.push_back(kondratiev_norm(du, rep.p_used));
        rep.M_T.push_back(a.runs[k].M_T);
    }
    auto all_zero = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    rep.identical = all_zero(rep.potential_diff) && all_zero(rep.solution_diff);
    if (rep.identical) {
        rep.potential_negligible = rep.solution_negligible = true;
        rep.premise_satisfied = rep.order_relation_holds = true;
        return rep;
    }
    rep.potential_order = decay_order(eps, rep.potential_diff);
    rep.solution_order = decay_order(eps, rep.solution_diff);
    if (auto g = decay_order(eps, rep.M_T))
        rep.growth_order = std::max(0.0, -*g);
    rep.potential_negligible =
        all_zero(rep.potential_diff) || (rep.potential_order && *rep.potential_order >= opts.n_min);
    rep.solution_negligible =
        all_zero(rep.solution_diff) || (rep.solution_order && *rep.solution_order >= opts.n_min);
    rep.premise_satisfied = rep.potential_negligible;
    if (all_zero(rep.solution_diff))
        rep.order_relation_holds = true;
    else if (rep.potential_order && rep.solution_order)
        rep.order_relation_holds = *rep.solution_order >= *rep.potential_order -
                                                              rep.growth_order.value_or(0.0) -
                                                              opts.order_tolerance;
    return rep;
}

ConsistencyReport consistency_check(const ProblemSpec& base, const MollifierSpec& mollifier,
                                    const std::vector<double>& eps, double p,
                                    const VwsOptions& opts) {
    check_eps_grid(eps);
    base.validate();
    check_resolvable(mollifier, eps, base.grid);

    PropagateOptions po = opts.propagate;
    po.m = opts.m;
    const auto V = propagate(base, po);

    ConsistencyReport rep;
    rep.eps = eps;
    rep.p = p;
    rep.V_norm = kondratiev_norm(V.U, p);
    rep.differences.resize(eps.size());
    rep.potential_error.resize(eps.size());
    rep.envelope.resize(eps.size());
    parallel_for(eps.size(), opts.eps_workers, [&](std::size_t k) {
        try {
            ProblemSpec spec = base;
            spec.Qb = mollify_field(base.Qb, mollifier, eps[k]);
            auto dq = base.Qb;
            dq -= spec.Qb;
            rep.potential_error[k] = sup_field(dq);
            const auto U = propagate(spec, po);
            auto diff = U.U;
            diff -= V.U;
            rep.differences[k] = kondratiev_norm(diff, p);
            rep.envelope[k] = rep.potential_error[k] * rep.V_norm * U.Mtilde_T;
        } catch (...) {
            rethrow_at(eps[k]);
        }
    });

    rep.monotone_flag = true;
    for (std::size_t k = 1; k < eps.size(); ++k)
        rep.monotone_flag = rep.monotone_flag && rep.differences[k] < rep.differences[k - 1];
    rep.decrease_factor = rep.differences.back() > 0.0
                              ? rep.differences.front() / rep.differences.back()
                              : std::numeric_limits<double>::infinity();
    if (eps.size() >= 2) {
        std::vector<double> w2;
        for (double e : eps)
            w2.push_back(mollifier.width(e) * mollifier.width(e));
        rep.extrapolated_limit = fit_line(w2, rep.differences).intercept;
    } else {
        rep.extrapolated_limit = rep.differences.front();
    }
    return rep;
}

nlohmann::json to_json(const VeryWeakSolution& v) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : v.runs)
        runs.push_back({{"eps", r.eps},
                        {"width", r.width},
                        {"q_eps", r.q_eps},
                        {"M_T", r.M_T},
                        {"Mtilde_T", r.Mtilde_T},
                        {"s_eps", r.s_eps},
                        {"p_U", r.p_U},
                        {"p_eps_sum", r.p_eps_sum},
                        {"p_eps_closed", r.p_eps_closed},
                        {"p_eps", std::max(r.p_eps_sum, r.p_eps_closed)},
                        {"norm_at_p", r.norm_at_p},
                        {"ledger", ledger_json(r.solution)}});
    return {
        {"eps", v.eps},
        {"p_used", v.p_used},
        {"m_used", v.m_used},
        {"runs", runs},
        {"moderation", to_json(v.moderation)},
        {"potential_moderation", to_json(v.potential_moderation)},
        {"warnings", v.warnings},
    };
}

nlohmann::json to_json(const NegligibilityReport& r) {
    return {
        {"eps", r.eps},
        {"potential_diff", r.potential_diff},
        {"solution_diff", r.solution_diff},
        {"M_T", r.M_T},
        {"identical", r.identical},
        {"potential_order", optional_json(r.potential_order)},
        {"solution_order", optional_json(r.solution_order)},
        {"growth_order", optional_json(r.growth_order)},
        {"n_min", r.n_min},
        {"potential_negligible", r.potential_negligible},
        {"solution_negligible", r.solution_negligible},
        {"premise_satisfied", r.premise_satisfied},
        {"order_relation_holds", r.order_relation_holds},
        {"p_used", r.p_used},
    };
}

nlohmann::json to_json(const ConsistencyReport& r) {
    return {
        {"eps", r.eps},
        {"differences", r.differences},
        {"potential_error", r.potential_error},
        {"envelope", r.envelope},
        {"monotone_flag", r.monotone_flag},
        {"decrease_factor", r.decrease_factor},
        {"extrapolated_limit", r.extrapolated_limit},
        {"V_norm", r.V_norm},
        {"p", r.p},
    };
}

} // namespace chaospde
