#include "chaospde/propagator.hpp"

#include "chaospde/error.hpp"
#include "chaospde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace chaospde {

namespace {

void check_member(const ChaosField& f, const char* name, const ProblemSpec& spec) {
    if (!f.truncation_ptr())
        throw ValidationError(std::string("problem block '") + name + "' is missing");
    if (!(f.truncation() == *spec.truncation))
        throw ValidationError(std::string("problem block '") + name +
                              "' uses a different truncation");
    if (!(f.grid() == spec.grid))
        throw ValidationError(std::string("problem block '") + name + "' uses a different grid");
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.has(i) && !f.at(i).all_finite())
            throw ValidationError(std::string("problem block '") + name +
                                  "' has non-finite values at " + f.truncation()[i].to_string());
}

double sup_coefficient(const ChaosField& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.has(i))
            m = std::max(m, sup_norm(f.at(i)));
    return m;
}

} // namespace

void ProblemSpec::validate() const {
    op.validate();
    grid.validate();
    if (!truncation)
        throw ValidationError("problem requires a truncation set");
    check_member(F, "force", *this);
    check_member(G, "initial", *this);
    check_member(Qb, "potential", *this);
    if (G.time_dependent())
        throw ValidationError("initial value must be time-independent");
    if (Qb.time_dependent())
        throw ValidationError("bounded potential must be time-independent");
}

ProblemSpec make_problem(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                         OperatorSpec op) {
    ProblemSpec p;
    p.op = op;
    p.grid = grid;
    p.truncation = truncation;
    p.F = ChaosField(truncation, grid, SpaceNorm::sup_t_l2_in_x, true);
    p.G = ChaosField(truncation, grid, SpaceNorm::l2_in_x, false);
    p.Qb = ChaosField(truncation, grid, SpaceNorm::linf_in_x, false);
    return p;
}

GridFunction tilde_force(const MultiIndex& gamma, const ChaosField& F, const ChaosField& Qb,
                         const ChaosField& solved) {
    const auto& grid = solved.grid();
    auto out = GridFunction::space_time(grid);
    if (const auto* f = F.find(gamma))
        for (std::size_t n = 0; n < grid.nt; ++n) {
            auto src = f->row_at(n);
            std::copy(src.begin(), src.end(), out.row(n).begin());
        }
    if (gamma.is_zero())
        return out;
    for (const auto& [alpha, beta] : decompositions(gamma)) {
        if (alpha.is_zero())
            continue;
        const auto* q = Qb.find(alpha);
        if (!q)
            continue;
        const auto idx = solved.truncation().index_of(beta);
        if (!idx || !solved.has(*idx))
            throw SequencingError("coefficient " + beta.to_string() + " needed by " +
                                  gamma.to_string() + " has not been solved");
        const auto& u = solved.at(*idx);
        auto qr = q->row(0);
        for (std::size_t n = 0; n < grid.nt; ++n) {
            auto dst = out.row(n);
            auto ur = u.row_at(n);
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] -= qr[i] * ur[i];
        }
    }
    return out;
}

double a_gamma(const MultiIndex& gamma, const ChaosField& G, const ChaosField& F, double t) {
    double a = 0.0;
    if (const auto* g = G.find(gamma))
        a += l2_norm(g->row(0), G.grid().dx());
    if (const auto* f = F.find(gamma))
        a += t * sup_t_l2_norm(*f, F.grid().dx());
    return a;
}

double coefficient_bound(const MultiIndex& gamma, double t, const BoundEnvelope& envelope, double q,
                         const TruncationSet& truncation, const std::vector<double>& a) {
    if (a.size() != truncation.size())
        throw ValidationError("a-table does not cover the truncation");
    const auto self = truncation.index_of(gamma);
    if (!self)
        throw ValidationError("multi-index " + gamma.to_string() + " is outside the truncation");
    const std::size_t n = gamma.order();
    std::vector<double> by_order(n + 1, 0.0);
    for (const auto& [beta, rest] : decompositions(gamma)) {
        if (beta == gamma)
            continue;
        const auto idx = truncation.index_of(beta);
        if (!idx)
            throw ValidationError("a-table lacks " + beta.to_string());
        by_order[beta.order()] += a[*idx];
    }
    const double r = envelope.Mtilde_of_t(t) * q;
    double total = a[*self];
    std::vector<double> cumulative(n + 1, 0.0);
    std::partial_sum(by_order.begin(), by_order.end(), cumulative.begin());
    double rk = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        rk *= r;
        total += rk * cumulative[n - k];
    }
    return envelope.M_of_t(t) * total;
}

double theorem_s(double Mtilde_T, double q) {
    if (Mtilde_T < 0.0 || q < 0.0)
        throw DomainError("Mtilde(T) and q must be non-negative");
    const double r = (Mtilde_T * q) * (Mtilde_T * q);
    return r > 1.0 ? std::log(r) / std::log(2.0) + 1.0 : 0.0;
}

unsigned p_U_formula(unsigned m, unsigned p_F, unsigned p_G, double s) {
    if (m < 2)
        throw DomainError("p_U requires m >= 2");
    const double md = m;
    const double v = std::max({2.0 * md * p_F, 2.0 * md * p_G, md * (3.0 + s) / (md - 1.0)});
    return static_cast<unsigned>(std::floor(v)) + 1u;
}

double data_constant_A(const ProblemSpec& spec) {
    const double g = kondratiev_norm(spec.G.with_norm(SpaceNorm::l2_in_x), spec.p_G);
    const double f = kondratiev_norm(spec.F.with_norm(SpaceNorm::sup_t_l2_in_x), spec.p_F);
    return g * g + spec.grid.T * spec.grid.T * f * f;
}

double norm_bound_ocena(double p, unsigned m, double M_T, double A, double s) {
    if (m < 2)
        throw DomainError("norm estimate requires m >= 2");
    const double md = m;
    const double e1 = p / (2.0 * md);
    const double e2 = p * (md - 1.0) / md - s - 2.0;
    if (!(e1 > 1.0) || !(e2 > 1.0))
        throw DomainError("norm estimate needs p/2m > 1 and p(m-1)/m - s - 2 > 1 (got " +
                          format_double(e1) + ", " + format_double(e2) + ")");
    return 3.0 * M_T * M_T * A * (1.0 + 2.0 * cp_limit(e1) * cp_limit(e2));
}

WeakSolution propagate(const ProblemSpec& spec, const PropagateOptions& opts) {
    spec.validate();
    const auto& trunc = *spec.truncation;
    const auto& grid = spec.grid;

    GridFunction q0 = spec.Qb.coefficient(MultiIndex::zero());
    WeakSolution sol;
    sol.U = ChaosField(spec.truncation, grid, SpaceNorm::sup_t_l2_in_x, true);
    sol.m = opts.m;

    std::mt19937_64 shuffler(opts.shuffle_seed.value_or(0));
    for (std::size_t level = 0; level <= trunc.max_order(); ++level) {
        auto [first, last] = trunc.level(level);
        std::vector<std::size_t> order(last - first);
        std::iota(order.begin(), order.end(), first);
        if (opts.shuffle_seed)
            std::shuffle(order.begin(), order.end(), shuffler);
        parallel_for(order.size(), opts.workers, [&](std::size_t k) {
            const std::size_t i = order[k];
            const auto& gamma = trunc[i];
            try {
                auto f = tilde_force(gamma, spec.F, spec.Qb, sol.U);
                auto g = spec.G.coefficient(gamma);
                sol.U.set(i, solve_parabolic(spec.op, q0, f, g, grid));
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " (coefficient " + gamma.to_string() +
                                     ")");
            } catch (const ValidationError& e) {
                throw ValidationError(std::string(e.what()) + " (coefficient " +
                                      gamma.to_string() + ")");
            }
        });
    }

    // coefficient ledger
    sol.envelope = BoundEnvelope::from(spec.op, sup_norm(q0));
    sol.q = sup_coefficient(spec.Qb);
    const double dx = grid.dx();
    const double dt = grid.dt();
    std::vector<double> g_norm(trunc.size(), 0.0), f_sup(trunc.size(), 0.0);
    for (std::size_t i = 0; i < trunc.size(); ++i) {
        g_norm[i] = a_gamma(trunc[i], spec.G, spec.F, 0.0);
        if (const auto* f = spec.F.find(trunc[i]))
            f_sup[i] = sup_t_l2_norm(*f, dx);
    }
    sol.ledger.resize(trunc.size());
    for (std::size_t i = 0; i < trunc.size(); ++i) {
        sol.ledger[i].gamma = trunc[i];
        sol.ledger[i].slack = std::numeric_limits<double>::infinity();
    }
    std::vector<double> a(trunc.size());
    for (std::size_t n = 0; n < grid.nt; ++n) {
        const double t = grid.t(n);
        for (std::size_t i = 0; i < trunc.size(); ++i)
            a[i] = g_norm[i] + t * f_sup[i];
        for (std::size_t i = 0; i < trunc.size(); ++i) {
            auto& row = sol.ledger[i];
            const double measured = l2_norm(sol.U.at(i).row(n), dx);
            const double bound = coefficient_bound(trunc[i], t, sol.envelope, sol.q, trunc, a);
            row.measured_norm = std::max(row.measured_norm, measured);
            row.slack = std::min(row.slack, bound - measured);
            if (n + 1 == grid.nt)
                row.bound = bound;
        }
    }
    sol.envelope_passed = true;
    for (auto& row : sol.ledger) {
        row.tolerance = opts.tol_factor * (dt * dt + dx * dx) * std::max(1.0, row.bound);
        row.passed = row.slack >= -row.tolerance;
        sol.envelope_passed = sol.envelope_passed && row.passed;
    }

    if (opts.compact)
        for (std::size_t i = 0; i < trunc.size(); ++i)
            if (sol.U.at(i).is_zero())
                sol.U.set(i, GridFunction{});

    // norm estimate at p_U
    sol.Mtilde_T = sol.envelope.Mtilde_of_t(grid.T);
    sol.s = theorem_s(sol.Mtilde_T, sol.q);
    sol.p_U = p_U_formula(opts.m, spec.p_F, spec.p_G, sol.s);
    sol.A = data_constant_A(spec);
    const double norm = kondratiev_norm(sol.U, sol.p_U);
    sol.norm_sq_at_p_U = norm * norm;
    sol.norm_bound_p_U = sol.A == 0.0
                             ? 0.0
                             : norm_bound_ocena(sol.p_U, opts.m, sol.envelope.M_of_t(grid.T),
                                                sol.A, sol.s);
    const double tol = opts.tol_factor * (dt * dt + dx * dx) * std::max(1.0, sol.norm_bound_p_U);
    sol.norm_bound_passed = sol.norm_sq_at_p_U <= sol.norm_bound_p_U + tol;
    return sol;
}

double discrete_residual(const ProblemSpec& spec, const ChaosField& U) {
    const auto& trunc = *spec.truncation;
    const auto& grid = spec.grid;
    const double dx = grid.dx();
    const double dt = grid.dt();
    const std::size_t nx = grid.nx;
    auto zero = GridFunction::space_time(grid);
    auto coeff = [&](const MultiIndex& g) -> const GridFunction& {
        const auto* u = U.find(g);
        return u ? *u : zero;
    };
    auto d2 = [&](std::span<const double> r, std::size_t j) {
        const double left = j == 1 ? 0.0 : r[j - 1];
        const double right = j == nx - 2 ? 0.0 : r[j + 1];
        return (left - 2.0 * r[j] + right) / (dx * dx);
    };
    double worst = 0.0;
    for (const auto& gamma : trunc.members()) {
        const auto& u = coeff(gamma);
        const auto* f = spec.F.find(gamma);
        const auto pairs = decompositions(gamma);
        for (std::size_t n = 0; n + 1 < grid.nt; ++n) {
            auto u0 = u.row(n);
            auto u1 = u.row(n + 1);
            for (std::size_t j = 1; j + 1 < nx; ++j) {
                double r = (u1[j] - u0[j]) / dt - 0.5 * (d2(u1, j) + d2(u0, j));
                for (const auto& [alpha, beta] : pairs) {
                    const auto* q = spec.Qb.find(alpha);
                    if (!q)
                        continue;
                    const auto& ub = coeff(beta);
                    r += 0.5 * (*q)(0, j) * (ub(n, j) + ub(n + 1, j));
                }
                if (f)
                    r -= 0.5 * (f->row_at(n)[j] + f->row_at(n + 1)[j]);
                worst = std::max(worst, std::abs(r));
            }
        }
    }
    return worst;
}

nlohmann::json ledger_json(const WeakSolution& sol) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : sol.ledger)
        rows.push_back({{"gamma", r.gamma.to_string()},
                        {"measured_norm", r.measured_norm},
                        {"coefficient_bound", r.bound},
                        {"slack", r.slack},
                        {"tolerance", r.tolerance},
                        {"passed", r.passed}});
    return {
        {"coefficients", rows},
        {"q_inf", sol.envelope.q_inf},
        {"q", sol.q},
        {"M_T", sol.envelope.M_of_t(sol.U.grid().T)},
        {"Mtilde_T", sol.Mtilde_T},
        {"s", sol.s},
        {"m", sol.m},
        {"p_U", sol.p_U},
        {"A", sol.A},
        {"norm_sq_at_p_U", sol.norm_sq_at_p_U},
        {"norm_bound_p_U", sol.norm_bound_p_U},
        {"C_p", "converged series"},
        {"envelope_passed", sol.envelope_passed},
        {"norm_bound_passed", sol.norm_bound_passed},
    };
}

} // namespace chaospde
