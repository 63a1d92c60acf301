#include "chaospde/regularize.hpp"

#include "chaospde/error.hpp"
#include "chaospde/regression.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace chaospde {

namespace {

using Poly = std::vector<double>;  // ascending coefficients

Poly derivative(const Poly& p) {
    if (p.size() <= 1)
        return {0.0};
    Poly d(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i)
        d[i - 1] = static_cast<double>(i) * p[i];
    return d;
}

Poly add(const Poly& a, const Poly& b) {
    Poly r(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i)
        r[i] += b[i];
    return r;
}

Poly mul(const Poly& a, const Poly& b) {
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

Poly scale(Poly p, double c) {
    for (auto& v : p)
        v *= c;
    return p;
}

double eval(const Poly& p, double x) {
    double v = 0.0;
    for (std::size_t i = p.size(); i-- > 0;)
        v = v * x + p[i];
    return v;
}

// P_{k+1} = (P_k' (x^2-1) - 4k x P_k)(x^2-1) - 2x P_k
const Poly& profile_poly(unsigned k) {
    static std::mutex mu;
    static std::vector<Poly> table{{1.0}};
    std::lock_guard lock(mu);
    const Poly q{-1.0, 0.0, 1.0};  // x^2 - 1
    const Poly x{0.0, 1.0};
    while (table.size() <= k) {
        const unsigned j = static_cast<unsigned>(table.size() - 1);
        const Poly& p = table.back();
        Poly inner = add(mul(derivative(p), q), scale(mul(x, p), -4.0 * j));
        table.push_back(add(mul(inner, q), scale(mul(x, p), -2.0)));
    }
    return table[k];
}

double raw_bump(double x) noexcept {
    if (!(std::abs(x) < 1.0))
        return 0.0;
    return std::exp(1.0 / (x * x - 1.0));
}

void check_eps(double eps) {
    if (!(eps > 0.0) || !(eps <= 1.0))
        throw DomainError("mollifier parameter eps must lie in (0, 1] (got " + std::to_string(eps) +
                          ")");
}

} // namespace

double bump_normalization() {
    static const double z = [] {
        boost::math::quadrature::tanh_sinh<double> integrator;
        return integrator.integrate([](double x) { return raw_bump(x); }, -1.0, 1.0);
    }();
    return z;
}

double bump(double x) noexcept {
    return raw_bump(x) / bump_normalization();
}

double bump_sup() {
    return std::exp(-1.0) / bump_normalization();
}

double bump_derivative(unsigned k, double x) {
    if (!(std::abs(x) < 1.0))
        return 0.0;
    const double q = x * x - 1.0;
    const double e = 1.0 / q;
    if (e < -700.0)
        return 0.0;
    if (k == 0)
        return std::exp(e) / bump_normalization();
    const double v = eval(profile_poly(k), x) / std::pow(q, 2.0 * k);
    return v * std::exp(e) / bump_normalization();
}

double bump_derivative_l2(unsigned k) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double v = integrator.integrate(
        [k](double x) {
            const double d = bump_derivative(k, x);
            return d * d;
        },
        -1.0, 1.0);
    return std::sqrt(v);
}

std::string to_string(MollifierScaling s) {
    return s == MollifierScaling::log ? "log" : "standard";
}

MollifierScaling parse_scaling(const std::string& s) {
    if (s == "standard")
        return MollifierScaling::standard;
    if (s == "log")
        return MollifierScaling::log;
    throw ValidationError("unknown mollifier scaling '" + s + "' (expected standard or log)");
}

double MollifierSpec::width(double eps) const {
    check_eps(eps);
    if (scaling == MollifierScaling::standard)
        return eps;
    if (eps == 1.0)
        throw DomainError("log-scaled mollifier needs eps < 1");
    return 1.0 / std::log(1.0 / eps);
}

double MollifierSpec::derivative(unsigned k, double eps, double x) const {
    const double w = width(eps);
    double v = bump_derivative(k, x / w) / std::pow(w, k + 1.0);
    if (perturbation) {
        const auto& pt = *perturbation;
        v += pt.amplitude * std::pow(eps, pt.power) * bump_derivative(k, x / pt.width) /
             std::pow(pt.width, k + 1.0);
    }
    return v;
}

double MollifierSpec::support(double eps) const {
    double s = width(eps);
    if (perturbation)
        s = std::max(s, perturbation->width);
    return s;
}

bool resolvable(const MollifierSpec& spec, double eps, const GridSpec& grid) {
    return spec.width(eps) >= 2.0 * grid.dx();
}

GridFunction mollifier_values(const MollifierSpec& spec, double eps, const GridSpec& grid,
                              double center, std::vector<std::string>* warnings) {
    grid.validate();
    if (warnings && !resolvable(spec, eps, grid))
        warnings->push_back("mollifier width " + format_double(spec.width(eps)) + " at eps " +
                            format_double(eps) + " is below two grid cells");
    auto out = GridFunction::space(grid);
    for (std::size_t i = 0; i < grid.nx; ++i)
        out(0, i) = spec.derivative(0, eps, grid.x(i) - center);
    return out;
}

bool SingularPotential::empty() const {
    return std::all_of(atoms.begin(), atoms.end(), [](const auto& kv) { return kv.second.empty(); });
}

void SingularPotential::validate(const GridSpec& grid, const TruncationSet& truncation) const {
    if (!(s >= 0.0) || !std::isfinite(s))
        throw ValidationError("Sobolev order s must be finite and non-negative");
    const auto max_order = static_cast<unsigned>(std::floor(s));
    for (const auto& [gamma, list] : atoms) {
        if (!truncation.contains(gamma))
            throw ValidationError("potential coefficient " + gamma.to_string() +
                                  " is outside the truncation");
        for (const auto& a : list) {
            if (!std::isfinite(a.location) || !std::isfinite(a.weight))
                throw ValidationError("atom at " + gamma.to_string() + " has non-finite data");
            if (!(a.location > grid.x_min && a.location < grid.x_max))
                throw ValidationError("atom location " + format_double(a.location) +
                                      " is outside the open window");
            if (a.order > max_order)
                throw ValidationError("atom order " + std::to_string(a.order) +
                                      " exceeds floor(s) = " + std::to_string(max_order));
        }
    }
}

ChaosField regularize_potential(const SingularPotential& q, const MollifierSpec& spec, double eps,
                                const GridSpec& grid,
                                std::shared_ptr<const TruncationSet> truncation,
                                std::vector<std::string>* warnings) {
    grid.validate();
    q.validate(grid, *truncation);
    const double w = spec.width(eps);
    if (warnings && !resolvable(spec, eps, grid))
        warnings->push_back("mollifier width " + format_double(w) + " at eps " +
                            format_double(eps) + " is below two grid cells");

    ChaosField out(std::move(truncation), grid, SpaceNorm::linf_in_x, false);
    const double reach = spec.support(eps);
    for (const auto& [gamma, list] : q.atoms) {
        if (list.empty())
            continue;
        auto c = GridFunction::space(grid);
        for (const auto& a : list) {
            if (warnings && (a.location - reach < grid.x_min || a.location + reach > grid.x_max))
                warnings->push_back("mollified atom at " + format_double(a.location) +
                                    " reaches past the window");
            for (std::size_t i = 0; i < grid.nx; ++i)
                c(0, i) += a.weight * spec.derivative(a.order, eps, grid.x(i) - a.location);
        }
        out.set(gamma, std::move(c));
    }
    return out;
}

HminusNorm hminus_norm_atoms_detailed(const std::vector<Atom>& atoms, double s, double cutoff) {
    HminusNorm res;
    res.cutoff = cutoff;
    if (atoms.empty())
        return res;
    unsigned max_order = 0;
    double spread = 0.0;
    for (const auto& a : atoms) {
        max_order = std::max(max_order, a.order);
        for (const auto& b : atoms)
            spread = std::max(spread, std::abs(a.location - b.location));
    }
    if (!(s > max_order + 0.5))
        throw DomainError("H^{-s} norm of delta^{(" + std::to_string(max_order) +
                          ")} needs s > " + format_double(max_order + 0.5));

    auto integrand = [&](double xi) {
        std::complex<double> sum = 0.0;
        const std::complex<double> ixi(0.0, xi);
        for (const auto& a : atoms)
            sum += a.weight * std::pow(ixi, static_cast<int>(a.order)) *
                   std::exp(std::complex<double>(0.0, -xi * a.location));
        return std::norm(sum) * std::pow(1.0 + xi * xi, -s);
    };

    // panels no wider than a half period of the fastest oscillation
    const double h = spread > 0.0 ? std::min(1.0, std::numbers::pi / spread) : 1.0;
    const auto panels = static_cast<std::size_t>(std::ceil(cutoff / h));
    const double step = cutoff / static_cast<double>(panels);
    double body = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double a = step * static_cast<double>(i);
        body += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, a + step,
                                                                              0);
    }

    double tail = 0.0;
    double tail_err = 0.0;
    const double X = cutoff;
    for (const auto& aj : atoms) {
        for (const auto& al : atoms) {
            const double ww = aj.weight * al.weight;
            const double n = static_cast<double>(aj.order + al.order);
            const double phase =
                std::numbers::pi * (static_cast<double>(aj.order) - static_cast<double>(al.order)) /
                2.0;
            const double delta = aj.location - al.location;
            if (delta == 0.0) {
                // int_X^inf xi^n (1+xi^2)^{-s} = B_y(s - (n+1)/2, (n+1)/2) / 2 at y = 1/(1+X^2)
                const double a = 0.5 * (n + 1.0);
                const double b = s - a;
                tail += ww * std::cos(phase) * 0.5 *
                        boost::math::beta(b, a, 1.0 / (1.0 + X * X));
            } else {
                const double f = std::pow(X, n) * std::pow(1.0 + X * X, -s);
                const double fp = f * (n / X - 2.0 * s * X / (1.0 + X * X));
                const double arg = delta * X - phase;
                tail += ww * (-f * std::sin(arg) / delta - fp * std::cos(arg) / (delta * delta));
                tail_err += std::abs(ww) * std::abs(fp) / (delta * delta);
            }
        }
    }
    res.value = std::sqrt(std::max(0.0, (body + tail) / std::numbers::pi));
    res.tail_bound = tail_err / std::numbers::pi;
    return res;
}

double hminus_norm_atoms(const std::vector<Atom>& atoms, double s) {
    return hminus_norm_atoms_detailed(atoms, s).value;
}

double potential_sup_hminus(const SingularPotential& q) {
    double m = 0.0;
    for (const auto& [gamma, list] : q.atoms)
        m = std::max(m, hminus_norm_atoms(list, q.s));
    return m;
}

std::map<MultiIndex, double> linf_bound_star1(const SingularPotential& q, const MollifierSpec& spec,
                                              double eps) {
    if (spec.perturbation)
        throw ValidationError("the sup-norm estimate covers unperturbed mollifiers only");
    const double w = spec.width(eps);
    double c_phi = 0.0;
    for (unsigned k = 0; k <= static_cast<unsigned>(std::floor(q.s)); ++k)
        c_phi = std::max(c_phi, bump_derivative_l2(k));
    const double factor = c_phi * std::sqrt(std::ceil(q.s)) * std::pow(w, -(q.s + 0.5));
    std::map<MultiIndex, double> out;
    for (const auto& [gamma, list] : q.atoms)
        if (!list.empty())
            out.emplace(gamma, factor * hminus_norm_atoms(list, q.s));
    return out;
}

ChaosField mollify_field(const ChaosField& q, const MollifierSpec& spec, double eps) {
    using Rule = boost::math::quadrature::gauss<double, 48>;
    const auto& grid = q.grid();
    const double reach = spec.support(eps);
    const double x0 = grid.x_min;
    const double dx = grid.dx();

    // nodes and weights of the rule mapped to [-reach, reach]
    std::vector<double> ys, ws;
    const auto& abs = Rule::abscissa();
    const auto& wts = Rule::weights();
    for (std::size_t i = 0; i < abs.size(); ++i) {
        const double sign_set[2] = {1.0, -1.0};
        for (double sg : sign_set) {
            if (abs[i] == 0.0 && sg < 0)
                continue;
            ys.push_back(sg * abs[i] * reach);
            ws.push_back(wts[i] * reach);
        }
    }
    double mass = 0.0;
    std::vector<double> kernel(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) {
        kernel[j] = spec.derivative(0, eps, ys[j]);
        mass += ws[j] * kernel[j];
    }

    ChaosField out(q.truncation_ptr(), grid, q.norm_kind(), q.time_dependent());
    for (std::size_t g = 0; g < q.size(); ++g) {
        if (!q.has(g))
            continue;
        const auto& src = q.at(g);
        GridFunction dst(src.levels(), src.nodes());
        for (std::size_t lev = 0; lev < src.levels(); ++lev) {
            auto row = src.row(lev);
            boost::math::interpolators::cardinal_cubic_b_spline<double> spline(row.begin(), row.end(),
                                                                              x0, dx);
            for (std::size_t i = 0; i < grid.nx; ++i) {
                const double xi = grid.x(i);
                double acc = 0.0;
                for (std::size_t j = 0; j < ys.size(); ++j) {
                    const double z = xi - ys[j];
                    if (z < grid.x_min || z > grid.x_max)
                        continue;  // zero extension outside the window
                    acc += ws[j] * kernel[j] * spline(z);
                }
                dst(lev, i) = acc / mass;
            }
        }
        out.set(g, std::move(dst));
    }
    return out;
}

ModerationReport moderateness_fit(const std::vector<double>& eps, const std::vector<double>& norms) {
    if (eps.size() != norms.size())
        throw ValidationError("moderateness fit needs one norm per eps");
    if (eps.size() < 3)
        throw ValidationError("moderateness fit needs at least three eps values");
    for (double e : eps)
        if (!(e > 0.0) || !(e <= 1.0))
            throw DomainError("moderateness fit needs eps in (0, 1]");
    for (double v : norms)
        if (!std::isfinite(v))
            throw NumericalError("moderateness fit received a non-finite norm");

    ModerationReport r;
    r.eps = eps;
    r.norms = norms;
    if (std::any_of(norms.begin(), norms.end(), [](double v) { return v <= 0.0; })) {
        r.zero_net = true;
        r.model = "zero";
        r.verdict = "moderate";
        return r;
    }

    std::vector<double> lx(eps.size()), ly(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        lx[i] = std::log(1.0 / eps[i]);
        ly[i] = std::log(norms[i]);
    }
    const auto power = fit_line(lx, ly);
    r.raw_slope = power.slope;
    r.N = std::max(0.0, power.slope);
    r.C = std::exp(power.intercept);
    r.r2 = power.r2;

    const bool log_ok = std::all_of(eps.begin(), eps.end(), [](double e) { return e < 1.0; });
    if (log_ok) {
        std::vector<double> llx(eps.size());
        for (std::size_t i = 0; i < eps.size(); ++i)
            llx[i] = std::log(lx[i]);
        const auto lf = fit_line(llx, ly);
        r.log_kappa = lf.slope;
        r.log_C = std::exp(lf.intercept);
        r.log_r2 = lf.r2;
        r.log_type_flag = lf.rss < power.rss && lf.r2 >= kFitR2Threshold;
    }
    double mean = 0.0;
    for (double v : ly)
        mean += v;
    mean /= static_cast<double>(ly.size());
    double spread = 0.0;
    for (double v : ly)
        spread += (v - mean) * (v - mean);
    r.log_spread = std::sqrt(spread / static_cast<double>(ly.size()));
    r.bounded_flag = r.log_spread <= kFlatLogSpread;
    for (std::size_t i = 0; i < eps.size(); ++i)
        r.envelope_C = std::max(r.envelope_C, norms[i] * std::pow(eps[i], r.N));

    if (r.r2 >= kFitR2Threshold)
        r.model = "power";
    else if (r.log_type_flag)
        r.model = "log";
    else if (r.bounded_flag)
        r.model = "bounded";
    else
        r.model = "none";
    r.verdict = r.model == "none" ? "inconclusive" : "moderate";
    return r;
}

nlohmann::json to_json(const ModerationReport& r) {
    return {
        {"eps", r.eps},
        {"norm", r.norms},
        {"C", r.C},
        {"N", r.N},
        {"raw_slope", r.raw_slope},
        {"r2", r.r2},
        {"log_C", r.log_C},
        {"log_kappa", r.log_kappa},
        {"log_r2", r.log_r2},
        {"log_type_flag", r.log_type_flag},
        {"zero_net", r.zero_net},
        {"log_spread", r.log_spread},
        {"bounded_flag", r.bounded_flag},
        {"envelope_C", r.envelope_C},
        {"model", r.model},
        {"verdict", r.verdict},
    };
}

} // namespace chaospde
