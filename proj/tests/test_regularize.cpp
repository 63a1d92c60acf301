#include "chaospde/error.hpp"
#include "chaospde/regularize.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace chaospde;
using boost::math::quadrature::gauss_kronrod;

namespace {

double integrate(auto fn, double a, double b, int panels = 64) {
    double s = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k)
        s += gauss_kronrod<double, 31>::integrate(fn, a + k * h, a + (k + 1) * h, 0, 0);
    return s;
}

GridSpec window(double L, std::size_t nx) {
    GridSpec g;
    g.x_min = -L;
    g.x_max = L;
    g.nx = nx;
    g.T = 0.1;
    g.nt = 3;
    return g;
}

} // namespace

TEST_CASE("bump normalization and unit mass") {
    CHECK(bump_normalization() == doctest::Approx(0.4439938161680794).epsilon(1e-12));
    CHECK(integrate([](double x) { return bump(x); }, -1.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bump(1.0) == 0.0);
    CHECK(bump(-1.5) == 0.0);
    CHECK(bump(0.0) == doctest::Approx(bump_sup()));
    CHECK(bump_sup() == doctest::Approx(std::exp(-1.0) / bump_normalization()));
}

TEST_CASE("bump derivatives against central differences") {
    const double h = 1e-4;
    for (unsigned k = 0; k < 4; ++k)
        for (double x : {-0.8, -0.3, 0.0, 0.25, 0.7}) {
            const double fd =
                (bump_derivative(k, x + h) - bump_derivative(k, x - h)) / (2.0 * h);
            CHECK(bump_derivative(k + 1, x) ==
                  doctest::Approx(fd).epsilon(1e-6).scale(std::abs(fd) + 1.0));
        }
    CHECK(bump_derivative(0, 0.3) == doctest::Approx(bump(0.3)));
    CHECK(bump_derivative(3, 1.2) == 0.0);
}

TEST_CASE("derivative L2 norms by quadrature") {
    for (unsigned k = 0; k <= 2; ++k) {
        const double direct = std::sqrt(
            integrate([k](double x) { return std::pow(bump_derivative(k, x), 2); }, -1.0, 1.0, 256));
        CHECK(bump_derivative_l2(k) == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("mollifier widths") {
    MollifierSpec std_net;
    CHECK(std_net.width(0.1) == 0.1);
    MollifierSpec log_net{MollifierScaling::log, std::nullopt};
    CHECK(log_net.width(0.1) == doctest::Approx(1.0 / std::log(10.0)));
    CHECK_THROWS_AS(log_net.width(1.0), DomainError);
    CHECK_THROWS_AS(std_net.width(0.0), DomainError);
    CHECK_THROWS_AS(std_net.width(1.5), DomainError);
    CHECK(parse_scaling("log") == MollifierScaling::log);
    CHECK(to_string(MollifierScaling::standard) == "standard");
    CHECK_THROWS(parse_scaling("cubic"));
}

TEST_CASE("scaled net member keeps unit mass") {
    for (double eps : {0.5, 0.1, 0.02}) {
        MollifierSpec net;
        const double w = net.width(eps);
        CHECK(integrate([&](double x) { return net.derivative(0, eps, x); }, -w, w) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("regularized atoms pair like the distributions") {
    const auto psi = [](double x) { return std::sin(2.0 * x) + x * x; };
    const auto dpsi = [](double x) { return 2.0 * std::cos(2.0 * x) + 2.0 * x; };
    const double x0 = 0.3;
    MollifierSpec net;
    for (double eps : {0.1, 0.05}) {
        const double delta = integrate(
            [&](double x) { return net.derivative(0, eps, x - x0) * psi(x); }, x0 - eps, x0 + eps);
        CHECK(delta == doctest::Approx(psi(x0)).epsilon(10 * eps * eps));
        const double ddelta = integrate(
            [&](double x) { return net.derivative(1, eps, x - x0) * psi(x); }, x0 - eps, x0 + eps);
        // <delta', psi> = -psi'(x0)
        CHECK(ddelta == doctest::Approx(-dpsi(x0)).epsilon(10 * eps * eps));
    }
}

TEST_CASE("regularize_potential builds the coefficient profiles") {
    auto t = std::make_shared<const TruncationSet>(enumerate_truncation(2, 1));
    const auto grid = window(2.0, 401);
    SingularPotential Q;
    Q.s = 2.0;
    Q.atoms[MultiIndex::zero()] = {{0.0, 1.0, 0}};
    Q.atoms[MultiIndex{0, 1}] = {{0.5, 2.0, 0}, {-0.5, -1.0, 1}};
    MollifierSpec net;
    const auto q = regularize_potential(Q, net, 0.2, grid, t);
    CHECK(q.norm_kind() == SpaceNorm::linf_in_x);
    CHECK(q.find(MultiIndex{1}) == nullptr);
    const auto& c0 = q.coefficient(MultiIndex::zero());
    const auto& c2 = q.coefficient(MultiIndex{0, 1});
    for (std::size_t i = 0; i < grid.nx; i += 7) {
        const double x = grid.x(i);
        CHECK(c0(0, i) == doctest::Approx(net.derivative(0, 0.2, x)));
        CHECK(c2(0, i) == doctest::Approx(2.0 * net.derivative(0, 0.2, x - 0.5) -
                                          net.derivative(1, 0.2, x + 0.5)));
    }
    CHECK(c0(0, 200) == doctest::Approx(bump_sup() / 0.2));
}

TEST_CASE("potential validation") {
    auto t = std::make_shared<const TruncationSet>(enumerate_truncation(2, 1));
    const auto grid = window(1.0, 101);
    SingularPotential Q;
    Q.s = 1.0;
    Q.atoms[MultiIndex::zero()] = {{1.0, 1.0, 0}};
    CHECK_THROWS_AS(Q.validate(grid, *t), ValidationError);
    Q.atoms[MultiIndex::zero()] = {{0.0, 1.0, 2}};
    CHECK_THROWS_AS(Q.validate(grid, *t), ValidationError);
    Q.atoms.clear();
    Q.atoms[MultiIndex{2}] = {{0.0, 1.0, 0}};
    CHECK_THROWS_AS(Q.validate(grid, *t), ValidationError);
    Q.atoms.clear();
    CHECK(Q.empty());
    CHECK_NOTHROW(Q.validate(grid, *t));
}

TEST_CASE("H^{-s} norms of atoms against closed-form Fourier integrals") {
    // (1/2pi) int (1+xi^2)^{-1} = 1/2
    CHECK(hminus_norm_atoms({{0.0, 1.0, 0}}, 1.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    // (1/2pi) int xi^2 (1+xi^2)^{-2} = 1/4
    CHECK(hminus_norm_atoms({{0.3, 1.0, 1}}, 2.0) == doctest::Approx(0.5).epsilon(1e-6));
    for (double d : {0.1, 0.5, 1.0, 3.0}) {
        const double v = hminus_norm_atoms({{-0.2, 1.0, 0}, {-0.2 + d, 1.0, 0}}, 1.0);
        CHECK(v == doctest::Approx(std::sqrt(1.0 + std::exp(-d))).epsilon(1e-5));
    }
    // weight scales linearly, location is translation invariant
    CHECK(hminus_norm_atoms({{0.7, -3.0, 0}}, 1.0) ==
          doctest::Approx(3.0 * std::sqrt(0.5)).epsilon(1e-6));
    // (1/2pi) int (1+xi^2)^{-2} = 1/4
    CHECK(hminus_norm_atoms({{0.0, 1.0, 0}}, 2.0) == doctest::Approx(0.5).epsilon(1e-6));
    const auto detail = hminus_norm_atoms_detailed({{0.0, 1.0, 0}, {0.4, 1.0, 0}}, 1.0);
    CHECK(detail.tail_bound >= 0.0);
    CHECK(detail.tail_bound < 1e-6);
}

TEST_CASE("H^{-s} domain errors") {
    CHECK_THROWS_AS(hminus_norm_atoms({{0.0, 1.0, 0}}, 0.5), DomainError);
    CHECK_THROWS_AS(hminus_norm_atoms({{0.0, 1.0, 1}}, 1.5), DomainError);
    CHECK(hminus_norm_atoms({}, 1.0) == 0.0);
}

TEST_CASE("property: sup-norm estimate holds for standard mollification") {
    auto t = std::make_shared<const TruncationSet>(enumerate_truncation(2, 1));
    const auto grid = window(2.0, 4001);
    SingularPotential Q;
    Q.s = 1.0;
    Q.atoms[MultiIndex::zero()] = {{0.0, 1.0, 0}};
    Q.atoms[MultiIndex{1}] = {{0.3, 2.0, 0}, {-0.4, -1.0, 1}};
    Q.atoms[MultiIndex{0, 1}] = {{0.1, 1.0, 1}};
    Q.s = 2.0;
    MollifierSpec net;
    for (double eps : {0.4, 0.2, 0.1, 0.05, 0.02}) {
        const auto q = regularize_potential(Q, net, eps, grid, t);
        const auto bound = linf_bound_star1(Q, net, eps);
        for (const auto& [gamma, b] : bound) {
            const double measured = sup_norm(q.coefficient(gamma));
            CHECK(measured <= b);
        }
    }
    MollifierSpec perturbed{MollifierScaling::standard, MollifierPerturbation{}};
    CHECK_THROWS_AS(linf_bound_star1(Q, perturbed, 0.1), ValidationError);
}

TEST_CASE("moderateness fit recovers synthetic power laws") {
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05, 0.025};
    std::vector<double> n;
    for (double e : eps)
        n.push_back(3.0 * std::pow(e, -1.5));
    const auto r = moderateness_fit(eps, n);
    CHECK(r.N == doctest::Approx(1.5));
    CHECK(r.C == doctest::Approx(3.0));
    CHECK(r.r2 == doctest::Approx(1.0));
    CHECK(r.model == "power");
    CHECK(r.verdict == "moderate");
    CHECK(r.envelope_C == doctest::Approx(3.0));
    for (std::size_t i = 0; i < eps.size(); ++i)
        CHECK(n[i] <= r.envelope_C * std::pow(eps[i], -r.N) * (1 + 1e-12));
}

TEST_CASE("moderateness fit recognizes log-type growth") {
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};
    std::vector<double> n;
    for (double e : eps)
        n.push_back(2.0 * std::log(1.0 / e));
    const auto r = moderateness_fit(eps, n);
    CHECK(r.log_type_flag);
    CHECK(r.log_kappa == doctest::Approx(1.0));
    CHECK(r.log_C == doctest::Approx(2.0));
    CHECK(r.log_r2 >= kFitR2Threshold);
    CHECK(r.raw_slope < 0.5);
    CHECK(r.verdict == "moderate");
}

TEST_CASE("moderateness fit: flat, zero and irregular nets") {
    const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    const auto flat = moderateness_fit(eps, {0.42, 0.421, 0.419, 0.42});
    CHECK(flat.bounded_flag);
    CHECK(flat.verdict == "moderate");
    CHECK(flat.N == doctest::Approx(0.0).scale(1.0).epsilon(0.01));

    const auto zero = moderateness_fit(eps, {0.0, 0.0, 0.0, 0.0});
    CHECK(zero.zero_net);
    CHECK(zero.model == "zero");

    const auto wild = moderateness_fit(eps, {1.0, 100.0, 0.01, 50.0});
    CHECK(wild.model == "none");
    CHECK(wild.verdict == "inconclusive");

    CHECK_THROWS_AS(moderateness_fit({0.2, 0.1}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(moderateness_fit({2.0, 0.2, 0.1}, {1.0, 2.0, 3.0}), DomainError);
    CHECK_THROWS_AS(moderateness_fit(eps, {1.0, 2.0, NAN, 3.0}), NumericalError);
    const auto j = to_json(flat);
    CHECK(j.at("verdict") == "moderate");
    CHECK(j.contains("envelope_C"));
}

TEST_CASE("mollify_field converges at second order in the width") {
    auto t = std::make_shared<const TruncationSet>(enumerate_truncation(1, 1));
    const auto grid = window(4.0, 1601);
    ChaosField q(t, grid, SpaceNorm::linf_in_x, false);
    GridFunction c = GridFunction::space(grid);
    for (std::size_t i = 0; i < grid.nx; ++i)
        c(0, i) = std::exp(-grid.x(i) * grid.x(i));
    q.set(MultiIndex::zero(), c);
    MollifierSpec net;
    double prev = 0.0;
    for (double eps : {0.4, 0.2, 0.1}) {
        const auto m = mollify_field(q, net, eps);
        auto d = m.coefficient(MultiIndex::zero());
        d -= c;
        const double err = sup_norm(d);
        if (prev > 0.0) {
            CHECK(prev / err >= 3.5);
            CHECK(prev / err <= 4.5);
        }
        prev = err;
    }
}

TEST_CASE("mollifier values warn when unresolved") {
    const auto grid = window(1.0, 11);
    std::vector<std::string> warnings;
    MollifierSpec net;
    const auto v = mollifier_values(net, 0.1, grid, 0.0, &warnings);
    CHECK_FALSE(resolvable(net, 0.1, grid));
    CHECK(warnings.size() == 1);
    CHECK(v.nodes() == grid.nx);
    CHECK(resolvable(net, 0.5, grid));
}
