#include "chaospde/chaos.hpp"

#include "chaospde/error.hpp"
#include "chaospde/parallel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace chaospde {

std::string to_string(SpaceNorm kind) {
    switch (kind) {
    case SpaceNorm::l2_in_x:
        return "L2_in_x";
    case SpaceNorm::sup_t_l2_in_x:
        return "sup_t_L2_in_x";
    case SpaceNorm::linf_in_x:
        return "Linf_in_x";
    }
    return "unknown";
}

ChaosField::ChaosField(std::shared_ptr<const TruncationSet> truncation, GridSpec grid,
                       SpaceNorm kind, bool time_dependent)
    : truncation_(std::move(truncation)), grid_(grid), kind_(kind),
      time_dependent_(time_dependent) {
    if (!truncation_)
        throw ValidationError("chaos field requires a truncation set");
    coeffs_.resize(truncation_->size());
}

const GridFunction* ChaosField::find(const MultiIndex& gamma) const {
    auto idx = truncation_->index_of(gamma);
    if (!idx || coeffs_[*idx].empty())
        return nullptr;
    return &coeffs_[*idx];
}

GridFunction ChaosField::zero_coefficient() const {
    return time_dependent_ ? GridFunction::space_time(grid_) : GridFunction::space(grid_);
}

GridFunction ChaosField::coefficient(const MultiIndex& gamma) const {
    if (const auto* c = find(gamma))
        return *c;
    return zero_coefficient();
}

void ChaosField::set(const MultiIndex& gamma, GridFunction value) {
    auto idx = truncation_->index_of(gamma);
    if (!idx)
        throw ValidationError("multi-index " + gamma.to_string() + " is outside the truncation (K=" +
                              std::to_string(truncation_->max_vars()) +
                              ", P=" + std::to_string(truncation_->max_order()) + ")");
    set(*idx, std::move(value));
}

void ChaosField::set(std::size_t i, GridFunction value) {
    const std::size_t levels = time_dependent_ ? grid_.nt : 1;
    if (!value.empty() && (value.levels() != levels || value.nodes() != grid_.nx))
        throw ShapeError("coefficient shape " + std::to_string(value.levels()) + "x" +
                         std::to_string(value.nodes()) + " does not match field shape " +
                         std::to_string(levels) + "x" + std::to_string(grid_.nx));
    coeffs_.at(i) = std::move(value);
}

double ChaosField::coefficient_norm(std::size_t i) const {
    const auto& c = coeffs_[i];
    if (c.empty())
        return 0.0;
    switch (kind_) {
    case SpaceNorm::linf_in_x:
        return sup_norm(c);
    case SpaceNorm::l2_in_x:
    case SpaceNorm::sup_t_l2_in_x:
        return sup_t_l2_norm(c, grid_.dx());
    }
    return 0.0;
}

void ChaosField::check_compatible(const ChaosField& other, const char* what) const {
    if (!(other.grid_ == grid_) || other.time_dependent_ != time_dependent_)
        throw ShapeError(std::string("chaos fields live on different grids in ") + what);
    if (!(*other.truncation_ == *truncation_))
        throw ShapeError(std::string("chaos fields use different truncations in ") + what);
}

ChaosField& ChaosField::operator+=(const ChaosField& other) {
    check_compatible(other, "+=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (other.coeffs_[i].empty())
            continue;
        if (coeffs_[i].empty())
            coeffs_[i] = other.coeffs_[i];
        else
            coeffs_[i] += other.coeffs_[i];
    }
    return *this;
}

ChaosField& ChaosField::operator-=(const ChaosField& other) {
    check_compatible(other, "-=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (other.coeffs_[i].empty())
            continue;
        if (coeffs_[i].empty())
            coeffs_[i] = zero_coefficient();
        coeffs_[i] -= other.coeffs_[i];
    }
    return *this;
}

ChaosField& ChaosField::operator*=(double c) {
    for (auto& f : coeffs_)
        f *= c;
    return *this;
}

ChaosField ChaosField::with_norm(SpaceNorm kind) const {
    ChaosField out = *this;
    out.kind_ = kind;
    return out;
}

double hermite_polynomial(unsigned n, double x) noexcept {
    if (n == 0)
        return 1.0;
    double prev = 1.0;
    double cur = x;
    for (unsigned k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_function(unsigned k, double x) {
    if (k == 0)
        throw ValidationError("Hermite functions are indexed from k = 1");
    const double psi0 = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
    if (k == 1)
        return psi0;
    double prev = psi0;
    double cur = std::numbers::sqrt2 * x * psi0;
    for (unsigned n = 1; n + 1 < k; ++n) {
        const double nn = static_cast<double>(n);
        const double next = std::sqrt(2.0 / (nn + 1.0)) * x * cur - std::sqrt(nn / (nn + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double kondratiev_norm(const ChaosField& field, double p) {
    if (p < 0.0)
        throw DomainError("Kondratiev norm requires p >= 0");
    const auto& members = field.truncation().members();
    double s = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!field.has(i))
            continue;
        const double c = field.coefficient_norm(i);
        s += c * c * weight_pow(members[i], p);
    }
    return std::sqrt(s);
}

namespace {

// out += a * b pointwise, broadcasting single-row operands over time levels.
void accumulate_product(GridFunction& out, const GridFunction& a, const GridFunction& b) {
    for (std::size_t n = 0; n < out.levels(); ++n) {
        auto dst = out.row(n);
        auto ra = a.row_at(n);
        auto rb = b.row_at(n);
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] += ra[i] * rb[i];
    }
}

} // namespace

ChaosField wick_product(const ChaosField& u, const ChaosField& v, const WickOptions& opts) {
    const auto& gu = u.grid();
    const auto& gv = v.grid();
    if (gu.nx != gv.nx || gu.x_min != gv.x_min || gu.x_max != gv.x_max)
        throw ShapeError("Wick product operands have different spatial grids");
    if (u.time_dependent() && v.time_dependent() && !(gu == gv))
        throw ShapeError("Wick product operands have different time grids");
    if (!(u.truncation() == v.truncation()))
        throw ShapeError("Wick product operands use different truncations");

    const bool td = u.time_dependent() || v.time_dependent();
    const GridSpec grid = u.time_dependent() ? gu : gv;
    SpaceNorm kind = u.norm_kind();
    if (td)
        kind = SpaceNorm::sup_t_l2_in_x;
    ChaosField out(u.truncation_ptr(), grid, kind, td);

    const auto& trunc = u.truncation();
    const auto& members = trunc.members();
    std::vector<GridFunction> coeffs(members.size());
    parallel_for(members.size(), opts.workers, [&](std::size_t g) {
        GridFunction acc;
        for (const auto& [alpha, beta] : decompositions(members[g])) {
            const auto* ua = u.find(alpha);
            const auto* vb = v.find(beta);
            if (!ua || !vb)
                continue;
            if (acc.empty())
                acc = td ? GridFunction::space_time(grid) : GridFunction::space(grid);
            accumulate_product(acc, *ua, *vb);
        }
        coeffs[g] = std::move(acc);
    });
    for (std::size_t g = 0; g < coeffs.size(); ++g)
        if (!coeffs[g].empty())
            out.set(g, std::move(coeffs[g]));

    if (opts.dropped_mass) {
        // Terms alpha + beta landing outside the truncation.
        std::map<MultiIndex, GridFunction> dropped;
        for (std::size_t a = 0; a < members.size(); ++a) {
            if (!u.has(a))
                continue;
            for (std::size_t b = 0; b < members.size(); ++b) {
                if (!v.has(b))
                    continue;
                MultiIndex sum = members[a] + members[b];
                if (trunc.contains(sum))
                    continue;
                auto [it, inserted] = dropped.try_emplace(
                    sum, td ? GridFunction::space_time(grid) : GridFunction::space(grid));
                accumulate_product(it->second, u.at(a), v.at(b));
            }
        }
        double mass = 0.0;
        for (const auto& [gamma, f] : dropped) {
            const double n = kind == SpaceNorm::linf_in_x ? sup_norm(f) : sup_t_l2_norm(f, grid.dx());
            mass += n * n;
        }
        *opts.dropped_mass = std::sqrt(mass);
    }
    return out;
}

GridFunction expectation(const ChaosField& field) {
    return field.coefficient(MultiIndex::zero());
}

std::vector<double> standard_normals(std::uint64_t seed, std::size_t count) {
    // Box-Muller on 53-bit uniforms from mt19937_64, whose output stream is
    // fixed by the standard (unlike std::normal_distribution).
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    std::vector<double> out;
    out.reserve(count + 1);
    while (out.size() < count) {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        out.push_back(r * std::cos(a));
        out.push_back(r * std::sin(a));
    }
    out.resize(count);
    return out;
}

double fourier_hermite(const MultiIndex& gamma, std::span<const double> theta) noexcept {
    double h = 1.0;
    for (std::size_t k = 0; k < gamma.size(); ++k)
        if (gamma[k])
            h *= hermite_polynomial(gamma[k], k < theta.size() ? theta[k] : 0.0);
    return h;
}

GridFunction sample_realization(const ChaosField& field, std::uint64_t seed) {
    const auto theta = standard_normals(seed, field.truncation().max_vars());
    GridFunction out = field.zero_coefficient();
    const auto& members = field.truncation().members();
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!field.has(i))
            continue;
        const double h = fourier_hermite(members[i], theta);
        auto dst = out.values();
        auto src = field.at(i).values();
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] += h * src[j];
    }
    return out;
}

unsigned critical_exponent_estimate(const ChaosField& field, double threshold, unsigned p_max) {
    if (!(threshold > 0.0))
        throw DomainError("critical exponent threshold must be positive");
    const auto& members = field.truncation().members();
    const std::size_t head_vars = (field.truncation().max_vars() + 1) / 2;
    std::vector<double> sq(members.size(), 0.0);
    for (std::size_t i = 0; i < members.size(); ++i)
        if (field.has(i)) {
            const double c = field.coefficient_norm(i);
            sq[i] = c * c;
        }
    for (unsigned p = 0; p <= p_max; ++p) {
        double total = 0.0;
        double tail = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (sq[i] == 0.0)
                continue;
            const double term = sq[i] * weight_pow(members[i], p);
            total += term;
            if (members[i].size() > head_vars)
                tail += term;
        }
        if (total == 0.0 || tail <= threshold * total)
            return p;
    }
    return p_max;
}

ChaosField white_noise_space(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                             std::size_t modes) {
    if (modes == 0)
        throw ValidationError("white noise requires at least one mode");
    if (modes > truncation->max_vars())
        throw ValidationError("white noise modes exceed the truncation's K");
    if (truncation->max_order() < 1)
        throw ValidationError("white noise needs a truncation with P >= 1");
    ChaosField out(std::move(truncation), grid, SpaceNorm::l2_in_x, false);
    for (std::size_t k = 1; k <= modes; ++k) {
        GridFunction c = GridFunction::space(grid);
        for (std::size_t i = 0; i < grid.nx; ++i)
            c(0, i) = hermite_function(static_cast<unsigned>(k), grid.x(i));
        out.set(MultiIndex::unit(k), std::move(c));
    }
    return out;
}

ChaosField white_noise_time(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                            std::size_t modes, const GridFunction& g) {
    if (modes == 0)
        throw ValidationError("white noise requires at least one mode");
    if (modes > truncation->max_vars())
        throw ValidationError("white noise modes exceed the truncation's K");
    if (truncation->max_order() < 1)
        throw ValidationError("white noise needs a truncation with P >= 1");
    if (g.nodes() != grid.nx || g.levels() != 1)
        throw ShapeError("white noise envelope g must be a space grid function");
    ChaosField out(std::move(truncation), grid, SpaceNorm::sup_t_l2_in_x, true);
    for (std::size_t k = 1; k <= modes; ++k) {
        GridFunction c = GridFunction::space_time(grid);
        for (std::size_t n = 0; n < grid.nt; ++n) {
            const double xi = hermite_function(static_cast<unsigned>(k), grid.t(n));
            for (std::size_t i = 0; i < grid.nx; ++i)
                c(n, i) = g(0, i) * xi;
        }
        out.set(MultiIndex::unit(k), std::move(c));
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw NumericalError("cannot format double");
    return std::string(buf, ptr);
}

void write_csv(const ChaosField& field, const std::filesystem::path& path, std::size_t time_stride) {
    if (time_stride == 0)
        throw ValidationError("CSV time stride must be positive");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ValidationError("cannot open '" + path.string() + "' for writing");
    os << "gamma,time_index,node_index,value\n";
    const auto& members = field.truncation().members();
    for (std::size_t g = 0; g < members.size(); ++g) {
        if (!field.has(g))
            continue;
        const std::string label = '"' + members[g].to_string() + '"';
        const auto& c = field.at(g);
        for (std::size_t n = 0; n < c.levels(); ++n) {
            if (n % time_stride != 0 && n + 1 != c.levels())
                continue;
            for (std::size_t i = 0; i < c.nodes(); ++i)
                os << label << ',' << n << ',' << i << ',' << format_double(c(n, i)) << '\n';
        }
    }
    if (!os)
        throw NumericalError("failed writing '" + path.string() + "'");
}

ChaosField read_csv(const std::filesystem::path& path,
                    std::shared_ptr<const TruncationSet> truncation, const GridSpec& grid,
                    SpaceNorm kind, bool time_dependent) {
    std::ifstream is(path);
    if (!is)
        throw ValidationError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line != "gamma,time_index,node_index,value")
        throw ValidationError("'" + path.string() + "' lacks the chaos field CSV header");
    ChaosField out(std::move(truncation), grid, kind, time_dependent);
    std::map<MultiIndex, GridFunction> coeffs;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::size_t close = 0;
        std::string label;
        if (line.front() == '"') {
            close = line.find('"', 1);
            if (close == std::string::npos)
                throw ValidationError("unterminated gamma at line " + std::to_string(lineno));
            label = line.substr(1, close - 1);
            ++close;
        } else {
            close = line.find(',');
            label = line.substr(0, close);
        }
        std::istringstream rest(line.substr(close + 1));
        std::size_t n = 0;
        std::size_t i = 0;
        double value = 0.0;
        char c1 = 0;
        char c2 = 0;
        std::string value_text;
        if (!(rest >> n >> c1 >> i >> c2 >> value_text) || c1 != ',' || c2 != ',')
            throw ValidationError("malformed CSV row at line " + std::to_string(lineno));
        auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{})
            throw ValidationError("malformed value at line " + std::to_string(lineno));
        const MultiIndex gamma = MultiIndex::parse(label);
        auto [it, inserted] = coeffs.try_emplace(gamma, out.zero_coefficient());
        if (n >= it->second.levels() || i >= it->second.nodes())
            throw ShapeError("CSV index out of range at line " + std::to_string(lineno));
        it->second(n, i) = value;
    }
    for (auto& [gamma, f] : coeffs)
        out.set(gamma, std::move(f));
    return out;
}

} // namespace chaospde
