#include "chaospde/multiindex.hpp"

#include "chaospde/error.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace chaospde {

MultiIndex::MultiIndex(std::vector<std::uint32_t> entries) : entries_(std::move(entries)) {
    canonicalize();
}

MultiIndex::MultiIndex(std::initializer_list<std::uint32_t> entries) : entries_(entries) {
    canonicalize();
}

MultiIndex MultiIndex::unit(std::size_t k) {
    if (k == 0)
        throw ValidationError("unit multi-index e_k requires k >= 1");
    std::vector<std::uint32_t> e(k, 0u);
    e[k - 1] = 1u;
    return MultiIndex(std::move(e));
}

void MultiIndex::canonicalize() {
    while (!entries_.empty() && entries_.back() == 0u)
        entries_.pop_back();
}

std::uint32_t MultiIndex::order() const noexcept {
    return std::accumulate(entries_.begin(), entries_.end(), 0u);
}

double MultiIndex::factorial() const noexcept {
    double f = 1.0;
    for (auto e : entries_)
        f *= std::tgamma(static_cast<double>(e) + 1.0);
    return f;
}

bool MultiIndex::leq(const MultiIndex& other) const noexcept {
    if (entries_.size() > other.entries_.size())
        return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i] > other.entries_[i])
            return false;
    return true;
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
    std::vector<std::uint32_t> e(std::max(size(), other.size()), 0u);
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = (*this)[i] + other[i];
    return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
    if (!other.leq(*this))
        throw DomainError("multi-index difference " + to_string() + " - " + other.to_string() +
                          " has negative entries");
    std::vector<std::uint32_t> e(entries_);
    for (std::size_t i = 0; i < other.size(); ++i)
        e[i] -= other.entries_[i];
    return MultiIndex(std::move(e));
}

std::string MultiIndex::to_string() const {
    if (entries_.empty())
        return "(0)";
    std::string s = "(";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (i)
            s += ',';
        s += std::to_string(entries_[i]);
    }
    s += ')';
    return s;
}

MultiIndex MultiIndex::parse(std::string_view text) {
    auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front())))
            v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back())))
            v.remove_suffix(1);
        return v;
    };
    auto body = trim(text);
    if (body.size() < 2 || body.front() != '(' || body.back() != ')')
        throw ValidationError("malformed multi-index '" + std::string(text) + "'");
    body = trim(body.substr(1, body.size() - 2));
    std::vector<std::uint32_t> entries;
    while (!body.empty()) {
        auto comma = body.find(',');
        auto token = trim(body.substr(0, comma));
        std::uint32_t v = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
            throw ValidationError("malformed multi-index entry '" + std::string(token) + "' in '" +
                                  std::string(text) + "'");
        entries.push_back(v);
        if (comma == std::string_view::npos)
            break;
        body = body.substr(comma + 1);
    }
    return MultiIndex(std::move(entries));
}

std::size_t MultiIndex::hash() const noexcept {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto e : entries_) {
        h ^= e + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

double log_weight(const MultiIndex& gamma) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i)
        if (gamma[i])
            s += gamma[i] * std::log(2.0 * static_cast<double>(i + 1));
    return s;
}

double weight(const MultiIndex& gamma) {
    const double lw = log_weight(gamma);
    if (lw > std::log(std::numeric_limits<double>::max()))
        throw NumericalError("weight of " + gamma.to_string() + " overflows (log weight " +
                             std::to_string(lw) + ")");
    // exact product while representable, so integer weights stay integers
    double w = 1.0;
    for (std::size_t k = 0; k < gamma.size(); ++k)
        for (std::uint32_t j = 0; j < gamma[k]; ++j)
            w *= 2.0 * static_cast<double>(k + 1);
    return w;
}

double weight_pow(const MultiIndex& gamma, double neg_p) noexcept {
    return std::exp(-neg_p * log_weight(gamma));
}

std::vector<std::pair<MultiIndex, MultiIndex>> decompositions(const MultiIndex& gamma) {
    const auto g = gamma.entries();
    std::size_t count = 1;
    for (auto e : g)
        count *= static_cast<std::size_t>(e) + 1;

    std::vector<std::pair<MultiIndex, MultiIndex>> out;
    out.reserve(count);
    std::vector<std::uint32_t> alpha(g.size(), 0u);
    for (std::size_t n = 0; n < count; ++n) {
        std::vector<std::uint32_t> beta(g.begin(), g.end());
        for (std::size_t i = 0; i < g.size(); ++i)
            beta[i] -= alpha[i];
        out.emplace_back(MultiIndex(alpha), MultiIndex(std::move(beta)));
        // mixed-radix increment, first coordinate fastest
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (++alpha[i] <= g[i])
                break;
            alpha[i] = 0;
        }
    }
    return out;
}

double truncation_count(std::size_t max_vars, std::size_t max_order) {
    // binomial(K+P, P) built incrementally; exact while the result fits 2^53
    double c = 1.0;
    for (std::size_t i = 1; i <= max_order; ++i)
        c = c * static_cast<double>(max_vars + i) / static_cast<double>(i);
    return std::round(c);
}

namespace {

// Compositions of `total` into `parts` non-negative entries, larger leading
// entries first.
void compositions(std::size_t total, std::size_t parts, std::vector<std::uint32_t>& prefix,
                  std::vector<MultiIndex>& out) {
    if (parts == 1) {
        prefix.push_back(static_cast<std::uint32_t>(total));
        out.emplace_back(prefix);
        prefix.pop_back();
        return;
    }
    for (std::size_t first = total + 1; first-- > 0;) {
        prefix.push_back(static_cast<std::uint32_t>(first));
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop_back();
    }
}

// Sums of (2N)^{-p gamma} grouped by |gamma| over the shape (K, P).
std::vector<double> level_sums(double p, std::size_t max_vars, std::size_t max_order) {
    std::vector<double> c(max_order + 1, 0.0);
    c[0] = 1.0;
    for (std::size_t k = 1; k <= max_vars; ++k) {
        const double r = std::pow(2.0 * static_cast<double>(k), -p);
        for (std::size_t j = 1; j <= max_order; ++j)
            c[j] += r * c[j - 1];
    }
    return c;
}

void require_summable(double p) {
    if (!(p > 1.0))
        throw DomainError("C_p requires p > 1 (got " + std::to_string(p) + "); the series diverges");
}

} // namespace

TruncationSet enumerate_truncation(std::size_t max_vars, std::size_t max_order, std::size_t cap) {
    if (max_vars == 0)
        throw ValidationError("truncation requires K >= 1");
    const double count = truncation_count(max_vars, max_order);
    if (count > static_cast<double>(cap))
        throw SizeError("truncation K=" + std::to_string(max_vars) + ", P=" +
                        std::to_string(max_order) + " has " + std::to_string(count) +
                        " members, above the cap of " + std::to_string(cap));

    TruncationSet set;
    set.max_vars_ = max_vars;
    set.max_order_ = max_order;
    set.members_.reserve(static_cast<std::size_t>(count));
    std::vector<std::uint32_t> prefix;
    prefix.reserve(max_vars);
    for (std::size_t n = 0; n <= max_order; ++n) {
        set.level_start_.push_back(set.members_.size());
        compositions(n, max_vars, prefix, set.members_);
    }
    set.level_start_.push_back(set.members_.size());
    set.lookup_.reserve(set.members_.size());
    for (std::size_t i = 0; i < set.members_.size(); ++i)
        set.lookup_.emplace(set.members_[i], i);
    return set;
}

std::optional<std::size_t> TruncationSet::index_of(const MultiIndex& gamma) const {
    auto it = lookup_.find(gamma);
    if (it == lookup_.end())
        return std::nullopt;
    return it->second;
}

std::pair<std::size_t, std::size_t> TruncationSet::level(std::size_t n) const {
    if (n > max_order_)
        return {members_.size(), members_.size()};
    return {level_start_[n], level_start_[n + 1]};
}

double cp_sum(double p, const TruncationSet& set) {
    require_summable(p);
    double s = 0.0;
    for (const auto& g : set.members())
        s += weight_pow(g, p);
    return s;
}

double cp_sum(double p, std::size_t max_vars, std::size_t max_order) {
    require_summable(p);
    const auto c = level_sums(p, max_vars, max_order);
    return std::accumulate(c.begin(), c.end(), 0.0);
}

double cp_limit(double p) {
    require_summable(p);
    double log_c = 0.0;
    for (int j = 1; j < 4096; ++j) {
        const double pj = p * j;
        const double term = std::exp2(-pj) * boost::math::zeta(pj) / j;
        log_c += term;
        if (term < 1e-18 * log_c)
            break;
    }
    return std::exp(log_c);
}

double s_for_constant(double c) {
    if (!(c > 0.0))
        throw DomainError("s_for_constant requires c > 0");
    return std::max(0.0, std::log(c) / std::log(2.0) + 1.0);
}

namespace {

double dp_exponent(double p, unsigned m, unsigned n, double d) {
    if (!(d > 0.0))
        throw DomainError("dp_bound requires d > 0");
    const double s = s_for_constant(std::pow(d, static_cast<double>(n)));
    const double e = p - static_cast<double>(m) - s * static_cast<double>(n);
    if (!(e > 1.0))
        throw DomainError("dp_bound requires p - m - s n > 1 (got " + std::to_string(e) + ")");
    return e;
}

} // namespace

DpBound dp_bound(double p, unsigned m, unsigned n, double d, const TruncationSet& set) {
    const double e = dp_exponent(p, m, n, d);
    double partial = 0.0;
    for (const auto& g : set.members()) {
        const double len = g.order();
        partial += std::pow(len, m) * std::pow(d, static_cast<double>(n) * len) * weight_pow(g, p);
    }
    return {partial, cp_sum(e, set), e};
}

DpBound dp_bound(double p, unsigned m, unsigned n, double d, std::size_t max_vars,
                 std::size_t max_order) {
    const double e = dp_exponent(p, m, n, d);
    const auto c = level_sums(p, max_vars, max_order);
    double partial = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double len = static_cast<double>(j);
        partial += std::pow(len, m) * std::pow(d, static_cast<double>(n) * len) * c[j];
    }
    return {partial, cp_sum(e, max_vars, max_order), e};
}

} // namespace chaospde
