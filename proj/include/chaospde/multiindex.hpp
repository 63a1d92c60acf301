#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chaospde {

/// Finitely supported sequence of non-negative integers.
///
/// Stored in canonical form: trailing zeros are dropped, so the zero
/// multi-index has no entries. Coordinates are 1-based in the mathematical
/// sense (e_1 is the first unit index) but the accessors below are 0-based.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<std::uint32_t> entries);
    MultiIndex(std::initializer_list<std::uint32_t> entries);

    static MultiIndex zero() { return {}; }
    /// Unit index e_k, k >= 1.
    static MultiIndex unit(std::size_t k);

    /// Number of stored entries (position of the last nonzero coordinate).
    std::size_t size() const noexcept { return entries_.size(); }
    bool is_zero() const noexcept { return entries_.empty(); }
    std::span<const std::uint32_t> entries() const noexcept { return entries_; }

    /// 0-based coordinate access; zero past the stored length.
    std::uint32_t operator[](std::size_t i) const noexcept {
        return i < entries_.size() ? entries_[i] : 0u;
    }

    /// |gamma| = sum of entries.
    std::uint32_t order() const noexcept;
    /// gamma! = product of entry factorials.
    double factorial() const noexcept;

    /// Componentwise partial order alpha <= beta.
    bool leq(const MultiIndex& other) const noexcept;
    /// alpha < beta: alpha <= beta and alpha != beta.
    bool strictly_less(const MultiIndex& other) const noexcept {
        return leq(other) && *this != other;
    }

    MultiIndex operator+(const MultiIndex& other) const;
    /// Componentwise difference; requires other <= *this.
    MultiIndex operator-(const MultiIndex& other) const;

    bool operator==(const MultiIndex&) const = default;
    std::strong_ordering operator<=>(const MultiIndex& other) const {
        return entries_ <=> other.entries_;
    }

    /// Text form "(2,0,1)"; the zero index prints as "(0)".
    std::string to_string() const;
    /// Accepts "(2,0,1)", "()", "(0)", and tolerates whitespace and trailing zeros.
    static MultiIndex parse(std::string_view text);

    std::size_t hash() const noexcept;

private:
    void canonicalize();
    std::vector<std::uint32_t> entries_;
};

struct MultiIndexHash {
    std::size_t operator()(const MultiIndex& g) const noexcept { return g.hash(); }
};

/// log of (2N)^gamma = sum_k gamma_k log(2k).
double log_weight(const MultiIndex& gamma) noexcept;

/// (2N)^gamma = prod_k (2k)^{gamma_k}. Throws NumericalError when the value
/// is not representable as a double; use log_weight in that regime.
double weight(const MultiIndex& gamma);

/// weight(gamma)^{-p}, evaluated in log space (never overflows).
double weight_pow(const MultiIndex& gamma, double neg_p) noexcept;

/// All ordered pairs (alpha, beta) with alpha + beta = gamma, alpha ascending
/// in mixed-radix order with the first coordinate varying fastest.
std::vector<std::pair<MultiIndex, MultiIndex>> decompositions(const MultiIndex& gamma);

/// Default cap on enumerated truncation sets.
inline constexpr std::size_t kDefaultTruncationCap = 200'000;

/// binomial(K + P, K) as a double (exact for the sizes we can enumerate).
double truncation_count(std::size_t max_vars, std::size_t max_order);

/// Finite surrogate of the multi-index set: every gamma supported in the
/// first K coordinates with |gamma| <= P.
///
/// Members are graded by |gamma|; within a grade they are ordered
/// lexicographically on the K-tuple with larger leading entries first, so
/// level one reads e_1, e_2, ..., e_K.
class TruncationSet {
public:
    TruncationSet() = default;

    std::size_t max_vars() const noexcept { return max_vars_; }
    std::size_t max_order() const noexcept { return max_order_; }
    std::size_t size() const noexcept { return members_.size(); }
    const std::vector<MultiIndex>& members() const noexcept { return members_; }
    const MultiIndex& operator[](std::size_t i) const { return members_[i]; }

    std::optional<std::size_t> index_of(const MultiIndex& gamma) const;
    bool contains(const MultiIndex& gamma) const { return index_of(gamma).has_value(); }

    /// Half-open member range [first, last) holding the indices of order n.
    std::pair<std::size_t, std::size_t> level(std::size_t n) const;

    bool operator==(const TruncationSet& other) const {
        return max_vars_ == other.max_vars_ && max_order_ == other.max_order_;
    }

    friend TruncationSet enumerate_truncation(std::size_t, std::size_t, std::size_t);

private:
    std::size_t max_vars_ = 0;
    std::size_t max_order_ = 0;
    std::vector<MultiIndex> members_;
    std::vector<std::size_t> level_start_;
    std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> lookup_;
};

/// Throws ValidationError for K = 0 and SizeError when binomial(K+P, K) > cap.
TruncationSet enumerate_truncation(std::size_t max_vars, std::size_t max_order,
                                   std::size_t cap = kDefaultTruncationCap);

/// Partial sum of C_p = sum_gamma (2N)^{-p gamma} over an enumerated set.
double cp_sum(double p, const TruncationSet& set);

/// Same partial sum over the shape (K, P) without enumerating it: a
/// coordinate-by-coordinate convolution over total order, O(K P^2).
double cp_sum(double p, std::size_t max_vars, std::size_t max_order);

/// The full series C_p = prod_k (1 - (2k)^{-p})^{-1}, summed through
/// log C_p = sum_j 2^{-pj} zeta(pj) / j.
double cp_limit(double p);

/// s = max(0, ln c / ln 2 + 1); guarantees c^{|gamma|} <= (2N)^{s gamma}.
double s_for_constant(double c);

struct DpBound {
    double partial_sum;
    double bound;
    double exponent;  ///< p - m - s n, the C_p argument of the bound
};

/// sum_gamma |gamma|^m d^{n |gamma|} (2N)^{-p gamma} over the set, together
/// with the bound C_{p - m - s n} at s = s_for_constant(d^n).
DpBound dp_bound(double p, unsigned m, unsigned n, double d, const TruncationSet& set);
DpBound dp_bound(double p, unsigned m, unsigned n, double d, std::size_t max_vars,
                 std::size_t max_order);

} // namespace chaospde
