#pragma once

#include "chaospde/grid.hpp"
#include "chaospde/multiindex.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace chaospde {

/// Which spatial norm ||.||_X enters the Kondratiev sum.
enum class SpaceNorm {
    l2_in_x,        ///< time-independent data in L2
    sup_t_l2_in_x,  ///< sup over time levels of the L2 norm in x
    linf_in_x,      ///< sup over all grid values (bounded potentials)
};

std::string to_string(SpaceNorm kind);

/// Truncated chaos expansion U = sum_gamma u_gamma H_gamma with grid-valued
/// coefficients. Coefficients are stored densely in truncation order; an
/// empty slot means a zero coefficient.
class ChaosField {
public:
    ChaosField() = default;
    ChaosField(std::shared_ptr<const TruncationSet> truncation, GridSpec grid, SpaceNorm kind,
               bool time_dependent);

    const TruncationSet& truncation() const noexcept { return *truncation_; }
    const std::shared_ptr<const TruncationSet>& truncation_ptr() const noexcept {
        return truncation_;
    }
    const GridSpec& grid() const noexcept { return grid_; }
    SpaceNorm norm_kind() const noexcept { return kind_; }
    bool time_dependent() const noexcept { return time_dependent_; }
    std::size_t size() const noexcept { return coeffs_.size(); }

    bool has(std::size_t i) const noexcept { return !coeffs_[i].empty(); }
    /// Stored coefficient or nullptr for a zero/absent one.
    const GridFunction* find(const MultiIndex& gamma) const;
    const GridFunction& at(std::size_t i) const noexcept { return coeffs_[i]; }
    /// Copy of the coefficient, zero-filled when absent.
    GridFunction coefficient(const MultiIndex& gamma) const;
    GridFunction zero_coefficient() const;

    /// Throws ValidationError for gamma outside the truncation and ShapeError
    /// for a grid function of the wrong shape.
    void set(const MultiIndex& gamma, GridFunction value);
    void set(std::size_t i, GridFunction value);

    /// ||f_gamma||_X for the i-th member (0 when absent).
    double coefficient_norm(std::size_t i) const;

    ChaosField& operator+=(const ChaosField& other);
    ChaosField& operator-=(const ChaosField& other);
    ChaosField& operator*=(double c);

    /// Same coefficients, different norm tag.
    ChaosField with_norm(SpaceNorm kind) const;

private:
    void check_compatible(const ChaosField& other, const char* what) const;

    std::shared_ptr<const TruncationSet> truncation_;
    GridSpec grid_;
    SpaceNorm kind_ = SpaceNorm::l2_in_x;
    bool time_dependent_ = false;
    std::vector<GridFunction> coeffs_;
};

/// Probabilists' Hermite polynomial He_n(x) via the three-term recurrence.
double hermite_polynomial(unsigned n, double x) noexcept;

/// L2(R)-orthonormal Hermite function xi_k, k >= 1:
/// xi_k(x) = pi^{-1/4} ((k-1)!)^{-1/2} e^{-x^2/2} He_{k-1}(sqrt(2) x),
/// evaluated with the normalized recurrence (stable for k in the hundreds).
double hermite_function(unsigned k, double x);

/// sqrt( sum_gamma ||f_gamma||_X^2 (2N)^{-p gamma} ), summed in truncation order.
double kondratiev_norm(const ChaosField& field, double p);

struct WickOptions {
    std::size_t workers = 1;
    /// When set, receives the X-norm of the convolution terms that fall
    /// outside the common truncation.
    double* dropped_mass = nullptr;
};

/// (U wick V)_gamma = sum_{alpha+beta=gamma} u_alpha v_beta, truncated to the
/// common truncation. Time-independent operands broadcast over time levels.
ChaosField wick_product(const ChaosField& u, const ChaosField& v, const WickOptions& opts = {});

/// Coefficient at the zero multi-index (zero grid when absent).
GridFunction expectation(const ChaosField& field);

/// Standard normals theta_1..theta_K drawn from a seeded generator; the
/// stream is fixed for a given seed on every platform.
std::vector<double> standard_normals(std::uint64_t seed, std::size_t count);

/// H_gamma(theta) = prod_k He_{gamma_k}(theta_k).
double fourier_hermite(const MultiIndex& gamma, std::span<const double> theta) noexcept;

/// sum_gamma f_gamma H_gamma(theta) with theta = standard_normals(seed, K).
GridFunction sample_realization(const ChaosField& field, std::uint64_t seed);

/// Truncation-based surrogate for the critical exponent: the smallest integer
/// p in [0, p_max] for which the share of the squared Kondratiev norm carried
/// by multi-indices touching the upper half of the noise variables is at most
/// `threshold`. Returns p_max when no exponent qualifies.
unsigned critical_exponent_estimate(const ChaosField& field, double threshold,
                                    unsigned p_max = 12);

/// Space white noise W_x: coefficient xi_k(x) at e_k for k <= K.
ChaosField white_noise_space(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                             std::size_t modes);

/// g(x) W_t: coefficient g(x) xi_k(t) at e_k for k <= K.
ChaosField white_noise_time(const GridSpec& grid, std::shared_ptr<const TruncationSet> truncation,
                            std::size_t modes, const GridFunction& g);

/// CSV with header `gamma,time_index,node_index,value`; one row per stored
/// value. With a stride > 1 only every stride-th time level and the last one
/// are written.
void write_csv(const ChaosField& field, const std::filesystem::path& path,
               std::size_t time_stride = 1);
ChaosField read_csv(const std::filesystem::path& path,
                    std::shared_ptr<const TruncationSet> truncation, const GridSpec& grid,
                    SpaceNorm kind, bool time_dependent);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

} // namespace chaospde
