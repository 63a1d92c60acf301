#pragma once

#include "chaospde/chaos.hpp"
#include "chaospde/grid.hpp"
#include "chaospde/multiindex.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace chaospde {

// ---------------------------------------------------------------------------
// Bump profile

/// Unit-mass bump phi(x) = e^{1/(x^2-1)} / Z on (-1, 1), zero outside.
double bump(double x) noexcept;
/// k-th derivative of the bump, from the closed form phi^{(k)} = P_k(x) / (x^2-1)^{2k} phi.
double bump_derivative(unsigned k, double x);
/// Z = int_{-1}^{1} e^{1/(x^2-1)} dx.
double bump_normalization();
/// sup |phi| = e^{-1} / Z.
double bump_sup();
/// ||phi^{(k)}||_{L2}.
double bump_derivative_l2(unsigned k);

// ---------------------------------------------------------------------------
// Mollifier nets

enum class MollifierScaling {
    standard,  ///< width eps
    log,       ///< width 1 / log(1/eps)
};

std::string to_string(MollifierScaling s);
MollifierScaling parse_scaling(const std::string& s);

/// Adds amplitude * eps^power * phi_width(x) to the net; used to build a
/// second regularization whose distance to the first has a known order.
struct MollifierPerturbation {
    double amplitude = 1.0;
    double power = 2.0;
    double width = 1.0;
};

struct MollifierSpec {
    MollifierScaling scaling = MollifierScaling::standard;
    std::optional<MollifierPerturbation> perturbation;

    /// Support half-width of phi_eps. Throws DomainError for eps outside (0, 1]
    /// (and eps = 1 under log scaling, where the width is unbounded).
    double width(double eps) const;
    /// k-th derivative of the net member at x.
    double derivative(unsigned k, double eps, double x) const;
    /// The widest support among the terms (for interior checks).
    double support(double eps) const;
};

/// Nodal values of phi_eps(x - center). Appends a warning when the width is
/// below 2 dx.
GridFunction mollifier_values(const MollifierSpec& spec, double eps, const GridSpec& grid,
                              double center, std::vector<std::string>* warnings = nullptr);

/// True when the net member at eps spans at least two grid cells.
bool resolvable(const MollifierSpec& spec, double eps, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Singular potentials

/// weight * delta^{(order)}(x - location)
struct Atom {
    double location = 0.0;
    double weight = 1.0;
    unsigned order = 0;
};

/// Chaos-indexed finite atom collections with Sobolev order s.
struct SingularPotential {
    double s = 1.0;
    std::map<MultiIndex, std::vector<Atom>> atoms;

    bool empty() const;
    /// Locations strictly inside the window, derivative orders <= floor(s),
    /// every key inside the truncation.
    void validate(const GridSpec& grid, const TruncationSet& truncation) const;
};

/// Q_eps = Q * phi_eps: coefficient gamma is sum_atoms weight * phi_eps^{(order)}(x - x0),
/// evaluated from the closed-form profile derivatives. Norm tag Linf_in_x.
ChaosField regularize_potential(const SingularPotential& q, const MollifierSpec& spec, double eps,
                                const GridSpec& grid,
                                std::shared_ptr<const TruncationSet> truncation,
                                std::vector<std::string>* warnings = nullptr);

struct HminusNorm {
    double value = 0.0;
    double tail_bound = 0.0;  ///< bound on the neglected remainder of value^2
    double cutoff = 0.0;      ///< frequency cutoff of the panel quadrature
};

/// Fourier-side H^{-s} norm of an atom combination:
/// sqrt( (1/2pi) int |sum_j w_j (i xi)^{k_j} e^{-i xi x_j}|^2 (1+xi^2)^{-s} dxi ).
/// Panel Gauss-Kronrod on [0, cutoff]; the tail is exact for co-located pairs
/// (incomplete beta) and a two-term asymptotic with a bounded remainder for
/// separated pairs. Throws DomainError when s <= max order + 1/2.
HminusNorm hminus_norm_atoms_detailed(const std::vector<Atom>& atoms, double s,
                                      double cutoff = 2000.0);
double hminus_norm_atoms(const std::vector<Atom>& atoms, double s);

/// q = sup_gamma ||q_gamma||_{H^{-s}}.
double potential_sup_hminus(const SingularPotential& q);

/// Right side of the sup-norm estimate for standard mollification,
/// C_phi ceil(s)^{1/2} eps^{-(s + 1/2)} ||q_gamma||_{H^{-s}}, with
/// C_phi = max_{k <= s} ||phi^{(k)}||_{L2}. One entry per gamma carrying atoms.
std::map<MultiIndex, double> linf_bound_star1(const SingularPotential& q, const MollifierSpec& spec,
                                              double eps);

/// Mollifies a grid-based (bounded) potential: (q * phi_eps)(x_i) by a
/// 48-point Gauss-Legendre rule over the support with cubic interpolation of q.
ChaosField mollify_field(const ChaosField& q, const MollifierSpec& spec, double eps);

// ---------------------------------------------------------------------------
// Moderateness

struct ModerationReport {
    std::vector<double> eps;
    std::vector<double> norms;
    double C = 0.0;
    double N = 0.0;          ///< fitted power, clamped at 0 from below
    double raw_slope = 0.0;  ///< unclamped slope of log norm vs log(1/eps)
    double r2 = 1.0;
    double log_C = 0.0;      ///< norm ~ log_C * log(1/eps)^log_kappa
    double log_kappa = 0.0;
    double log_r2 = 0.0;
    bool log_type_flag = false;
    double log_spread = 0.0;   ///< standard deviation of log norm
    bool bounded_flag = false; ///< log_spread <= kFlatLogSpread
    double envelope_C = 0.0;   ///< smallest C with norm <= C eps^{-N} at every sample
    bool zero_net = false;
    std::string model;         ///< "power", "log", "bounded", "zero" or "none"
    std::string verdict;       ///< "moderate" or "inconclusive"
};

/// r2 threshold below which a fit is not trusted.
inline constexpr double kFitR2Threshold = 0.98;
/// Standard deviation of log norm below which a net counts as bounded (N = 0).
inline constexpr double kFlatLogSpread = 0.05;

/// Least squares of log norm against log(1/eps) (power model) and against
/// log log(1/eps) (log-type model). The verdict is "moderate" when the power
/// fit reaches kFitR2Threshold, when the log-type fit does and beats it, or
/// when the net is flat; otherwise "inconclusive". Needs >= 3 points.
ModerationReport moderateness_fit(const std::vector<double>& eps, const std::vector<double>& norms);

nlohmann::json to_json(const ModerationReport& r);

} // namespace chaospde
