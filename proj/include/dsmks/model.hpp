#pragma once

// Motility and source-term definitions plus the numerical constants that the
// a-priori estimates refer to (b0, b1(a1), a2, b2).

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsmks/error.hpp"
#include "dsmks/grid.hpp"

namespace dsmks {

/// Undershoot of v below zero that is tolerated (and reported) by motility_eval.
inline constexpr double kNegativeSlack = 1e-8;

enum class MotilityKind { Exponential, Tabulated };

/// γ(s) = exp(-χ s), or a user table / hook for other non-increasing motilities.
struct MotilitySpec {
    MotilityKind kind = MotilityKind::Exponential;
    double chi = 1.0;
    /// Tabulated: strictly increasing abscissae, positive non-increasing values,
    /// linear in between and constant past both ends.
    std::vector<double> table_s;
    std::vector<double> table_gamma;
    /// Optional override for Tabulated; takes precedence over the table.
    std::function<double(double)> hook;

    double operator()(double s) const;
    /// Throws InvalidArgument on a malformed spec.
    void validate() const;
};

/// Pointwise γ(v). Values in [-1e-8, 0) are clamped to 0 and counted in
/// `undershoots`; anything lower throws InvalidArgument.
Field motility_eval(const MotilitySpec& spec, const Field& v, std::size_t* undershoots = nullptr);

enum class SourceFamily {
    Zero,                 ///< f ≡ 0
    SubLogistic,          ///< f(s) = μ·log^α(1+s) - λ
    GeneralizedLogistic,  ///< f(s) = μ·s^(κ-1) - λ
    Constant,             ///< f ≡ c (test only)
};

struct SourceSpec {
    SourceFamily family = SourceFamily::Zero;
    double mu = 1.0;
    double alpha = 1.0;
    double lambda = 0.0;
    double kappa = 2.0;
    double c = 0.0;
    /// Upper end of the scans used by derive_constants.
    double sample_max = 1e6;

    /// f(s); s is clamped at 0 from below.
    double operator()(double s) const;
    /// f(s) → ∞ as s → ∞.
    bool satisfies_growth() const;
    /// limsup f(s)/log s < ∞.
    bool satisfies_sublog() const;
    void validate() const;
};

/// Pointwise f(u) (not u·f(u)).
Field source_eval(const SourceSpec& spec, const Field& u);

struct SourceConstants {
    /// s f(s) + b0 ≥ 0 for s ≥ 0; b0 = b1(a1_b0).
    double b0 = 0.0;
    double a1_b0 = 1.0;
    /// (a1, b1) with s f(s) ≥ a1 s - b1.
    std::vector<std::pair<double, double>> b1;
    /// s f(s) ≤ a2 s log s + b2; present only when the sub-logarithmic bound holds.
    std::optional<double> a2;
    std::optional<double> b2;
    /// f(s)/log s estimated on the tail of the scan.
    double tail_ratio = 0.0;

    /// Linear lookup into `b1`; throws InvalidArgument if a1 was not derived.
    double b1_of(double a1) const;
};

/// Scan range [0, sample_max] does not reach the region where f ≥ a1.
class RangeTooSmall : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// The source violates the growth condition f → ∞.
class AssumptionViolated : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Derives b0 (with a1 = a1_for_b0), b1(a1) for each entry of a1_list, and
/// (a2, b2) when the sub-logarithmic bound applies.
SourceConstants derive_constants(const SourceSpec& spec, std::span<const double> a1_list, double a1_for_b0 = 1.0);

/// Smallest admissible b0 = max(0, -min s f(s)) on the scan range. Works for
/// every family, including those that violate the growth condition.
double minimal_b0(const SourceSpec& spec);

/// max over s ∈ [0, sample_max] of slope·s - s f(s), dense scan + golden refinement.
double scan_max_deficit(const SourceSpec& spec, double slope);

enum class ModelMode {
    DensitySuppressed,  ///< u_t = Δ(u γ(v)) - u f(u)
    MinimalKS,          ///< u_t = Δu - χ∇·(u∇v) - u f(u)
};

struct ModelParams {
    double tau = 1.0;
    MotilitySpec motility{};
    SourceSpec source{};
    ModelMode mode = ModelMode::DensitySuppressed;

    double chi() const { return motility.chi; }
    /// 4π/χ.
    double critical_mass() const;
    void validate() const;
};

std::string to_string(SourceFamily f);
std::string to_string(ModelMode m);
std::string to_string(MotilityKind k);

}  // namespace dsmks
