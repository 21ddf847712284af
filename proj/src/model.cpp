#include "dsmks/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dsmks {

double MotilitySpec::operator()(double s) const {
    if (kind == MotilityKind::Exponential) return std::exp(-chi * s);
    if (hook) return hook(s);
    if (s <= table_s.front()) return table_gamma.front();
    if (s >= table_s.back()) return table_gamma.back();
    const auto it = std::upper_bound(table_s.begin(), table_s.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - table_s.begin());
    const std::size_t lo = hi - 1;
    const double t = (s - table_s[lo]) / (table_s[hi] - table_s[lo]);
    return table_gamma[lo] + t * (table_gamma[hi] - table_gamma[lo]);
}

void MotilitySpec::validate() const {
    if (!(chi > 0.0) || !std::isfinite(chi)) throw InvalidArgument("motility rate chi must be positive");
    if (kind == MotilityKind::Exponential || hook) return;
    if (table_s.size() < 2 || table_s.size() != table_gamma.size()) {
        throw InvalidArgument("tabulated motility needs at least two (s, gamma) pairs of equal length");
    }
    for (std::size_t i = 0; i < table_s.size(); ++i) {
        if (!(table_gamma[i] > 0.0)) throw InvalidArgument("tabulated motility must be positive");
        if (i > 0 && !(table_s[i] > table_s[i - 1])) {
            throw InvalidArgument("tabulated motility abscissae must increase strictly");
        }
        if (i > 0 && table_gamma[i] > table_gamma[i - 1]) {
            throw InvalidArgument("tabulated motility must be non-increasing");
        }
    }
}

Field motility_eval(const MotilitySpec& spec, const Field& v, std::size_t* undershoots) {
    Field out(v.grid());
    std::size_t low = 0;
    bool bad = false;
    const auto n = static_cast<long>(v.size());
    auto o = out.values();
    if (spec.kind == MotilityKind::Exponential) {
        const double chi = spec.chi;
#pragma omp parallel for schedule(static) reduction(+ : low) reduction(|| : bad)
        for (long k = 0; k < n; ++k) {
            double s = v[k];
            if (s < 0.0) {
                bad = bad || s < -kNegativeSlack;
                ++low;
                s = 0.0;
            }
            o[k] = std::exp(-chi * s);
        }
    } else {
        for (long k = 0; k < n; ++k) {
            double s = v[k];
            if (s < 0.0) {
                bad = bad || s < -kNegativeSlack;
                ++low;
                s = 0.0;
            }
            o[k] = spec(s);
        }
    }
    if (bad) throw InvalidArgument("motility evaluated at v below -1e-8");
    if (undershoots) *undershoots = low;
    return out;
}

double SourceSpec::operator()(double s) const {
    s = std::max(s, 0.0);
    switch (family) {
        case SourceFamily::Zero: return 0.0;
        case SourceFamily::SubLogistic: return mu * std::pow(std::log1p(s), alpha) - lambda;
        case SourceFamily::GeneralizedLogistic: return mu * std::pow(s, kappa - 1.0) - lambda;
        case SourceFamily::Constant: return c;
    }
    return 0.0;
}

bool SourceSpec::satisfies_growth() const {
    switch (family) {
        case SourceFamily::SubLogistic: return mu > 0.0 && alpha > 0.0;
        case SourceFamily::GeneralizedLogistic: return mu > 0.0 && kappa > 1.0;
        case SourceFamily::Zero:
        case SourceFamily::Constant: return false;
    }
    return false;
}

bool SourceSpec::satisfies_sublog() const {
    switch (family) {
        case SourceFamily::SubLogistic: return alpha <= 1.0;
        case SourceFamily::GeneralizedLogistic: return kappa <= 1.0;
        case SourceFamily::Zero:
        case SourceFamily::Constant: return true;
    }
    return false;
}

void SourceSpec::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(mu) || !finite(alpha) || !finite(lambda) || !finite(kappa) || !finite(c)) {
        throw InvalidArgument("source parameters must be finite");
    }
    if (!(sample_max > 1.0)) throw InvalidArgument("source sample_max must exceed 1");
    switch (family) {
        case SourceFamily::SubLogistic:
            if (!(mu > 0.0)) throw InvalidArgument("sub-logistic source needs mu > 0");
            if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("sub-logistic source needs alpha in (0,1]");
            break;
        case SourceFamily::GeneralizedLogistic:
            if (!(mu > 0.0)) throw InvalidArgument("generalized logistic source needs mu > 0");
            if (!(kappa > 1.0)) throw InvalidArgument("generalized logistic source needs kappa > 1");
            break;
        case SourceFamily::Zero:
        case SourceFamily::Constant: break;
    }
}

Field source_eval(const SourceSpec& spec, const Field& u) {
    Field out(u.grid());
    const auto n = static_cast<long>(u.size());
    auto o = out.values();
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) o[k] = spec(u[k]);
    return out;
}

namespace {

// Scan abscissae: dense linear on [0,1], geometric on [1, smax].
std::vector<double> scan_points(double smax) {
    constexpr int kLinear = 20000;
    constexpr int kGeometric = 100000;
    std::vector<double> s;
    s.reserve(kLinear + kGeometric + 1);
    for (int i = 0; i <= kLinear; ++i) s.push_back(static_cast<double>(i) / kLinear);
    const double ratio = std::log(smax);
    for (int i = 1; i <= kGeometric; ++i) s.push_back(std::exp(ratio * i / kGeometric));
    return s;
}

template <class F>
double golden_max(F&& phi, double lo, double hi) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = phi(c);
    double fd = phi(d);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d);
        }
    }
    return std::max({phi(a), phi(b), fc, fd});
}

// max over the scan of phi, refined around the best sample.
template <class F>
double scan_max(F&& phi, const std::vector<double>& s) {
    std::size_t best = 0;
    double best_val = phi(s[0]);
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double val = phi(s[i]);
        if (val > best_val) {
            best_val = val;
            best = i;
        }
    }
    const double lo = s[best == 0 ? 0 : best - 1];
    const double hi = s[std::min(best + 1, s.size() - 1)];
    return std::max(best_val, golden_max(phi, lo, hi));
}

}  // namespace

double scan_max_deficit(const SourceSpec& spec, double slope) {
    const auto s = scan_points(spec.sample_max);
    return scan_max([&](double x) { return slope * x - x * spec(x); }, s);
}

double minimal_b0(const SourceSpec& spec) {
    if (spec.family == SourceFamily::Zero) return 0.0;
    return std::max(0.0, scan_max_deficit(spec, 0.0));
}

double SourceConstants::b1_of(double a1) const {
    for (const auto& [a, b] : b1) {
        if (a == a1) return b;
    }
    std::ostringstream os;
    os << "b1 was not derived for a1 = " << a1;
    throw InvalidArgument(os.str());
}

SourceConstants derive_constants(const SourceSpec& spec, std::span<const double> a1_list, double a1_for_b0) {
    spec.validate();
    if (!spec.satisfies_growth()) {
        throw AssumptionViolated("source " + to_string(spec.family) + " does not satisfy f(s) -> infinity");
    }
    double a1_max = a1_for_b0;
    for (double a1 : a1_list) {
        if (!(a1 >= 0.0)) throw InvalidArgument("a1 values must be nonnegative");
        a1_max = std::max(a1_max, a1);
    }
    if (spec(spec.sample_max) < a1_max) {
        std::ostringstream os;
        os << "scan range [0, " << spec.sample_max << "] too small: f(sample_max) = " << spec(spec.sample_max)
           << " < a1 = " << a1_max;
        throw RangeTooSmall(os.str());
    }

    const auto s = scan_points(spec.sample_max);
    auto deficit = [&](double slope) {
        return std::max(0.0, scan_max([&](double x) { return slope * x - x * spec(x); }, s));
    };

    SourceConstants out;
    out.a1_b0 = a1_for_b0;
    out.b0 = deficit(a1_for_b0);
    for (double a1 : a1_list) out.b1.emplace_back(a1, deficit(a1));

    // limsup f(s)/log s, estimated on the upper half (in log scale) of the range.
    const double tail_lo = std::sqrt(spec.sample_max);
    double ratio = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
        const double x = tail_lo * std::pow(spec.sample_max / tail_lo, i / 1000.0);
        ratio = std::max(ratio, spec(x) / std::log(x));
    }
    out.tail_ratio = ratio;
    if (spec.satisfies_sublog()) {
        const double a2 = ratio > 0.0 ? 2.0 * ratio : 1.0;
        const double b2 = std::max(0.0, scan_max(
                                            [&](double x) {
                                                const double xlogx = x > 0.0 ? x * std::log(x) : 0.0;
                                                return x * spec(x) - a2 * xlogx;
                                            },
                                            s));
        out.a2 = a2;
        out.b2 = b2;
    }
    return out;
}

double ModelParams::critical_mass() const { return 4.0 * std::numbers::pi / chi(); }

void ModelParams::validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("model parameter τ ≥ 0 required");
    motility.validate();
    source.validate();
    if (mode == ModelMode::MinimalKS && motility.kind != MotilityKind::Exponential) {
        throw InvalidArgument("minimal Keller-Segel mode uses the exponential rate chi only");
    }
}

std::string to_string(SourceFamily f) {
    switch (f) {
        case SourceFamily::Zero: return "zero";
        case SourceFamily::SubLogistic: return "sublogistic";
        case SourceFamily::GeneralizedLogistic: return "generalized_logistic";
        case SourceFamily::Constant: return "constant";
    }
    return "?";
}

std::string to_string(ModelMode m) { return m == ModelMode::DensitySuppressed ? "dsm" : "minimal_ks"; }

std::string to_string(MotilityKind k) { return k == MotilityKind::Exponential ? "exponential" : "tabulated"; }

}  // namespace dsmks
