#pragma once

// Acceptance decisions and required-return thresholds read off a solved
// value table.
//
// Accepting a deal (S, M) at state (f, t) is worth it iff
//     S (M - M_hurdle) + V(f - S, t) >= V(f, t),
// i.e. iff M >= M* = M_hurdle + (V(f, t) - V(f - S, t)) / S.

#include "capdeploy/error.hpp"
#include "capdeploy/solver.hpp"
#include "capdeploy/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace capdeploy {

/// A deal that does not fit in the remaining capital.
class UnaffordableError : public DomainError {
public:
    using DomainError::DomainError;
};

struct FundState {
    double remaining_capital = 0.0;  ///< f
    double time = 0.0;               ///< years since fund start
};

enum class Verdict { accept, reject, unaffordable };

constexpr std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::accept: return "accept";
        case Verdict::reject: return "reject";
        case Verdict::unaffordable: return "unaffordable";
    }
    return "unknown";
}

/// Thresholds are +infinity and excess is 0 for unaffordable deals.
struct Decision {
    Verdict verdict = Verdict::reject;
    double threshold_moic = 0.0;
    double threshold_irr = 0.0;
    double deal_value_excess = 0.0;
};

struct ThresholdRow {
    double t_years = 0.0;
    double size_fraction = 0.0;
    double required_irr = 0.0;
};

using ThresholdSurface = std::vector<ThresholdRow>;

/// Smallest time index whose grid time is >= t. Using the later slice never
/// overstates the opportunity still ahead.
inline std::size_t time_index_at_or_after(const ValueTable& table, double t) {
    const auto& times = table.time_grid.times;
    if (!(t >= 0.0 && t <= times.back()))
        throw DomainError("t = " + std::to_string(t) + " outside [0, T]");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    return static_cast<std::size_t>(it - times.begin());
}

inline double moic_to_irr(double moic, double exit_years) { return std::pow(moic, 1.0 / exit_years) - 1.0; }
inline double irr_to_moic(double irr, double exit_years) { return std::pow(1.0 + irr, exit_years); }

namespace detail {

struct ThresholdParts {
    double moic = 0.0;
    double value_keep = 0.0;   ///< V(f, t)
    double value_after = 0.0;  ///< V(f - s, t)
};

inline void check_capital(const ValueTable& table, double f) {
    if (!(f >= 0.0 && f <= table.capital()))
        throw DomainError("f = " + std::to_string(f) + " outside [0, F0]");
}

inline ThresholdParts threshold_parts(const ValueTable& table, double f, double s, std::size_t k) {
    const auto row = table.row(k);
    const double keep = table.grid.interpolate(row, f);
    const double after = table.grid.interpolate(row, f - s);
    return {table.moic_hurdle + std::max(0.0, keep - after) / s, keep, after};
}

}  // namespace detail

/// Required underwritten MOIC for a deal of size s at capital f and time t.
inline double threshold_moic(const ValueTable& table, double f, double s, double t) {
    detail::check_capital(table, f);
    if (!(s > 0.0)) throw DomainError("deal size must be positive");
    if (s > f) throw UnaffordableError("deal size exceeds remaining capital");
    return detail::threshold_parts(table, f, s, time_index_at_or_after(table, t)).moic;
}

inline double threshold_irr(const ValueTable& table, double f, double s, double t) {
    return moic_to_irr(threshold_moic(table, f, s, t), table.exit_years);
}

/// Ties accept.
inline Decision decide(const ValueTable& table, const FundState& state, const DealSample& deal) {
    detail::check_capital(table, state.remaining_capital);
    const std::size_t k = time_index_at_or_after(table, state.time);
    if (!(deal.size > 0.0)) throw DomainError("deal size must be positive");
    if (!(deal.moic > 0.0)) throw DomainError("deal MOIC must be positive");

    if (deal.size > state.remaining_capital) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {Verdict::unaffordable, inf, inf, 0.0};
    }
    const auto parts = detail::threshold_parts(table, state.remaining_capital, deal.size, k);
    Decision d;
    d.threshold_moic = parts.moic;
    d.threshold_irr = moic_to_irr(parts.moic, table.exit_years);
    d.deal_value_excess = deal.size * (deal.moic - table.moic_hurdle) + parts.value_after - parts.value_keep;
    d.verdict = deal.moic >= parts.moic ? Verdict::accept : Verdict::reject;
    return d;
}

/// Required IRR at f = F_0 for deals of size fraction * F_0, time-major.
inline ThresholdSurface export_surface(const ValueTable& table, std::span<const double> fractions,
                                       std::span<const double> times) {
    for (double q : fractions)
        if (!(q > 0.0 && q <= 1.0)) throw DomainError("size fractions must lie in (0, 1]");
    const double f = table.capital();
    ThresholdSurface rows;
    rows.reserve(fractions.size() * times.size());
    for (double t : times)
        for (double q : fractions) rows.push_back({t, q, threshold_irr(table, f, q * f, t)});
    return rows;
}

/// n evenly spaced times covering [0, T], both ends included.
inline std::vector<double> evenly_spaced_times(const ValueTable& table, std::size_t n) {
    if (n < 2) throw DomainError("need at least two surface times");
    std::vector<double> times(n);
    const double horizon = table.horizon();
    for (std::size_t i = 0; i < n; ++i)
        times[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
    times.back() = horizon;
    return times;
}

}  // namespace capdeploy
