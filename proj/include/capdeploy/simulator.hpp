#pragma once

// Monte Carlo fund lifecycle: replay one scenario of arrivals, underwritten
// deals and underwriting noise against a decision rule, keep the cash-flow
// ledger, and compare the value-table policy with a fixed-hurdle baseline
// under common random numbers.

#include "capdeploy/arrivals.hpp"
#include "capdeploy/error.hpp"
#include "capdeploy/policy.hpp"
#include "capdeploy/solver.hpp"
#include "capdeploy/stochastics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace capdeploy {

struct CashFlow {
    double time = 0.0;    ///< years
    double amount = 0.0;  ///< negative: investment, positive: proceeds
};

/// How undeployed capital enters the portfolio IRR.
enum class IrrConvention {
    committed,        ///< only actual deal outflows and proceeds
    full_commitment,  ///< F_0 drawn at t = 0, undeployed capital returned at T
};

struct TrialResult {
    std::size_t accepted_deals = 0;
    double deployed = 0.0;
    std::vector<CashFlow> cashflows;
    std::optional<double> irr;
    std::vector<std::size_t> accepted;  ///< scenario indices of accepted deals
};

/// Everything random in one fund lifetime. noise[i] is the standard normal
/// draw applied to deal i's underwritten MOIC at exit.
struct Scenario {
    std::vector<double> arrival_times;
    std::vector<DealSample> deals;
    std::vector<double> noise;
};

using DecisionFn = std::function<Decision(const FundState&, const DealSample&)>;

inline Scenario make_scenario(const DealModel& model, const IntensityModel& intensity, double horizon,
                              std::uint64_t trial_seed) {
    Scenario sc;
    sc.arrival_times = simulate_arrivals(intensity, horizon, derive_seed(trial_seed, 1));
    const std::size_t n = sc.arrival_times.size();
    if (n == 0) return sc;
    sc.deals = sample_deals(model, n, PseudorandomSource{derive_seed(trial_seed, 2)});
    RandomStream noise(derive_seed(trial_seed, 3));
    sc.noise.resize(n);
    for (double& z : sc.noise) z = noise.normal();
    return sc;
}

/// Accepts any affordable deal whose underwritten IRR is at least the hurdle.
/// The comparison is made in MOIC space, (1 + r)^H >= (1 + r_hurdle)^H.
inline Decision baseline_decide(const FundState& state, const DealSample& deal, double hurdle_irr,
                                double exit_years) {
    const double hurdle_moic = irr_to_moic(hurdle_irr, exit_years);
    if (deal.size > state.remaining_capital) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {Verdict::unaffordable, inf, inf, 0.0};
    }
    return {deal.moic >= hurdle_moic ? Verdict::accept : Verdict::reject, hurdle_moic, hurdle_irr,
            deal.size * (deal.moic - hurdle_moic)};
}

inline double npv(std::span<const CashFlow> flows, double rate) {
    double total = 0.0;
    for (const auto& cf : flows) total += cf.amount * std::pow(1.0 + rate, -cf.time);
    return total;
}

/// Money-weighted IRR by bisection on (-0.999, 10). Empty without both an
/// outflow and an inflow, or when NPV does not change sign over the bracket.
inline std::optional<double> portfolio_irr(std::span<const CashFlow> flows) {
    const bool has_out = std::any_of(flows.begin(), flows.end(), [](const CashFlow& cf) { return cf.amount < 0.0; });
    const bool has_in = std::any_of(flows.begin(), flows.end(), [](const CashFlow& cf) { return cf.amount > 0.0; });
    if (!has_out || !has_in) return std::nullopt;
    constexpr double lo_bound = -0.999;
    constexpr double hi_bound = 10.0;
    double lo = lo_bound;
    double hi = hi_bound;
    double f_lo = npv(flows, lo);
    const double f_hi = npv(flows, hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = npv(flows, mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(npv(flows, lo)) <= std::abs(npv(flows, hi)) ? lo : hi;
}

/// Investor-level flows for the chosen convention.
inline std::vector<CashFlow> investor_flows(const TrialResult& trial, double capital, double horizon,
                                            IrrConvention convention) {
    if (convention == IrrConvention::committed) return trial.cashflows;
    std::vector<CashFlow> flows{{0.0, -capital}};
    for (const auto& cf : trial.cashflows)
        if (cf.amount > 0.0) flows.push_back(cf);
    if (capital - trial.deployed > 0.0) flows.push_back({horizon, capital - trial.deployed});
    return flows;
}

/// Replays one scenario. Decisions see the state and underwritten deal only;
/// realized proceeds arrive exit_years after each investment.
inline TrialResult run_trial(const DecisionFn& policy, const Scenario& scenario, const DealModel& model,
                             double capital, double horizon,
                             IrrConvention convention = IrrConvention::committed) {
    TrialResult result;
    double remaining = capital;
    for (std::size_t i = 0; i < scenario.arrival_times.size(); ++i) {
        const double t = scenario.arrival_times[i];
        if (t >= horizon) break;
        const DealSample& deal = scenario.deals[i];
        const Decision d = policy(FundState{remaining, t}, deal);
        if (d.verdict != Verdict::accept) continue;
        if (deal.size > remaining)
            throw InvariantViolation("policy accepted a deal larger than the remaining capital");
        remaining -= deal.size;
        result.deployed += deal.size;
        ++result.accepted_deals;
        result.accepted.push_back(i);
        const double realized = realize_moic(deal.moic, model, scenario.noise[i]);
        result.cashflows.push_back({t, -deal.size});
        result.cashflows.push_back({t + model.exit_years, deal.size * realized});
    }
    if (result.accepted_deals > 0)
        result.irr = portfolio_irr(investor_flows(result, capital, horizon, convention));
    return result;
}

// ---------------------------------------------------------------------------
// Study

struct StudyConfig {
    DealModel deal_model;
    IntensityModel intensity = ConstantIntensity{12.0};
    double horizon = 3.0;
    double capital = 500.0;
    double hurdle_irr = 0.15;
    std::size_t n_trials = 1000;
    std::uint64_t base_seed = 0;
    unsigned threads = 0;
    IrrConvention convention = IrrConvention::committed;
};

struct PolicySummary {
    std::size_t n_trials = 0;
    std::size_t n_with_irr = 0;
    std::optional<double> mean_irr;
    std::optional<double> std_irr;
    std::optional<std::array<double, 5>> irr_quantiles;  ///< 5, 25, 50, 75, 95 %
    double mean_deployed = 0.0;
    double mean_deal_count = 0.0;
};

struct StudySummary {
    PolicySummary adp;
    PolicySummary baseline;
    std::size_t n_paired = 0;
    std::optional<double> mean_difference;  ///< ADP - baseline
    std::optional<double> se_difference;
};

struct TrialPair {
    TrialResult adp;
    TrialResult baseline;
};

struct StudyResult {
    StudySummary summary;
    std::vector<TrialPair> trials;
};

/// Linear interpolation between order statistics; `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace detail {

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Sample standard deviation; 0 for a single value.
inline double stddev_of(std::span<const double> xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

template <class Pick>
PolicySummary summarize(std::span<const TrialPair> trials, Pick pick) {
    PolicySummary out;
    out.n_trials = trials.size();
    std::vector<double> irrs;
    double deployed = 0.0;
    double deals = 0.0;
    for (const auto& pair : trials) {
        const TrialResult& r = pick(pair);
        deployed += r.deployed;
        deals += static_cast<double>(r.accepted_deals);
        if (r.irr) irrs.push_back(*r.irr);
    }
    if (!trials.empty()) {
        out.mean_deployed = deployed / static_cast<double>(trials.size());
        out.mean_deal_count = deals / static_cast<double>(trials.size());
    }
    out.n_with_irr = irrs.size();
    if (!irrs.empty()) {
        out.mean_irr = mean_of(irrs);
        out.std_irr = stddev_of(irrs, *out.mean_irr);
        std::sort(irrs.begin(), irrs.end());
        out.irr_quantiles = std::array<double, 5>{quantile_sorted(irrs, 0.05), quantile_sorted(irrs, 0.25),
                                                  quantile_sorted(irrs, 0.50), quantile_sorted(irrs, 0.75),
                                                  quantile_sorted(irrs, 0.95)};
    }
    return out;
}

}  // namespace detail

inline StudySummary summarize_study(std::span<const TrialPair> trials) {
    StudySummary s;
    s.adp = detail::summarize(trials, [](const TrialPair& p) -> const TrialResult& { return p.adp; });
    s.baseline = detail::summarize(trials, [](const TrialPair& p) -> const TrialResult& { return p.baseline; });
    std::vector<double> diffs;
    for (const auto& p : trials)
        if (p.adp.irr && p.baseline.irr) diffs.push_back(*p.adp.irr - *p.baseline.irr);
    s.n_paired = diffs.size();
    if (!diffs.empty()) {
        s.mean_difference = detail::mean_of(diffs);
        s.se_difference = detail::stddev_of(diffs, *s.mean_difference) / std::sqrt(static_cast<double>(diffs.size()));
    }
    return s;
}

/// Trial i uses seed base_seed + i and is replayed against both policies.
inline StudyResult run_study(const ValueTable& table, const StudyConfig& config) {
    if (config.n_trials < 1) throw DomainError("run_study: n_trials must be at least 1");
    config.deal_model.validate();
    const DecisionFn adp = [&table](const FundState& s, const DealSample& d) { return decide(table, s, d); };
    const double hurdle = config.hurdle_irr;
    const double exit_years = config.deal_model.exit_years;
    const DecisionFn baseline = [hurdle, exit_years](const FundState& s, const DealSample& d) {
        return baseline_decide(s, d, hurdle, exit_years);
    };

    StudyResult result;
    result.trials.resize(config.n_trials);
    auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Scenario sc = make_scenario(config.deal_model, config.intensity, config.horizon,
                                              config.base_seed + i);
            result.trials[i].adp = run_trial(adp, sc, config.deal_model, config.capital, config.horizon,
                                             config.convention);
            result.trials[i].baseline = run_trial(baseline, sc, config.deal_model, config.capital,
                                                  config.horizon, config.convention);
        }
    };
    const unsigned workers =
        std::min<unsigned>(resolve_threads(config.threads), static_cast<unsigned>(config.n_trials));
    if (workers <= 1) {
        run_range(0, config.n_trials);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (config.n_trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(config.n_trials, lo + chunk);
            if (lo < hi) pool.emplace_back(run_range, lo, hi);
        }
    }
    result.summary = summarize_study(result.trials);
    return result;
}

}  // namespace capdeploy
