#pragma once

// Deal-arrival intensity models, the adaptive time grid and nonhomogeneous
// Poisson path simulation by thinning.

#include "capdeploy/error.hpp"
#include "capdeploy/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace capdeploy {

struct ConstantIntensity {
    double rate = 0.0;
};

/// Rate rates[i] on [breakpoints[i], breakpoints[i+1]).
struct PiecewiseIntensity {
    std::vector<double> breakpoints;
    std::vector<double> rates;
};

/// base + amplitude * sin(2 pi (t - phase) / period)
struct SinusoidalIntensity {
    double base = 0.0;
    double amplitude = 0.0;
    double period = 1.0;
    double phase = 0.0;
};

using IntensityModel = std::variant<ConstantIntensity, PiecewiseIntensity, SinusoidalIntensity>;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const IntensityModel& model) {
    std::visit(overloaded{
                   [](const ConstantIntensity& m) {
                       if (!(m.rate >= 0.0) || !std::isfinite(m.rate))
                           throw DomainError("constant intensity: rate must be non-negative");
                   },
                   [](const PiecewiseIntensity& m) {
                       if (m.breakpoints.size() < 2 || m.rates.size() + 1 != m.breakpoints.size())
                           throw DomainError("piecewise intensity: need n+1 breakpoints for n rates");
                       if (m.breakpoints.front() != 0.0)
                           throw DomainError("piecewise intensity: first breakpoint must be 0");
                       for (std::size_t i = 1; i < m.breakpoints.size(); ++i)
                           if (!(m.breakpoints[i] > m.breakpoints[i - 1]))
                               throw DomainError("piecewise intensity: breakpoints must increase strictly");
                       for (double r : m.rates)
                           if (!(r >= 0.0) || !std::isfinite(r))
                               throw DomainError("piecewise intensity: rates must be non-negative");
                   },
                   [](const SinusoidalIntensity& m) {
                       if (!(m.amplitude >= 0.0) || !(m.base >= m.amplitude))
                           throw DomainError("sinusoidal intensity: need base >= amplitude >= 0");
                       if (!(m.period > 0.0)) throw DomainError("sinusoidal intensity: period must be positive");
                   },
               },
               model);
}

inline double intensity_at(const IntensityModel& model, double t) {
    if (!(t >= 0.0)) throw DomainError("intensity_at: t must be non-negative");
    return std::visit(
        overloaded{
            [](const ConstantIntensity& m) { return m.rate; },
            [t](const PiecewiseIntensity& m) {
                const auto& b = m.breakpoints;
                if (t > b.back())
                    throw DomainError("intensity_at: t = " + std::to_string(t) +
                                      " beyond piecewise coverage");
                if (t == b.back()) return m.rates.back();
                const auto it = std::upper_bound(b.begin(), b.end(), t);
                return m.rates[static_cast<std::size_t>(it - b.begin()) - 1];
            },
            [t](const SinusoidalIntensity& m) {
                return std::max(0.0, m.base + m.amplitude *
                                                  std::sin(2.0 * std::numbers::pi * (t - m.phase) / m.period));
            },
        },
        model);
}

/// Integral of the intensity over [t0, t1].
inline double cumulative_intensity(const IntensityModel& model, double t0, double t1) {
    if (!(t0 >= 0.0)) throw DomainError("cumulative_intensity: t0 must be non-negative");
    if (!(t1 >= t0)) throw DomainError("cumulative_intensity: reversed interval");
    if (t0 == t1) return 0.0;
    return std::visit(
        overloaded{
            [&](const ConstantIntensity& m) { return m.rate * (t1 - t0); },
            [&](const PiecewiseIntensity& m) {
                const auto& b = m.breakpoints;
                if (t1 > b.back()) throw DomainError("cumulative_intensity: t1 beyond piecewise coverage");
                double total = 0.0;
                for (std::size_t i = 0; i < m.rates.size(); ++i) {
                    const double lo = std::max(t0, b[i]);
                    const double hi = std::min(t1, b[i + 1]);
                    if (hi > lo) total += m.rates[i] * (hi - lo);
                }
                return total;
            },
            [&](const SinusoidalIntensity& m) {
                const double w = 2.0 * std::numbers::pi / m.period;
                const double osc = (std::cos(w * (t0 - m.phase)) - std::cos(w * (t1 - m.phase))) / w;
                return std::max(0.0, m.base * (t1 - t0) + m.amplitude * osc);
            },
        },
        model);
}

/// An upper bound on the intensity over [0, horizon], tight for every variant
/// except a sinusoid that never reaches its crest inside the horizon.
inline double max_intensity(const IntensityModel& model, double horizon) {
    return std::visit(overloaded{
                          [](const ConstantIntensity& m) { return m.rate; },
                          [horizon](const PiecewiseIntensity& m) {
                              double peak = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i)
                                  if (m.breakpoints[i] < horizon) peak = std::max(peak, m.rates[i]);
                              return peak;
                          },
                          [](const SinusoidalIntensity& m) { return m.base + m.amplitude; },
                      },
                      model);
}

/// Expected arrivals in one step, switching to the exact Poisson arrival
/// probability once the linear increment exceeds 0.1.
inline double effective_arrival_prob(double rate, double dt) {
    const double raw = rate * dt;
    if (raw <= 0.1) return raw;
    return -std::expm1(-raw);
}

struct TimeGrid {
    std::vector<double> times;          ///< t_0 = 0 < ... < t_K = T
    std::vector<double> step_arrivals;  ///< dLambda_k for [t_k, t_{k+1}), size K

    std::size_t steps() const { return step_arrivals.size(); }
    double horizon() const { return times.back(); }
    double dt(std::size_t k) const { return times[k + 1] - times[k]; }
};

/// Greedy forward grid with lambda(t_k) * dt_k = target on every step except a
/// final step truncated at the horizon.
inline TimeGrid build_time_grid(const IntensityModel& model, double horizon, double target = 0.05) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw DomainError("build_time_grid: horizon must be positive");
    if (!(target > 0.0)) throw DomainError("build_time_grid: target must be positive");
    validate(model);
    if (const auto* pw = std::get_if<PiecewiseIntensity>(&model); pw && pw->breakpoints.back() < horizon)
        throw DomainError("build_time_grid: piecewise intensity does not cover the horizon");
    if (!(cumulative_intensity(model, 0.0, horizon) > 0.0))
        throw DegenerateGridError("build_time_grid: intensity is zero over the whole horizon");

    const double fallback = horizon / 1000.0;
    // Snap to the horizon when the remainder is round-off.
    const double snap = 1e-9;

    TimeGrid grid;
    grid.times.push_back(0.0);
    double t = 0.0;
    while (t < horizon) {
        const double rate = intensity_at(model, t);
        double next;
        if (rate > 0.0) {
            const double dt = target / rate;
            next = t + dt;
            if (horizon - next <= snap * dt) next = horizon;
        } else {
            next = t + fallback;
            if (const auto* pw = std::get_if<PiecewiseIntensity>(&model)) {
                const auto& b = pw->breakpoints;
                for (std::size_t i = 0; i < pw->rates.size(); ++i)
                    if (b[i] > t && pw->rates[i] > 0.0) {
                        next = std::min(next, b[i]);
                        break;
                    }
            }
            if (horizon - next <= snap * fallback) next = horizon;
        }
        next = std::min(next, horizon);
        grid.step_arrivals.push_back(effective_arrival_prob(rate, next - t));
        grid.times.push_back(next);
        t = next;
    }
    return grid;
}

/// Arrival times in [0, horizon) of one NHPP path, by thinning a homogeneous
/// process at the peak rate.
inline std::vector<double> simulate_arrivals(const IntensityModel& model, double horizon,
                                             std::uint64_t seed) {
    if (!(horizon > 0.0)) throw DomainError("simulate_arrivals: horizon must be positive");
    validate(model);
    std::vector<double> arrivals;
    const double peak = max_intensity(model, horizon);
    if (!(peak > 0.0)) return arrivals;
    RandomStream rng(seed);
    double t = 0.0;
    for (;;) {
        t += rng.exponential(peak);
        if (t >= horizon) break;
        const double keep = rng.uniform();
        if (keep * peak <= intensity_at(model, t)) arrivals.push_back(t);
    }
    return arrivals;
}

}  // namespace capdeploy
