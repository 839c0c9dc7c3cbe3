#pragma once

// Backward-induction approximate dynamic programming over a capital grid and
// an adaptive time grid. V(f, t) is the expected value created above the
// hurdle multiple by deploying remaining capital f optimally from time t on.
//
//   inc    = 1{S <= f} (S (M - M_hurdle) + V(f - S, t_{k+1}) - V(f, t_{k+1}))
//   V(f,t_k) = V(f, t_{k+1}) + dLambda_k E[max(0, inc)]
//
// with V(., T) = 0 and the expectation replaced by a quasi-Monte Carlo average.

#include "capdeploy/arrivals.hpp"
#include "capdeploy/error.hpp"
#include "capdeploy/stochastics.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace capdeploy {

class ResourceLimitError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Ascending capital levels 0 = f_0 < ... < f_{N-1} = F_0.
class CapitalGrid {
public:
    CapitalGrid() = default;

    explicit CapitalGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw DomainError("CapitalGrid: need at least two points");
        if (points_.front() != 0.0) throw DomainError("CapitalGrid: first point must be 0");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i] > points_[i - 1]))
                throw DomainError("CapitalGrid: points must increase strictly");
        const double h = points_.back() / static_cast<double>(points_.size() - 1);
        uniform_step_ = h;
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (std::abs(points_[i] - static_cast<double>(i) * h) > 1e-12 * points_.back()) {
                uniform_step_ = 0.0;
                break;
            }
    }

    static CapitalGrid uniform(double capital, std::size_t n) {
        if (!(capital > 0.0)) throw DomainError("CapitalGrid: capital must be positive");
        if (n < 2) throw DomainError("CapitalGrid: need at least two points");
        const double h = capital / static_cast<double>(n - 1);
        std::vector<double> pts(n);
        for (std::size_t i = 0; i < n; ++i) pts[i] = static_cast<double>(i) * h;
        pts.back() = capital;
        return CapitalGrid(std::move(pts));
    }

    std::span<const double> points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double capital() const { return points_.back(); }
    double operator[](std::size_t i) const { return points_[i]; }
    bool is_uniform() const { return uniform_step_ > 0.0; }

    /// Linear interpolation of `values` (one per grid point) at f in [0, F_0].
    /// Callers guarantee the range; see interpolate_value for the checked form.
    double interpolate(std::span<const double> values, double f) const {
        std::size_t i;
        if (uniform_step_ > 0.0) {
            i = static_cast<std::size_t>(f / uniform_step_);
            if (i >= points_.size() - 1) i = points_.size() - 2;
            // Round-off in f / h can land one cell off.
            if (f < points_[i]) --i;
            else if (f > points_[i + 1]) ++i;
        } else {
            const auto it = std::upper_bound(points_.begin(), points_.end(), f);
            i = it == points_.begin() ? 0 : static_cast<std::size_t>(it - points_.begin()) - 1;
            if (i >= points_.size() - 1) i = points_.size() - 2;
        }
        const double lo = points_[i];
        const double hi = points_[i + 1];
        if (f == lo) return values[i];
        if (f == hi) return values[i + 1];
        const double w = (f - lo) / (hi - lo);
        return values[i] + w * (values[i + 1] - values[i]);
    }

private:
    std::vector<double> points_;
    double uniform_step_ = 0.0;
};

struct SolverConfig {
    DealModel deal_model;
    IntensityModel intensity = ConstantIntensity{12.0};
    double horizon = 3.0;
    CapitalGrid capital_grid = CapitalGrid::uniform(500.0, 101);
    std::size_t n_qmc = 4096;
    double target_dlambda = 0.05;
    /// Advance the Sobol stream by n_qmc at every time step instead of reusing
    /// the same point set.
    bool skip_per_step = false;
    unsigned threads = 0;  ///< 0: hardware concurrency
    double max_evaluations = 1e11;

    void validate() const {
        deal_model.validate();
        if (n_qmc < 64 || !std::has_single_bit(n_qmc))
            throw DomainError("SolverConfig: n_qmc must be a power of two >= 64");
        if (!(target_dlambda > 0.0 && target_dlambda <= 0.5))
            throw DomainError("SolverConfig: target_dlambda must lie in (0, 0.5]");
        if (!(horizon > 0.0)) throw DomainError("SolverConfig: horizon must be positive");
    }
};

/// V[k][i] for time index k (0..K) and capital index i, row-major.
struct ValueTable {
    CapitalGrid grid;
    TimeGrid time_grid;
    std::vector<double> values;
    double moic_hurdle = 1.0;
    double exit_years = 5.0;

    std::size_t n_capital() const { return grid.size(); }
    std::size_t n_times() const { return time_grid.times.size(); }
    std::size_t steps() const { return time_grid.steps(); }
    double capital() const { return grid.capital(); }
    double horizon() const { return time_grid.horizon(); }
    double hurdle_irr() const { return std::pow(moic_hurdle, 1.0 / exit_years) - 1.0; }

    double at(std::size_t k, std::size_t i) const { return values[k * n_capital() + i]; }
    std::span<const double> row(std::size_t k) const {
        return {values.data() + k * n_capital(), n_capital()};
    }
    std::span<double> row(std::size_t k) { return {values.data() + k * n_capital(), n_capital()}; }
};

inline double interpolate_value(const ValueTable& table, double f, std::size_t k) {
    if (!(f >= 0.0 && f <= table.capital()))
        throw DomainError("interpolate_value: f = " + std::to_string(f) + " outside [0, F0]");
    if (k >= table.n_times()) throw DomainError("interpolate_value: time index out of range");
    return table.grid.interpolate(table.row(k), f);
}

/// Value of accepting `deal` at capital f relative to rejecting it, given the
/// continuation values `next` at t_{k+1}. Zero when the deal is unaffordable.
inline double incremental_value(double f, const DealSample& deal, std::span<const double> next,
                                const CapitalGrid& grid, double moic_hurdle) {
    if (deal.size > f) return 0.0;
    return deal.size * (deal.moic - moic_hurdle) + grid.interpolate(next, f - deal.size) -
           grid.interpolate(next, f);
}

/// One backward step for capital indices [first, last).
inline void bellman_step_range(std::span<const double> next, std::span<const DealSample> deals,
                               double dlambda, const CapitalGrid& grid, double moic_hurdle,
                               std::span<double> out, std::size_t first, std::size_t last) {
    const double inv_n = 1.0 / static_cast<double>(deals.size());
    for (std::size_t i = first; i < last; ++i) {
        const double f = grid[i];
        const double stay = next[i];
        double sum = 0.0;
        for (const DealSample& d : deals) {
            if (d.size > f) continue;
            const double inc = d.size * (d.moic - moic_hurdle) + grid.interpolate(next, f - d.size) - stay;
            if (inc > 0.0) sum += inc;
        }
        out[i] = stay + dlambda * (sum * inv_n);
    }
}

/// V at t_k from V at t_{k+1}.
inline std::vector<double> bellman_step(std::span<const double> next, std::span<const DealSample> deals,
                                        double dlambda, const CapitalGrid& grid, double moic_hurdle) {
    if (deals.empty()) throw DomainError("bellman_step: empty deal sample");
    if (!(dlambda >= 0.0 && dlambda <= 1.0)) throw DomainError("bellman_step: dlambda must lie in [0, 1]");
    if (next.size() != grid.size()) throw DomainError("bellman_step: slice size does not match grid");
    std::vector<double> out(grid.size());
    bellman_step_range(next, deals, dlambda, grid, moic_hurdle, out, 0, grid.size());
    return out;
}

struct SolveStats {
    std::size_t n_capital = 0;
    std::size_t n_steps = 0;
    std::size_t n_qmc = 0;
    double evaluations = 0.0;  ///< K * N_f * N_QMC
    double wall_seconds = 0.0;
};

struct SolveResult {
    ValueTable table;
    SolveStats stats;
};

/// Deals used at step k. Must return a non-empty span valid until the next call.
using DealsForStep = std::function<std::span<const DealSample>(std::size_t k)>;

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Backward sweep from V[K] = 0 over the given grids.
inline ValueTable backward_induction(const CapitalGrid& grid, const TimeGrid& time_grid,
                                     const DealsForStep& deals_for_step, double moic_hurdle,
                                     double exit_years, unsigned threads = 1) {
    ValueTable table{grid, time_grid, {}, moic_hurdle, exit_years};
    const std::size_t n = grid.size();
    const std::size_t steps = time_grid.steps();
    table.values.assign((steps + 1) * n, 0.0);

    const unsigned workers = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(n));
    for (std::size_t kk = steps; kk-- > 0;) {
        const auto deals = deals_for_step(kk);
        if (deals.empty()) throw DomainError("backward_induction: empty deal sample");
        const double dlambda = time_grid.step_arrivals[kk];
        const auto next = std::as_const(table).row(kk + 1);
        auto out = table.row(kk);
        if (workers <= 1) {
            bellman_step_range(next, deals, dlambda, grid, moic_hurdle, out, 0, n);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            const std::size_t chunk = (n + workers - 1) / workers;
            for (unsigned w = 0; w < workers; ++w) {
                const std::size_t lo = w * chunk;
                const std::size_t hi = std::min(n, lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back([&, lo, hi] {
                    bellman_step_range(next, deals, dlambda, grid, moic_hurdle, out, lo, hi);
                });
            }
        }
    }
    return table;
}

/// Throws InvariantViolation if the table breaks any structural invariant:
/// zero terminal row, zero value at zero capital, non-increasing in time and
/// non-decreasing in capital (within 1e-9 F_0).
inline void check_table_invariants(const ValueTable& table) {
    const std::size_t n = table.n_capital();
    const std::size_t last = table.n_times() - 1;
    const double tol = 1e-9 * table.capital();
    for (std::size_t i = 0; i < n; ++i)
        if (table.at(last, i) != 0.0)
            throw InvariantViolation("terminal row is not identically zero at capital index " +
                                     std::to_string(i));
    for (std::size_t k = 0; k <= last; ++k) {
        if (table.at(k, 0) != 0.0)
            throw InvariantViolation("V(0, t_" + std::to_string(k) + ") is not zero");
        for (std::size_t i = 0; i < n; ++i) {
            const double v = table.at(k, i);
            if (!std::isfinite(v))
                throw InvariantViolation("non-finite value at (" + std::to_string(k) + ", " +
                                         std::to_string(i) + ")");
            if (k < last && v < table.at(k + 1, i))
                throw InvariantViolation("value increases forward in time at (" + std::to_string(k) +
                                         ", " + std::to_string(i) + ")");
            if (i + 1 < n && table.at(k, i + 1) < v - tol)
                throw InvariantViolation("value decreases in capital at (" + std::to_string(k) + ", " +
                                         std::to_string(i) + ")");
        }
    }
}

inline SolveResult solve(const SolverConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    TimeGrid time_grid = build_time_grid(config.intensity, config.horizon, config.target_dlambda);
    SolveStats stats;
    stats.n_capital = config.capital_grid.size();
    stats.n_steps = time_grid.steps();
    stats.n_qmc = config.n_qmc;
    stats.evaluations = static_cast<double>(stats.n_steps) * static_cast<double>(stats.n_capital) *
                        static_cast<double>(stats.n_qmc);
    if (stats.evaluations > config.max_evaluations)
        throw ResourceLimitError("solve: " + std::to_string(stats.evaluations) +
                                 " evaluations exceed the limit of " +
                                 std::to_string(config.max_evaluations));

    std::vector<DealSample> shared;
    std::vector<DealSample> per_step;
    DealsForStep deals_for_step;
    if (!config.skip_per_step) {
        shared = sample_deals(config.deal_model, config.n_qmc, QmcSource{0});
        deals_for_step = [&shared](std::size_t) { return std::span<const DealSample>(shared); };
    } else {
        const std::size_t steps = time_grid.steps();
        deals_for_step = [&, steps](std::size_t k) {
            const std::uint64_t skip = static_cast<std::uint64_t>(steps - 1 - k) * config.n_qmc;
            per_step = sample_deals(config.deal_model, config.n_qmc, QmcSource{skip});
            return std::span<const DealSample>(per_step);
        };
    }

    SolveResult result{backward_induction(config.capital_grid, time_grid, deals_for_step,
                                          config.deal_model.moic_hurdle, config.deal_model.exit_years,
                                          config.threads),
                       stats};
    result.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    check_table_invariants(result.table);
    return result;
}

}  // namespace capdeploy
