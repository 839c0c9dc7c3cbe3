#pragma once

// The reference fund: $500M over 12 quarters, 12 deals/year, lognormal sizes
// (mean 50, sd 25), (1 + IRR) mean 1.20 sd 0.025, rho -0.3, 15% hurdle, 5-year
// exits, factor-2 noise at 95%. Solved once per test binary.

#include "capdeploy/config.hpp"
#include "capdeploy/solver.hpp"

namespace capdeploy::testing {

inline const RunConfig& reference_config() {
    static const RunConfig config{};
    return config;
}

inline const ValueTable& reference_table() {
    static const ValueTable table = solve(reference_config().solver_config()).table;
    return table;
}

}  // namespace capdeploy::testing
