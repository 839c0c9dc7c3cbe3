#include "capdeploy/policy.hpp"

#include "reference_fund.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace capdeploy;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Three time slices over capital {0, 25, 50, 75, 100}; the middle slice is
/// concave in f, the first is flat above zero.
ValueTable toy_table() {
    ValueTable t;
    t.grid = CapitalGrid::uniform(100.0, 5);
    t.time_grid.times = {0.0, 0.5, 1.0};
    t.time_grid.step_arrivals = {0.05, 0.05};
    t.values = {0.0, 8.0, 8.0, 8.0, 8.0,   //
                0.0, 4.0, 7.0, 9.0, 10.0,  //
                0.0, 0.0, 0.0, 0.0, 0.0};
    t.moic_hurdle = std::pow(1.15, 5.0);
    t.exit_years = 5.0;
    return t;
}

}  // namespace

TEST_CASE("time lookup uses the first grid time at or after t", "[policy]") {
    const auto t = toy_table();
    CHECK(time_index_at_or_after(t, 0.0) == 0);
    CHECK(time_index_at_or_after(t, 0.2) == 1);
    CHECK(time_index_at_or_after(t, 0.5) == 1);
    CHECK(time_index_at_or_after(t, 1.0) == 2);
    CHECK_THROWS_AS(time_index_at_or_after(t, 1.01), DomainError);
    CHECK_THROWS_AS(time_index_at_or_after(t, -0.1), DomainError);
}

TEST_CASE("threshold MOIC from the value gap", "[policy]") {
    const auto t = toy_table();
    const double hurdle = t.moic_hurdle;
    CHECK(threshold_moic(t, 100.0, 50.0, 1.0) == hurdle);
    CHECK(threshold_moic(t, 100.0, 50.0, 0.0) == hurdle);  // flat slice above f = 25
    CHECK_THAT(threshold_moic(t, 100.0, 50.0, 0.5), WithinAbs(hurdle + 3.0 / 50.0, 1e-15));
    CHECK_THAT(threshold_moic(t, 100.0, 25.0, 0.4), WithinAbs(hurdle + 1.0 / 25.0, 1e-15));
    // V(60) = 7.8, V(40) = 5.8 by interpolation.
    CHECK_THAT(threshold_moic(t, 60.0, 20.0, 0.5), WithinAbs(hurdle + 2.0 / 20.0, 1e-12));

    CHECK_THROWS_AS(threshold_moic(t, 50.0, 60.0, 0.5), UnaffordableError);
    CHECK_THROWS_AS(threshold_moic(t, 50.0, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(threshold_moic(t, 120.0, 10.0, 0.5), DomainError);
}

TEST_CASE("threshold IRR conversion", "[policy]") {
    CHECK_THAT(moic_to_irr(2.0113571875, 5.0), WithinAbs(0.15, 1e-12));
    CHECK(moic_to_irr(1.0, 5.0) == 0.0);
    const auto t = toy_table();
    CHECK(threshold_irr(t, 100.0, 10.0, 1.0) == t.hurdle_irr());
    CHECK_THAT(t.hurdle_irr(), WithinAbs(0.15, 1e-14));
}

TEST_CASE("decisions", "[policy]") {
    const auto t = toy_table();
    const auto tie = decide(t, {100.0, 1.0}, {40.0, t.moic_hurdle});
    CHECK(tie.verdict == Verdict::accept);
    CHECK(tie.threshold_moic == t.moic_hurdle);
    CHECK(tie.deal_value_excess == 0.0);

    const auto too_big = decide(t, {30.0, 0.5}, {40.0, 10.0});
    CHECK(too_big.verdict == Verdict::unaffordable);
    CHECK(std::isinf(too_big.threshold_moic));

    const auto below = decide(t, {100.0, 0.5}, {50.0, t.moic_hurdle + 0.05});
    CHECK(below.verdict == Verdict::reject);
    CHECK_THAT(below.deal_value_excess, WithinAbs(50.0 * 0.05 - 3.0, 1e-12));

    CHECK_THROWS_AS(decide(t, {100.0, 2.0}, {10.0, 2.0}), DomainError);
    CHECK_THROWS_AS(decide(t, {-1.0, 0.5}, {10.0, 2.0}), DomainError);
    CHECK_THROWS_AS(decide(t, {100.0, 0.5}, {0.0, 2.0}), DomainError);
}

TEST_CASE("verdicts agree with thresholds on random states", "[policy][property]") {
    const auto& table = testing::reference_table();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const double f = table.capital() * unit(gen);
        const double t = table.horizon() * unit(gen);
        const DealSample deal{1e-3 + 120.0 * unit(gen), 1.5 + 2.0 * unit(gen)};
        const Decision d = decide(table, {f, t}, deal);
        if (deal.size > f) {
            CHECK(d.verdict == Verdict::unaffordable);
            continue;
        }
        const double m_star = threshold_moic(table, f, deal.size, t);
        CHECK(d.threshold_moic == m_star);
        CHECK((d.verdict == Verdict::accept) == (deal.moic >= m_star));
        CHECK(m_star >= table.moic_hurdle);
    }
}

TEST_CASE("reference fund thresholds: size, time and floor", "[policy][reference]") {
    const auto& table = testing::reference_table();
    const double F0 = table.capital();
    CHECK(threshold_moic(table, F0, 0.5 * F0, 0.0) > threshold_moic(table, F0, 0.1 * F0, 0.0));
    CHECK(threshold_irr(table, F0, 0.1 * F0, table.horizon()) == table.hurdle_irr());

    // Size monotonicity at fixed (f, t) on grid times and a fine set of sizes,
    // while the capital left after the deal stays in the region where V is
    // concave. Deals that nearly exhaust the fund reach the convex foot of V
    // near f = 0, where the threshold can dip; those are only counted.
    const double eps = 1e-6 * table.moic_hurdle;
    const double concave_floor = 0.05 * F0;
    int violations = 0;
    int exhaustion_dips = 0;
    for (std::size_t k = 0; k < table.n_times(); k += 8) {
        const double t = table.time_grid.times[k];
        for (double f : {F0, 0.6 * F0, 0.3 * F0}) {
            double prev = 0.0;
            for (int j = 1; j <= 40; ++j) {
                const double s = f * j / 40.0;
                const double m = threshold_moic(table, f, s, t);
                if (m < prev - eps) ++(f - s >= concave_floor ? violations : exhaustion_dips);
                prev = m;
            }
        }
    }
    INFO("dips with less than " << concave_floor << " left after the deal: " << exhaustion_dips);
    CHECK(violations == 0);
}

TEST_CASE("early large deal at 16% is rejected on the reference fund", "[policy][reference]") {
    const auto& table = testing::reference_table();
    const double F0 = table.capital();
    const DealSample deal{0.5 * F0, irr_to_moic(0.16, 5.0)};
    const auto d = decide(table, {F0, 0.0}, deal);
    CHECK(d.verdict == Verdict::reject);
    CHECK(d.threshold_irr > 0.16);
    CHECK(d.deal_value_excess < 0.0);
}

TEST_CASE("threshold surface export", "[policy][surface]") {
    const auto& table = testing::reference_table();
    const std::vector<double> fractions{0.1, 0.25, 0.5};
    const auto surface = export_surface(table, fractions, table.time_grid.times);
    REQUIRE(surface.size() == 3 * table.n_times());
    for (const auto& row : surface) CHECK(row.required_irr >= 0.15 - 1e-9);
    for (std::size_t j = surface.size() - 3; j < surface.size(); ++j) {
        CHECK(surface[j].t_years == table.horizon());
        CHECK_THAT(surface[j].required_irr, WithinAbs(0.15, 1e-9));
    }
    CHECK(surface[0].size_fraction == 0.1);
    CHECK(surface[2].size_fraction == 0.5);

    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(export_surface(table, bad, table.time_grid.times), DomainError);
    const std::vector<double> too_big{1.5};
    CHECK_THROWS_AS(export_surface(table, too_big, table.time_grid.times), DomainError);

    const auto times = evenly_spaced_times(table, 50);
    CHECK(times.front() == 0.0);
    CHECK(times.back() == table.horizon());
    CHECK(export_surface(table, fractions, times).size() == 150);
}
