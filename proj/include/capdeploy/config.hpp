#pragma once

// Run configuration in natural units, loaded from a flat `key = value` file.
// Blank lines and lines starting with '#' are ignored; unknown or repeated
// keys are errors. Omitted keys take the reference-fund defaults below.

#include "capdeploy/arrivals.hpp"
#include "capdeploy/error.hpp"
#include "capdeploy/format.hpp"
#include "capdeploy/simulator.hpp"
#include "capdeploy/solver.hpp"
#include "capdeploy/stochastics.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace capdeploy {

struct RunConfig {
    double fund_size = 500.0;       ///< F_0, $M
    double horizon_quarters = 12.0;

    std::string intensity = "constant";  ///< constant | piecewise | sinusoidal
    double deals_per_year = 12.0;        ///< constant rate, or sinusoid base
    std::vector<double> intensity_breakpoints;  ///< years, piecewise only
    std::vector<double> intensity_rates;        ///< deals/year, piecewise only
    double seasonal_amplitude = 0.0;
    double seasonal_period = 1.0;
    double seasonal_phase = 0.0;

    double size_mean = 50.0;
    double size_std = 25.0;
    double irr_mean = 0.20;
    double irr_std = 0.025;
    double rho_log = -0.3;
    double hurdle_irr = 0.15;
    double exit_years = 5.0;
    double noise_factor = 2.0;
    double noise_confidence = 0.95;
    std::optional<double> noise_mu;  ///< overrides the mean-unbiased default

    std::size_t n_f = 101;
    std::size_t n_qmc = 4096;
    double target_dlambda = 0.05;
    bool qmc_skip_per_step = false;

    std::size_t n_trials = 1000;
    std::uint64_t seed = 0;
    IrrConvention irr_convention = IrrConvention::committed;

    std::string output_dir = "out";

    double horizon_years() const { return horizon_quarters / 4.0; }
    double moic_hurdle() const { return irr_to_moic(hurdle_irr, exit_years); }

    NoiseParams noise() const {
        NoiseParams p = calibrate_noise(noise_factor, noise_confidence, true);
        if (noise_mu) p.mu = *noise_mu;
        return p;
    }

    DealModel deal_model() const {
        DealModel m;
        m.size = moment_match_lognormal(size_mean, size_std);
        m.growth = moment_match_lognormal(1.0 + irr_mean, irr_std);
        m.rho_log = rho_log;
        m.exit_years = exit_years;
        m.moic_hurdle = moic_hurdle();
        const auto n = noise();
        m.noise_sigma = n.sigma;
        m.noise_mu = n.mu;
        return m;
    }

    IntensityModel intensity_model() const {
        if (intensity == "piecewise") return PiecewiseIntensity{intensity_breakpoints, intensity_rates};
        if (intensity == "sinusoidal")
            return SinusoidalIntensity{deals_per_year, seasonal_amplitude, seasonal_period, seasonal_phase};
        return ConstantIntensity{deals_per_year};
    }

    SolverConfig solver_config(unsigned threads = 0) const {
        SolverConfig c;
        c.deal_model = deal_model();
        c.intensity = intensity_model();
        c.horizon = horizon_years();
        c.capital_grid = CapitalGrid::uniform(fund_size, n_f);
        c.n_qmc = n_qmc;
        c.target_dlambda = target_dlambda;
        c.skip_per_step = qmc_skip_per_step;
        c.threads = threads;
        return c;
    }

    StudyConfig study_config(unsigned threads = 0) const {
        StudyConfig s;
        s.deal_model = deal_model();
        s.intensity = intensity_model();
        s.horizon = horizon_years();
        s.capital = fund_size;
        s.hurdle_irr = hurdle_irr;
        s.n_trials = n_trials;
        s.base_seed = seed;
        s.threads = threads;
        s.convention = irr_convention;
        return s;
    }

    /// Throws ConfigError naming the first offending key.
    void validate() const {
        auto require = [](bool ok, const char* key, const std::string& bound) {
            if (!ok) throw ConfigError(key, 0, std::string(key) + ": " + bound);
        };
        require(fund_size > 0.0 && std::isfinite(fund_size), "fund_size", "must be positive");
        require(horizon_quarters > 0.0 && std::isfinite(horizon_quarters), "horizon_quarters", "must be positive");
        require(intensity == "constant" || intensity == "piecewise" || intensity == "sinusoidal", "intensity",
                "must be constant, piecewise or sinusoidal");
        require(deals_per_year >= 0.0 && std::isfinite(deals_per_year), "deals_per_year", "must be >= 0");
        if (intensity == "piecewise") {
            require(intensity_breakpoints.size() >= 2 && intensity_rates.size() + 1 == intensity_breakpoints.size(),
                    "intensity_breakpoints", "need one more breakpoint than intensity_rates");
            require(intensity_breakpoints.front() == 0.0, "intensity_breakpoints", "must start at 0");
            for (std::size_t i = 1; i < intensity_breakpoints.size(); ++i)
                require(intensity_breakpoints[i] > intensity_breakpoints[i - 1], "intensity_breakpoints",
                        "must increase strictly");
            require(intensity_breakpoints.back() >= horizon_years(), "intensity_breakpoints",
                    "must cover the horizon");
            for (double r : intensity_rates) require(r >= 0.0, "intensity_rates", "must be >= 0");
        }
        if (intensity == "sinusoidal") {
            require(seasonal_amplitude >= 0.0 && seasonal_amplitude <= deals_per_year, "seasonal_amplitude",
                    "must lie in [0, deals_per_year]");
            require(seasonal_period > 0.0, "seasonal_period", "must be positive");
        }
        require(size_mean > 0.0, "size_mean", "must be positive");
        require(size_std >= 0.0, "size_std", "must be >= 0");
        require(irr_mean > -1.0, "irr_mean", "must exceed -1");
        require(irr_std >= 0.0, "irr_std", "must be >= 0");
        require(std::abs(rho_log) <= 1.0, "rho_log", "must lie in [-1, 1]");
        require(hurdle_irr > -1.0, "hurdle_irr", "must exceed -1");
        require(exit_years > 0.0, "exit_years", "must be positive");
        require(noise_factor >= 1.0, "noise_factor", "must be >= 1");
        require(noise_confidence > 0.0 && noise_confidence < 1.0, "noise_confidence", "must lie in (0, 1)");
        if (noise_mu) require(std::isfinite(*noise_mu), "noise_mu", "must be finite");
        require(n_f >= 2, "n_f", "must be >= 2");
        require(n_qmc >= 64 && std::has_single_bit(n_qmc), "n_qmc", "must be a power of two >= 64");
        require(target_dlambda > 0.0 && target_dlambda <= 0.5, "target_dlambda", "must lie in (0, 0.5]");
        require(n_trials >= 1, "n_trials", "must be >= 1");
    }

    /// Every input and derived parameter, one `key = value` per line.
    std::string echo() const {
        const DealModel m = deal_model();
        std::ostringstream os;
        auto kv = [&os](const char* key, const std::string& v) { os << key << " = " << v << '\n'; };
        auto num = [&kv](const char* key, double v) { kv(key, format_double(v)); };
        num("fund_size", fund_size);
        num("horizon_quarters", horizon_quarters);
        num("horizon_years", horizon_years());
        kv("intensity", intensity);
        num("deals_per_year", deals_per_year);
        if (intensity == "sinusoidal") {
            num("seasonal_amplitude", seasonal_amplitude);
            num("seasonal_period", seasonal_period);
            num("seasonal_phase", seasonal_phase);
        }
        if (intensity == "piecewise") {
            std::string bp, rt;
            for (double b : intensity_breakpoints) bp += (bp.empty() ? "" : ",") + format_double(b);
            for (double r : intensity_rates) rt += (rt.empty() ? "" : ",") + format_double(r);
            kv("intensity_breakpoints", bp);
            kv("intensity_rates", rt);
        }
        num("size_mean", size_mean);
        num("size_std", size_std);
        num("irr_mean", irr_mean);
        num("irr_std", irr_std);
        num("rho_log", rho_log);
        num("hurdle_irr", hurdle_irr);
        num("exit_years", exit_years);
        num("noise_factor", noise_factor);
        num("noise_confidence", noise_confidence);
        kv("n_f", std::to_string(n_f));
        kv("n_qmc", std::to_string(n_qmc));
        num("target_dlambda", target_dlambda);
        kv("qmc_skip_per_step", qmc_skip_per_step ? "true" : "false");
        kv("n_trials", std::to_string(n_trials));
        kv("seed", std::to_string(seed));
        kv("irr_convention", irr_convention == IrrConvention::committed ? "committed" : "full_commitment");
        os << "# derived\n";
        num("size_log_mu", m.size.mu);
        num("size_log_sigma", m.size.sigma);
        num("growth_log_mu", m.growth.mu);
        num("growth_log_sigma", m.growth.sigma);
        num("moic_log_mu", m.moic_law().mu);
        num("moic_log_sigma", m.moic_law().sigma);
        num("moic_hurdle", m.moic_hurdle);
        num("noise_sigma", m.noise_sigma);
        num("noise_mu", m.noise_mu);
        return os.str();
    }
};

namespace detail {

inline bool parse_bool(std::string_view v, bool& out) {
    if (v == "true" || v == "1" || v == "yes") {
        out = true;
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        out = false;
        return true;
    }
    return false;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::set<std::string, std::less<>> seen;

    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("", line_no, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        auto fail = [&](const std::string& what) -> ConfigError {
            return ConfigError(key, line_no, "line " + std::to_string(line_no) + ": " + key + ": " + what);
        };
        if (!seen.insert(key).second) throw fail("duplicate key");

        auto real = [&](double& dst) {
            const auto x = parse_double(value);
            if (!x || !std::isfinite(*x)) throw fail("expected a number, got '" + std::string(value) + "'");
            dst = *x;
        };
        auto count = [&](std::size_t& dst) {
            const auto x = parse_integer(value);
            if (!x || *x < 0) throw fail("expected a non-negative integer, got '" + std::string(value) + "'");
            dst = static_cast<std::size_t>(*x);
        };
        auto list = [&](std::vector<double>& dst) {
            const auto xs = parse_double_list(value);
            if (!xs) throw fail("expected a comma-separated list of numbers");
            dst = *xs;
        };

        if (key == "fund_size") real(c.fund_size);
        else if (key == "horizon_quarters") real(c.horizon_quarters);
        else if (key == "intensity") c.intensity = std::string(value);
        else if (key == "deals_per_year") real(c.deals_per_year);
        else if (key == "intensity_breakpoints") list(c.intensity_breakpoints);
        else if (key == "intensity_rates") list(c.intensity_rates);
        else if (key == "seasonal_amplitude") real(c.seasonal_amplitude);
        else if (key == "seasonal_period") real(c.seasonal_period);
        else if (key == "seasonal_phase") real(c.seasonal_phase);
        else if (key == "size_mean") real(c.size_mean);
        else if (key == "size_std") real(c.size_std);
        else if (key == "irr_mean") real(c.irr_mean);
        else if (key == "irr_std") real(c.irr_std);
        else if (key == "rho_log") real(c.rho_log);
        else if (key == "hurdle_irr") real(c.hurdle_irr);
        else if (key == "exit_years") real(c.exit_years);
        else if (key == "noise_factor") real(c.noise_factor);
        else if (key == "noise_confidence") real(c.noise_confidence);
        else if (key == "noise_mu") {
            double mu = 0.0;
            real(mu);
            c.noise_mu = mu;
        } else if (key == "n_f") count(c.n_f);
        else if (key == "n_qmc") count(c.n_qmc);
        else if (key == "target_dlambda") real(c.target_dlambda);
        else if (key == "qmc_skip_per_step") {
            if (!detail::parse_bool(value, c.qmc_skip_per_step)) throw fail("expected true or false");
        } else if (key == "n_trials") count(c.n_trials);
        else if (key == "seed") {
            const auto x = parse_integer(value);
            if (!x || *x < 0) throw fail("expected a non-negative integer");
            c.seed = static_cast<std::uint64_t>(*x);
        } else if (key == "irr_convention") {
            if (value == "committed") c.irr_convention = IrrConvention::committed;
            else if (value == "full_commitment") c.irr_convention = IrrConvention::full_commitment;
            else throw fail("expected committed or full_commitment");
        } else if (key == "output_dir") c.output_dir = std::string(value);
        else throw fail("unknown key");
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(text);
}

}  // namespace capdeploy
