#pragma once

// Subcommand bodies for the capdeploy tool. Each returns a process exit code:
// 0 success, 2 config error, 3 missing artifact, 4 invariant violation,
// 1 anything else.

#include "capdeploy/config.hpp"
#include "capdeploy/error.hpp"
#include "capdeploy/format.hpp"
#include "capdeploy/policy.hpp"
#include "capdeploy/simulator.hpp"
#include "capdeploy/solver.hpp"
#include "capdeploy/table_io.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace capdeploy::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kMissingArtifact = 3,
    kInvariantViolation = 4,
};

inline constexpr const char* kTableFile = "value_table.txt";

/// Runs `body`, mapping exceptions to exit codes and reporting them on `err`.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const MissingArtifact& e) {
        err << "missing artifact: " << e.what() << '\n';
        return kMissingArtifact;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

inline bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

/// Rejects a table solved for a different fund or hurdle.
inline void check_table_matches(const ValueTable& table, const RunConfig& config) {
    auto mismatch = [](const char* key) {
        return ConfigError(key, 0, std::string("value table was solved with a different ") + key);
    };
    if (!nearly_equal(table.capital(), config.fund_size)) throw mismatch("fund_size");
    if (!nearly_equal(table.horizon(), config.horizon_years())) throw mismatch("horizon_quarters");
    if (!nearly_equal(table.exit_years, config.exit_years)) throw mismatch("exit_years");
    if (!nearly_equal(table.moic_hurdle, config.moic_hurdle())) throw mismatch("hurdle_irr");
}

inline std::string solve_report(const RunConfig& config, const SolveResult& result) {
    std::string out = "# capdeploy solve report\n";
    out += config.echo();
    out += "# solve\n";
    out += "n_capital = " + std::to_string(result.stats.n_capital) + '\n';
    out += "n_steps = " + std::to_string(result.stats.n_steps) + '\n';
    out += "n_qmc = " + std::to_string(result.stats.n_qmc) + '\n';
    out += "evaluations = " + format_double(result.stats.evaluations) + '\n';
    out += "value_full_capital_t0 = " + format_double(result.table.at(0, result.table.n_capital() - 1)) + '\n';
    return out;
}

/// Writes value_table.txt, value_table.csv, time_grid.csv and solve_report.txt.
inline int cmd_solve(const RunConfig& config, const fs::path& out_dir, unsigned threads, std::ostream& log) {
    config.validate();
    log << config.echo();
    const SolveResult result = solve(config.solver_config(threads));
    save_table(result.table, out_dir / kTableFile);
    write_file_atomic(out_dir / "value_table.csv", value_table_csv(result.table));
    write_file_atomic(out_dir / "time_grid.csv", time_grid_csv(result.table.time_grid));
    write_file_atomic(out_dir / "solve_report.txt", solve_report(config, result));
    log << "solved " << result.stats.n_steps << " steps x " << result.stats.n_capital << " capital points x "
        << result.stats.n_qmc << " samples in " << result.stats.wall_seconds << " s\n";
    log << "V(F0, 0) = " << format_double(result.table.at(0, result.table.n_capital() - 1)) << '\n';
    return kOk;
}

inline std::string surface_csv(const ThresholdSurface& surface) {
    std::string out = "t_years,size_fraction,required_irr\n";
    for (const auto& r : surface)
        out += format_double(r.t_years) + ',' + format_double(r.size_fraction) + ',' + format_double(r.required_irr) + '\n';
    return out;
}

/// Writes surface.csv. Times are the table's grid times unless n_times is set.
inline int cmd_policy(const RunConfig& config, const fs::path& table_path, const fs::path& out_dir,
                      const std::vector<double>& fractions, std::optional<std::size_t> n_times,
                      std::ostream& log) {
    config.validate();
    const ValueTable table = load_table(table_path);
    check_table_matches(table, config);
    for (double q : fractions)
        if (!(q > 0.0 && q <= 1.0)) throw ConfigError("fractions", 0, "fractions must lie in (0, 1]");
    const std::vector<double> times = n_times ? evenly_spaced_times(table, *n_times) : table.time_grid.times;
    const auto surface = export_surface(table, fractions, times);
    write_file_atomic(out_dir / "surface.csv", surface_csv(surface));
    log << "wrote " << surface.size() << " surface rows to " << (out_dir / "surface.csv").string() << '\n';
    return kOk;
}

inline std::string trials_csv(const StudyResult& study) {
    std::string out = "trial,policy,n_deals,deployed,irr\n";
    for (std::size_t i = 0; i < study.trials.size(); ++i) {
        const auto row = [&](const char* name, const TrialResult& r) {
            out += std::to_string(i) + ',' + name + ',' + std::to_string(r.accepted_deals) + ',' +
                   format_double(r.deployed) + ',' + format_optional(r.irr) + '\n';
        };
        row("adp", study.trials[i].adp);
        row("baseline", study.trials[i].baseline);
    }
    return out;
}

inline std::string summary_csv(const StudySummary& s) {
    std::string out =
        "policy,n_trials,n_with_irr,mean_irr,std_irr,irr_q05,irr_q25,irr_q50,irr_q75,irr_q95,mean_deployed,"
        "mean_deal_count\n";
    const auto row = [&out](const char* name, const PolicySummary& p) {
        out += std::string(name) + ',' + std::to_string(p.n_trials) + ',' + std::to_string(p.n_with_irr) + ',' +
               format_optional(p.mean_irr) + ',' + format_optional(p.std_irr);
        for (int q = 0; q < 5; ++q)
            out += ',' + (p.irr_quantiles ? format_double((*p.irr_quantiles)[q]) : std::string{});
        out += ',' + format_double(p.mean_deployed) + ',' + format_double(p.mean_deal_count) + '\n';
    };
    row("adp", s.adp);
    row("baseline", s.baseline);
    return out;
}

inline std::string paired_csv(const StudySummary& s) {
    return "n_paired,mean_difference,se_difference\n" + std::to_string(s.n_paired) + ',' +
           format_optional(s.mean_difference) + ',' + format_optional(s.se_difference) + '\n';
}

/// Writes trials.csv, summary.csv and paired_difference.csv.
inline int cmd_simulate(const RunConfig& config, const fs::path& table_path, const fs::path& out_dir,
                        unsigned threads, std::ostream& log) {
    config.validate();
    const ValueTable table = load_table(table_path);
    check_table_matches(table, config);
    const StudyResult study = run_study(table, config.study_config(threads));
    for (const auto& pair : study.trials)
        for (const TrialResult* r : {&pair.adp, &pair.baseline}) {
            if (r->deployed > config.fund_size * (1.0 + 1e-12))
                throw InvariantViolation("trial deployed more than the fund size");
            if (r->irr) {
                double scale = 0.0;
                const auto flows = investor_flows(*r, config.fund_size, config.horizon_years(), config.irr_convention);
                for (const auto& cf : flows) scale += std::abs(cf.amount);
                if (std::abs(npv(flows, *r->irr)) > 1e-9 * scale)
                    throw InvariantViolation("portfolio IRR fails its NPV certificate");
            }
        }
    write_file_atomic(out_dir / "trials.csv", trials_csv(study));
    write_file_atomic(out_dir / "summary.csv", summary_csv(study.summary));
    write_file_atomic(out_dir / "paired_difference.csv", paired_csv(study.summary));
    const auto pct = [](const std::optional<double>& x) { return x ? format_double(100.0 * *x) + "%" : std::string("n/a"); };
    log << "trials: " << study.trials.size() << '\n'
        << "adp mean IRR: " << pct(study.summary.adp.mean_irr) << '\n'
        << "baseline mean IRR: " << pct(study.summary.baseline.mean_irr) << '\n'
        << "adp - baseline: " << pct(study.summary.mean_difference) << " (se " << pct(study.summary.se_difference)
        << ", n = " << study.summary.n_paired << ")\n";
    return kOk;
}

}  // namespace capdeploy::cli
