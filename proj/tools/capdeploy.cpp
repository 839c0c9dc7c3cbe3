// capdeploy: solve the deployment problem, export thresholds, run the policy
// study, or serve queries over a solved table.

#include "capdeploy/cli.hpp"
#include "capdeploy/http_server.hpp"
#include "capdeploy/service.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace capdeploy;
namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string table;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    unsigned threads = 0;
    std::string fractions = "0.1,0.25,0.5";
    std::optional<std::size_t> n_times;
    std::string bind = "127.0.0.1:8080";
};

RunConfig load(const Options& opt) {
    RunConfig config = opt.config.empty() ? RunConfig{} : load_config(opt.config);
    if (opt.seed) config.seed = *opt.seed;
    if (opt.trials) config.n_trials = *opt.trials;
    config.validate();
    return config;
}

fs::path out_dir(const Options& opt, const RunConfig& config) {
    return opt.out.empty() ? fs::path(config.output_dir) : fs::path(opt.out);
}

fs::path table_path(const Options& opt, const RunConfig& config) {
    return opt.table.empty() ? out_dir(opt, config) / cli::kTableFile : fs::path(opt.table);
}

int serve(const Options& opt) {
    const RunConfig config = load(opt);
    const ValueTable table = load_table(table_path(opt, config));
    cli::check_table_matches(table, config);
    const auto [host, port] = parse_bind(opt.bind);
    const QueryService service(&table);
    httplib::Server server;
    mount(server, service);
    std::cout << "serving on http://" << host << ':' << port << "/api/meta" << std::endl;
    if (!server.listen(host, port)) {
        std::cerr << "cannot bind " << host << ':' << port << '\n';
        return cli::kFailure;
    }
    return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capital deployment under stochastic deal arrivals"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* cmd) {
        cmd->add_option("--config", opt.config, "Run configuration (key = value file)");
        cmd->add_option("--out", opt.out, "Output directory (default: output_dir from config)");
        cmd->add_option("--threads", opt.threads, "Worker threads, 0 = all cores");
    };

    auto* solve_cmd = app.add_subcommand("solve", "Solve for the value table");
    add_common(solve_cmd);

    auto* policy_cmd = app.add_subcommand("policy", "Export the required-IRR surface");
    add_common(policy_cmd);
    policy_cmd->add_option("--table", opt.table, "Value table artifact");
    policy_cmd->add_option("--fractions", opt.fractions, "Deal sizes as fractions of remaining capital");
    policy_cmd->add_option("--n-times", opt.n_times, "Evenly spaced times instead of the grid times");

    auto* sim_cmd = app.add_subcommand("simulate", "Compare the policy with the fixed-hurdle baseline");
    add_common(sim_cmd);
    sim_cmd->add_option("--table", opt.table, "Value table artifact");
    sim_cmd->add_option("--seed", opt.seed, "Base seed (trial i uses seed + i)");
    sim_cmd->add_option("--trials", opt.trials, "Number of paired trials");

    auto* serve_cmd = app.add_subcommand("serve", "Serve threshold and decision queries over HTTP");
    add_common(serve_cmd);
    serve_cmd->add_option("--table", opt.table, "Value table artifact");
    serve_cmd->add_option("--bind", opt.bind, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kConfigError;
    }

    return cli::guarded(
        [&]() -> int {
            if (*serve_cmd) return serve(opt);
            const RunConfig config = load(opt);
            if (*solve_cmd) return cli::cmd_solve(config, out_dir(opt, config), opt.threads, std::cout);
            if (*policy_cmd) {
                const auto fractions = parse_double_list(opt.fractions);
                if (!fractions || fractions->empty())
                    throw ConfigError("fractions", 0, "--fractions expects a comma-separated list");
                return cli::cmd_policy(config, table_path(opt, config), out_dir(opt, config), *fractions,
                                       opt.n_times, std::cout);
            }
            return cli::cmd_simulate(config, table_path(opt, config), out_dir(opt, config), opt.threads, std::cout);
        },
        std::cerr);
}
