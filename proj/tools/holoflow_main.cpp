#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <holoflow/scenario.hpp>

int main(int argc, char** argv) {
    CLI::App app{"holoflow: generators, flows and evolution families on the disc, ball and "
                 "polydisc"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir;
    std::uint64_t seed_raw = 0;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "execute a scenario file");
    run->add_option("scenario", scenario_path, "path to a scenario JSON file")->required();
    run->add_option("--out", out_dir, "directory for report.json and data.csv")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed_raw, "override the scenario seed");
    run->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* lb = app.add_subcommand("list-builtins", "list named builtin objects");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (lb->parsed()) {
        holoflow::print_builtins(std::cout);
        return 0;
    }

    std::optional<std::uint64_t> seed;
    if (seed_opt->count() > 0) seed = seed_raw;
    return holoflow::run_scenario(scenario_path, out_dir, seed, quiet, std::cout);
}
