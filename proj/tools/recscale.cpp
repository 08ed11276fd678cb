#include "recscale/pipeline/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace recscale;

namespace {

struct CommonArgs {
    std::string config;
    std::string run;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--run", args.run, "run id; overrides run.id from the config");
    cmd->add_option("--set", args.overrides, "override a config value, e.g. --set search.n=4")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preference-feature search and recommendation evaluation pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pipeline::kToolVersion));

    CommonArgs args;
    pipeline::Options options;
    std::string strategy;
    std::string policy;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"ingest", "load interactions and catalog, write leave-one-out splits"},
        {"features", "run feature search for every policy and strategy"},
        {"dedup", "embed valid features and count unique ones"},
        {"eval", "evaluate the recommender with and without features"},
        {"judge", "pairwise judging of two policies' features"},
        {"report", "render tables, growth curves and the scaling fit"},
        {"all", "run every stage in order"},
    };
    for (const auto& [name, help] : commands) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, args);
        if (name == "features") {
            cmd->add_option("--strategy", strategy, "only this strategy")
                ->check(CLI::IsMember({"cot", "best_of_n", "beam", "mcts"}));
            cmd->add_option("--policy", policy, "only this policy model id");
            cmd->add_option("--stop-after", options.stop_after, "stop after checkpointing this many users");
        }
    }
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    if (!strategy.empty()) options.strategy = search::strategy_from_string(strategy);
    if (!policy.empty()) options.policy = policy;

    pipeline::RunConfig config;
    try {
        config = pipeline::load_config(args.config, args.overrides);
    } catch (const pipeline::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pipeline::exit_config;
    }
    if (!args.run.empty()) config.run_id = args.run;
    return pipeline::run_command(command, config, options);
}
