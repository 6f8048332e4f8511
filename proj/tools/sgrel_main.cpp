#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sgrel/commands.hpp"

using namespace sgrel;

int main(int argc, char** argv) {
    CLI::App app{"scene-graph relationship detection: synthetic benchmark, training, evaluation"};
    app.require_subcommand(0, 1);

    bool print_defaults = false;
    app.add_flag("--print-defaults", print_defaults,
                 "print the complete default configuration and exit");

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool have_seed = false, have_out = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (JSON)")->required();
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--out", out_dir, "override the output directory")
            ->each([&](const std::string&) { have_out = true; });
    };

    CLI::App* c_gen = app.add_subcommand("gen", "generate a synthetic dataset");
    CLI::App* c_train = app.add_subcommand("train", "train the predicate classifier");
    CLI::App* c_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    CLI::App* c_gradcheck =
        app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
    CLI::App* c_ablate = app.add_subcommand("ablate", "run the loss-combination and margin grids");
    for (CLI::App* sub : {c_gen, c_train, c_eval, c_gradcheck, c_ablate}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help
        std::cerr << e.what() << "\n";
        return cmd::kExitConfig;
    }

    if (print_defaults) {
        std::cout << default_config_json().dump(2) << "\n";
        return cmd::kExitOk;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << "no subcommand given; see --help\n";
        return cmd::kExitConfig;
    }

    try {
        const RunConfig rc = load_run_config_file(config_path, have_seed ? &seed : nullptr,
                                                  have_out ? &out_dir : nullptr);
        if (c_gen->parsed()) return cmd::run_gen(rc);
        if (c_train->parsed()) return cmd::run_train(rc);
        if (c_eval->parsed()) return cmd::run_eval(rc);
        if (c_gradcheck->parsed()) return cmd::run_gradcheck(rc);
        if (c_ablate->parsed()) return cmd::run_ablate(rc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cmd::kExitConfig;
    }
    return cmd::kExitConfig;
}
