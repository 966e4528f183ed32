#include "odeident/runner.hpp"

#include <CLI11.hpp>

#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Parameter and initial-state recovery for autonomous ODE systems"};
    app.require_subcommand(0, 1);

    bool list_models = false;
    app.add_flag("--models", list_models, "List the registered models and exit");

    std::string validate_path;
    app.add_option("--validate", validate_path, "Check a config file against the schema and exit");

    std::string run_path;
    CLI::App* run = app.add_subcommand("run", "Run one configured experiment");
    run->add_option("config", run_path, "Path to the experiment config")->required();

    CLI11_PARSE(app, argc, argv);

    if (list_models) return odeident::cli::list_models_main();
    if (!validate_path.empty()) return odeident::cli::validate_main(validate_path);
    if (run->parsed()) return odeident::cli::run_main(run_path);

    std::cout << app.help();
    return 0;
}
