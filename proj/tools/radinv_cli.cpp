// radinv-cli <command> <config.yaml> [--output-dir DIR] [--seed N]

#include "radinv/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    namespace cli = radinv::cli;
    CLI::App app{"Forward solves, inversions and studies for the degenerate radiative-coefficient problem"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    for (const auto& [cmd, name] : cli::kCommands) {
        auto* sub = app.add_subcommand(std::string(name));
        sub->add_option("config", config_path, "YAML run configuration")->required();
        sub->add_option("--output-dir", output_dir, "override output.directory");
        sub->add_option("--seed", seed, "override noise.seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kConfigError;
    }

    const auto cmd = cli::command_from(app.get_subcommands().front()->get_name());
    return cli::run(*cmd, config_path, cli::Overrides{output_dir, seed}, std::cout, std::cerr);
}
