// Command line front end for the experiment runner.
//
// hetsim run <config> [--reproducible] [--seed <u64>] [--out <dir>]
// hetsim validate <config>
// hetsim list-examples
//
// <config> is a file path, or the name of a bundled example when no such
// file exists. Exit codes: 0 success, 2 config error, 3 runtime or failed
// expectation, 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hetsim/experiment.hpp"

namespace {

hetsim::ExperimentConfig load_config(const std::string& ref) {
    if (std::filesystem::exists(ref)) return hetsim::parse_config_file(ref);
    for (const auto& [name, text] : hetsim::bundled_configs())
        if (name == ref) return hetsim::parse_config_text(text);
    throw hetsim::IoError("no such config file or bundled example: " + ref);
}

int run_command(const std::string& ref, bool reproducible,
                std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
    const hetsim::ExperimentConfig config = load_config(ref);

    hetsim::RunOptions options;
    options.reproducible = reproducible;
    options.seed_override = seed;
    if (out_dir) {
        options.out_dir_override = out_dir;
    } else if (const char* env = std::getenv("HETSIM_OUT"); env && *env) {
        options.out_dir_override = std::string(env);
    }

    const hetsim::RunOutcome outcome = hetsim::run(config, options);
    for (const std::string& file : outcome.files_written)
        std::cout << "wrote " << file << "\n";
    std::cout << outcome.table.rows.size() << " result rows, "
              << config.expectations.size() - outcome.failed_expectations.size() << "/"
              << config.expectations.size() << " expectations met\n";
    if (!outcome.failed_expectations.empty()) {
        for (const std::string& failure : outcome.failed_expectations)
            std::cerr << "FAILED " << failure << "\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(hetsim::version_string()) +
                 " - seeded heterodyne detection experiments"};
    app.require_subcommand(1);

    std::string config_ref;
    bool reproducible = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    CLI::App* cmd_run = app.add_subcommand("run", "run a config and write result tables");
    cmd_run->add_option("config", config_ref, "config file or bundled example name")
        ->required();
    cmd_run->add_flag("--reproducible", reproducible,
                      "omit the timestamp so identical runs are byte-identical");
    cmd_run->add_option("--seed", seed, "override the seed in the config");
    cmd_run->add_option("--out", out_dir, "output directory (default: config, then cwd)");

    CLI::App* cmd_validate =
        app.add_subcommand("validate", "parse a config and report problems");
    cmd_validate->add_option("config", config_ref, "config file or bundled example name")
        ->required();

    CLI::App* cmd_list = app.add_subcommand("list-examples", "list bundled configs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) return run_command(config_ref, reproducible, seed, out_dir);
        if (cmd_validate->parsed()) {
            const hetsim::ExperimentConfig config = load_config(config_ref);
            std::cout << "ok: " << config.states.size() << " states, "
                      << config.eta_list.size() << " efficiencies, "
                      << config.analyses.size() << " analyses, "
                      << config.expectations.size() << " expectations\n";
            return 0;
        }
        if (cmd_list->parsed()) {
            for (const auto& [name, text] : hetsim::bundled_configs()) {
                std::string first_comment;
                std::istringstream in(text);
                std::string line;
                while (std::getline(in, line))
                    if (line.rfind("# ", 0) == 0) {
                        first_comment = line.substr(2);
                        break;
                    }
                std::cout << name << "\t" << first_comment << "\n";
            }
            return 0;
        }
    } catch (const hetsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hetsim::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const hetsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
