// Command-line entry point. Everything of substance lives in the library so
// tests can invoke the same pipelines in-process.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kinktrap/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kinktrap - Coulomb crystal kink defect simulation toolkit"};
    app.set_version_flag("--version", std::string("kinktrap ") + kinktrap::kArtifactVersion +
                                          " (format v" +
                                          std::to_string(kinktrap::kFormatVersion) + ")");

    kinktrap::RunRequest request;
    std::string config_path;
    std::string output_dir = ".";
    app.add_option("command", request.command,
                   "one of: relax, modes, quench, pn, sweep, render, tune")
        ->required();
    app.add_option("-c,--config", config_path, "INI configuration file");
    app.add_option("-s,--set", request.overrides,
                   "override a config value (section.key=value), repeatable");
    app.add_option("-o,--out", output_dir, "output directory (default: current)");
    std::string seed, workers;
    app.add_option("--seed", seed, "shorthand for --set run.seed=...");
    app.add_option("--workers", workers, "shorthand for --set run.workers=...");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kinktrap::kExitConfigError;
    }

    if (!seed.empty()) request.overrides.push_back("run.seed=" + seed);
    if (!workers.empty()) request.overrides.push_back("run.workers=" + workers);
    request.config_path = config_path;
    request.output_dir = output_dir;
    return kinktrap::run(request);
}
