// Command pipelines wiring the computational modules to files on disk, with
// a run manifest (resolved config, seeds, output digests) per invocation.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace kinktrap {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

// Exit codes per error family.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitPhysicsError = 3;
inline constexpr int kExitIoError = 4;

struct RunRequest {
    std::string command;  // relax | modes | quench | pn | sweep | render | tune
    std::filesystem::path config_path;       // optional INI
    std::vector<std::string> overrides;      // section.key=value
    std::filesystem::path output_dir = ".";
};

// Executes the command, writes outputs and manifest.json into output_dir,
// prints a short summary to stdout. Returns the process exit code.
int run(const RunRequest& request);

}  // namespace kinktrap
