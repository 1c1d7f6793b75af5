#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "kinktrap/cli.hpp"
#include "kinktrap/io.hpp"

using namespace kinktrap;
using json = nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("kinktrap_cli_" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("unknown command exits with the config error code and writes nothing") {
    TempDir dir("unknown");
    RunRequest request;
    request.command = "transmogrify";
    request.output_dir = dir.path / "out";
    CHECK(run(request) == kExitConfigError);
    CHECK_FALSE(std::filesystem::exists(dir.path / "out" / "manifest.json"));
}

TEST_CASE("bad config value exits with the config error code") {
    TempDir dir("badcfg");
    RunRequest request;
    request.command = "relax";
    request.output_dir = dir.path;
    request.overrides = {"run.n_ions=-3"};
    CHECK(run(request) == kExitConfigError);
}

TEST_CASE("relax command emits positions, summary, manifest with digests") {
    TempDir dir("relax");
    RunRequest request;
    request.command = "relax";
    request.output_dir = dir.path;
    request.overrides = {"run.n_ions=31", "trap.radial_ratio=1.34"};
    REQUIRE(run(request) == kExitOk);

    const json manifest = json::parse(read_text_file(dir.path / "manifest.json"));
    CHECK(manifest["command"] == "relax");
    CHECK(manifest["config"]["run.n_ions"] == "31");
    bool found_positions = false;
    for (const auto& out : manifest["outputs"]) {
        const std::string name = out["path"];
        const std::string content = read_text_file(dir.path / name);
        CHECK(sha256_hex(content) == out["sha256"]);  // digests match emitted files
        CHECK(content.size() == out["bytes"]);
        if (name == "positions.csv") found_positions = true;
    }
    CHECK(found_positions);

    const json summary = json::parse(read_text_file(dir.path / "summary.json"));
    CHECK(summary["structure"] == "zigzag");
}

TEST_CASE("reruns are byte-identical in single-worker mode") {
    TempDir dir_a("rerun_a");
    TempDir dir_b("rerun_b");
    for (const auto* dir : {&dir_a, &dir_b}) {
        RunRequest request;
        request.command = "modes";
        request.output_dir = dir->path;
        request.overrides = {"run.n_ions=20", "run.seed=9", "run.workers=1"};
        REQUIRE(run(request) == kExitOk);
    }
    for (const std::string name : {"spectrum.csv", "summary.json"}) {
        CHECK(read_text_file(dir_a.path / name) == read_text_file(dir_b.path / name));
    }
    // manifests agree except for the timing field
    json ma = json::parse(read_text_file(dir_a.path / "manifest.json"));
    json mb = json::parse(read_text_file(dir_b.path / "manifest.json"));
    ma.erase("timing_seconds");
    mb.erase("timing_seconds");
    CHECK(ma == mb);
}

TEST_CASE("config file plus override precedence") {
    TempDir dir("cfgfile");
    const auto ini = dir.path / "run.ini";
    write_text_file(ini, "[run]\nn_ions = 27\n\n[trap]\nradial_ratio = 1.05\n");
    RunRequest request;
    request.command = "relax";
    request.config_path = ini;
    request.output_dir = dir.path;
    request.overrides = {"run.n_ions=10"};  // override beats the file
    REQUIRE(run(request) == kExitOk);
    const json summary = json::parse(read_text_file(dir.path / "summary.json"));
    CHECK(summary["n_ions"] == 10);
    CHECK(summary["structure"] == "linear");
}

TEST_CASE("quench command emits occurrence table and per-trial log") {
    TempDir dir("quench");
    RunRequest request;
    request.command = "quench";
    request.output_dir = dir.path;
    request.overrides = {"run.n_list=30", "quench.trials=2", "run.seed=5"};
    REQUIRE(run(request) == kExitOk);

    const std::string occ = read_text_file(dir.path / "occurrence.csv");
    CHECK(occ.find("N,trials,p_zigzag,p_one_kink,p_multi,p_failed,sigma_one_kink") == 0);
    const std::string log = read_text_file(dir.path / "trials.jsonl");
    int lines = 0;
    for (char c : log)
        if (c == '\n') ++lines;
    CHECK(lines == 2);
    const json first = json::parse(log.substr(0, log.find('\n')));
    CHECK(first["n_ions"] == 30);
    CHECK(first.contains("multiplicity_history"));
}
