#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "kinktrap/config.hpp"
#include "kinktrap/io.hpp"
#include "test_common.hpp"

using namespace kinktrap;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("kinktrap_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("The quick brown fox jumps over the lazy dog") ==
          "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("double formatting round trips") {
    Rng rng(2718);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.uniform(-300, 300)));
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("binary trajectory round trip is exact") {
    TempDir dir;
    Trajectory traj;
    traj.dt = 0.01;
    traj.stride = 7;
    traj.seed = 0xdeadbeefcafe1234ULL;
    Rng rng(3);
    for (int f = 0; f < 5; ++f) {
        SystemState s;
        s.time = f * 0.07;
        for (int i = 0; i < 4; ++i) {
            s.positions.push_back({rng.normal(), rng.normal(), rng.normal()});
            s.velocities.push_back({rng.normal(), rng.normal(), rng.normal()});
        }
        traj.frames.push_back(s);
    }
    const auto path = dir.path / "traj.ktrj";
    write_trajectory(path, traj);
    const Trajectory back = read_trajectory(path);
    CHECK(back.dt == traj.dt);
    CHECK(back.stride == traj.stride);
    CHECK(back.seed == traj.seed);
    REQUIRE(back.frames.size() == traj.frames.size());
    for (std::size_t f = 0; f < traj.frames.size(); ++f) {
        CHECK(back.frames[f].time == traj.frames[f].time);
        for (int i = 0; i < 4; ++i) {
            CHECK(back.frames[f].positions[i] == traj.frames[f].positions[i]);
            CHECK(back.frames[f].velocities[i] == traj.frames[f].velocities[i]);
        }
    }
}

TEST_CASE("pgm 16-bit round trip") {
    TempDir dir;
    ImageFrame frame;
    frame.width = 17;
    frame.height = 9;
    frame.intensity.resize(17 * 9);
    for (std::size_t i = 0; i < frame.intensity.size(); ++i)
        frame.intensity[i] = static_cast<double>(i % 91);
    const auto path = dir.path / "f.pgm";
    const double scale = write_pgm16(path, frame);
    int w = 0, h = 0;
    const auto pixels = read_pgm16(path, w, h);
    CHECK(w == 17);
    CHECK(h == 9);
    for (std::size_t i = 0; i < pixels.size(); ++i)
        CHECK(pixels[i] == static_cast<std::uint16_t>(std::lround(frame.intensity[i] * scale)));
}

TEST_CASE("ini parsing and overrides") {
    const std::string text =
        "; comment\n"
        "[trap]\n"
        "axial_hz = 56e3   # trailing comment\n"
        "model = harmonic\n"
        "\n"
        "[run]\n"
        "n_ions = 31\n";
    const ConfigMap map = parse_ini(text);
    CHECK(map.at("trap.axial_hz") == "56e3");
    CHECK(map.at("run.n_ions") == "31");

    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_AS(RunConfig::from_map({{"trap.bogus", "1"}}), ConfigError);
    }
    SUBCASE("defaults round trip through the map") {
        const RunConfig defaults;
        const RunConfig back = RunConfig::from_map(defaults.to_map());
        CHECK(back.radial_y_hz == defaults.radial_y_hz);
        CHECK(back.quench.melt_boost == defaults.quench.melt_boost);
        // unit-scaled keys (um, ms) round trip to within one ulp-scale error
        CHECK(back.camera.pixel_size ==
              doctest::Approx(defaults.camera.pixel_size).epsilon(1e-12));
        // a second pass is exact: parsing the same strings yields the same values
        const RunConfig again = RunConfig::from_map(back.to_map());
        CHECK(again.camera.pixel_size == back.camera.pixel_size);
    }
    SUBCASE("serialized config reparses identically") {
        const ConfigMap map2 = parse_ini(serialize_config(default_config()));
        CHECK(map2 == default_config());
    }
    SUBCASE("bad values produce ConfigError") {
        CHECK_THROWS_AS(RunConfig::from_map({{"integration.dt", "fast"}}), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_map({{"run.n_ions", "0"}}), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_map({{"trap.model", "cubic"}}), ConfigError);
    }
}

TEST_CASE("trajectory csv uses SI units") {
    const ModelBundle& m = kinktrap::testing::default_model();
    Trajectory traj;
    traj.dt = 0.5;
    traj.stride = 1;
    SystemState s = SystemState::at_rest({Eigen::Vector3d(1.0, 0, 0)});
    traj.frames.push_back(s);
    const std::string csv = trajectory_csv(traj, m.scale);
    CHECK(csv.find("step,time_s,ion_index,x_m") == 0);
    CHECK(csv.find(format_double(m.scale.length)) != std::string::npos);
}
