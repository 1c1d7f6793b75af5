// File formats and digests: CSV with shortest-round-trip floats, 16-bit
// portable graymaps, an exact binary trajectory format, SHA-256 digests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kinktrap/dynamics.hpp"
#include "kinktrap/imaging.hpp"

namespace kinktrap {

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return buffer_; }

  private:
    std::string buffer_;
    std::size_t columns_;
};

std::string cell(double value);
std::string cell(int value);
std::string cell(std::uint64_t value);
inline std::string cell(const std::string& s) { return s; }

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

// 16-bit binary PGM (P5), row-major, origin top-left; intensities scaled so
// the frame maximum maps to 65535. Returns the scale factor used.
double write_pgm16(const std::filesystem::path& path, const ImageFrame& frame);
std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path, int& width, int& height);

// Exact binary trajectory snapshot format (KTRJ v1, little endian):
// magic "KTRJ", u32 version, u32 n_ions, f64 dt, u32 stride, u64 seed,
// u32 frame count, then per frame: f64 time, n*3 f64 positions,
// n*3 f64 velocities. Round-trips bit exactly.
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

// Trajectory CSV export (step,time,ion_index,x,y,z,vx,vy,vz) in SI units.
std::string trajectory_csv(const Trajectory& trajectory, const UnitScale& scale);

}  // namespace kinktrap
