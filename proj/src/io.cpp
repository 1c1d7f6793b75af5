#include "kinktrap/io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>

#include "kinktrap/errors.hpp"

namespace kinktrap {

std::string format_double(double value) {
    std::array<char, 32> buf;
    const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), result.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += header[i];
    }
    buffer_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw IoError("csv: wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += cells[i];
    }
    buffer_ += '\n';
}

std::string cell(double value) { return format_double(value); }
std::string cell(int value) { return std::to_string(value); }
std::string cell(std::uint64_t value) { return std::to_string(value); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), self-contained
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kSha256K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    std::string msg = bytes;
    const std::uint64_t bit_len = static_cast<std::uint64_t>(bytes.size()) * 8;
    msg += static_cast<char>(0x80);
    while (msg.size() % 64 != 56) msg += '\0';
    for (int i = 7; i >= 0; --i) msg += static_cast<char>((bit_len >> (8 * i)) & 0xff);

    for (std::size_t block = 0; block < msg.size(); block += 64) {
        std::uint32_t w[64];
        for (int t = 0; t < 16; ++t) {
            w[t] = (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t])) << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 1])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 2])) << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(msg[block + 4 * t + 3]));
        }
        for (int t = 16; t < 64; ++t) {
            const std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            const std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
        std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int t = 0; t < 64; ++t) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t temp1 = hh + s1 + ch + kSha256K[t] + w[t];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t temp2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t word : h)
        for (int i = 7; i >= 0; --i) out += hex[(word >> (4 * i)) & 0xf];
    return out;
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

double write_pgm16(const std::filesystem::path& path, const ImageFrame& frame) {
    double peak = 0.0;
    for (double p : frame.intensity) peak = std::max(peak, p);
    const double scale = (peak > 0.0) ? 65535.0 / peak : 1.0;

    std::string out = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                      "\n65535\n";
    out.reserve(out.size() + frame.intensity.size() * 2);
    for (double p : frame.intensity) {
        const auto v = static_cast<std::uint16_t>(std::lround(std::max(0.0, p) * scale));
        out += static_cast<char>(v >> 8);  // big-endian per the format
        out += static_cast<char>(v & 0xff);
    }
    write_text_file(path, out);
    return scale;
}

std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path, int& width, int& height) {
    const std::string data = read_text_file(path);
    std::size_t pos = 0;
    const auto token = [&]() {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return data.substr(start, pos - start);
    };
    if (token() != "P5") throw IoError("pgm: not a P5 graymap");
    width = std::stoi(token());
    height = std::stoi(token());
    if (std::stoi(token()) != 65535) throw IoError("pgm: expected 16-bit depth");
    ++pos;  // single whitespace after the header
    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
    if (data.size() - pos < pixels.size() * 2) throw IoError("pgm: truncated pixel data");
    for (auto& p : pixels) {
        p = static_cast<std::uint16_t>((static_cast<unsigned char>(data[pos]) << 8) |
                                       static_cast<unsigned char>(data[pos + 1]));
        pos += 2;
    }
    return pixels;
}

// ---------------------------------------------------------------------------
// binary trajectory
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::string& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& data, std::size_t& pos) {
    if (pos + sizeof(T) > data.size()) throw IoError("trajectory: truncated file");
    T value;
    std::memcpy(&value, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

}  // namespace

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
    std::string out = "KTRJ";
    put<std::uint32_t>(out, 1);
    const std::uint32_t n = trajectory.frames.empty()
                                ? 0
                                : static_cast<std::uint32_t>(trajectory.frames.front().n());
    put<std::uint32_t>(out, n);
    put<double>(out, trajectory.dt);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(trajectory.stride));
    put<std::uint64_t>(out, trajectory.seed);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(trajectory.frames.size()));
    for (const auto& frame : trajectory.frames) {
        put<double>(out, frame.time);
        for (const auto& r : frame.positions)
            for (int a = 0; a < 3; ++a) put<double>(out, r[a]);
        for (const auto& v : frame.velocities)
            for (int a = 0; a < 3; ++a) put<double>(out, v[a]);
    }
    write_text_file(path, out);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
    const std::string data = read_text_file(path);
    if (data.size() < 4 || data.compare(0, 4, "KTRJ") != 0)
        throw IoError("trajectory: bad magic");
    std::size_t pos = 4;
    if (get<std::uint32_t>(data, pos) != 1) throw IoError("trajectory: unsupported version");
    const std::uint32_t n = get<std::uint32_t>(data, pos);
    Trajectory traj;
    traj.dt = get<double>(data, pos);
    traj.stride = static_cast<int>(get<std::uint32_t>(data, pos));
    traj.seed = get<std::uint64_t>(data, pos);
    const std::uint32_t frames = get<std::uint32_t>(data, pos);
    traj.frames.resize(frames);
    for (auto& frame : traj.frames) {
        frame.time = get<double>(data, pos);
        frame.positions.resize(n);
        frame.velocities.resize(n);
        for (auto& r : frame.positions)
            for (int a = 0; a < 3; ++a) r[a] = get<double>(data, pos);
        for (auto& v : frame.velocities)
            for (int a = 0; a < 3; ++a) v[a] = get<double>(data, pos);
    }
    return traj;
}

std::string trajectory_csv(const Trajectory& trajectory, const UnitScale& scale) {
    CsvWriter csv({"step", "time_s", "ion_index", "x_m", "y_m", "z_m", "vx_mps", "vy_mps",
                   "vz_mps"});
    for (std::size_t f = 0; f < trajectory.frames.size(); ++f) {
        const auto& frame = trajectory.frames[f];
        const double t0 = trajectory.frames.front().time;
        const std::uint64_t step =
            trajectory.dt > 0.0
                ? static_cast<std::uint64_t>(std::llround((frame.time - t0) / trajectory.dt))
                : 0;
        for (int i = 0; i < frame.n(); ++i) {
            csv.row({cell(step), cell(frame.time * scale.time), cell(i),
                     cell(frame.positions[i].x() * scale.length),
                     cell(frame.positions[i].y() * scale.length),
                     cell(frame.positions[i].z() * scale.length),
                     cell(frame.velocities[i].x() * scale.velocity),
                     cell(frame.velocities[i].y() * scale.velocity),
                     cell(frame.velocities[i].z() * scale.velocity)});
        }
    }
    return csv.str();
}

}  // namespace kinktrap
