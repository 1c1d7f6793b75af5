#include "kinktrap/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinktrap/errors.hpp"

namespace kinktrap {

namespace {

Eigen::Matrix3d view_rotation(const CameraConfig& camera) {
    return (Eigen::AngleAxisd(camera.tilt_x, Eigen::Vector3d::UnitX()) *
            Eigen::AngleAxisd(camera.tilt_y, Eigen::Vector3d::UnitY()))
        .toRotationMatrix();
}

}  // namespace

Eigen::Vector2d project_position(const Eigen::Vector3d& position, const CameraConfig& camera,
                                 const UnitScale& scale) {
    const Eigen::Vector3d si = view_rotation(camera) * (position * scale.length);
    return {si.x(), si.y()};
}

ImageFrame render_frame(const Trajectory& trajectory, const CameraConfig& camera,
                        const UnitScale& scale, const ScaledLaser* laser) {
    if (trajectory.frames.empty()) throw ExposureUnderrun("render_frame: empty trajectory");
    if (!(camera.exposure > 0.0) || !(camera.pixel_size > 0.0) || !(camera.psf_sigma > 0.0))
        throw ConfigError("render_frame: camera parameters must be positive");
    const double duration_si = trajectory.duration() * scale.time;
    if (trajectory.frames.size() > 1 && duration_si + 1e-12 < camera.exposure)
        throw ExposureUnderrun("render_frame: trajectory covers " + std::to_string(duration_si) +
                               " s of an " + std::to_string(camera.exposure) + " s exposure");

    const Eigen::Matrix3d rot = view_rotation(camera);
    const double t_end = trajectory.frames.front().time + camera.exposure / scale.time;

    ImageFrame frame;
    frame.camera = camera;

    // frame extent: configured, or fitted to the exposure window
    double u_min = 1e300, u_max = -1e300, v_min = 1e300, v_max = -1e300;
    for (const auto& snap : trajectory.frames) {
        if (snap.time > t_end + 1e-12) break;
        for (const auto& r : snap.positions) {
            const Eigen::Vector3d si = rot * (r * scale.length);
            u_min = std::min(u_min, si.x());
            u_max = std::max(u_max, si.x());
            v_min = std::min(v_min, si.y());
            v_max = std::max(v_max, si.y());
        }
    }
    const double margin = 5.0 * camera.psf_sigma + 2.0 * camera.pixel_size;
    if (camera.width > 0 && camera.height > 0) {
        frame.width = camera.width;
        frame.height = camera.height;
        frame.origin_u = -0.5 * camera.width * camera.pixel_size;
        frame.origin_v = -0.5 * camera.height * camera.pixel_size;
    } else {
        frame.width = static_cast<int>(std::ceil((u_max - u_min + 2.0 * margin) / camera.pixel_size));
        frame.height = static_cast<int>(std::ceil((v_max - v_min + 2.0 * margin) / camera.pixel_size));
        frame.origin_u = u_min - margin;
        frame.origin_v = v_min - margin;
    }
    frame.intensity.assign(static_cast<std::size_t>(frame.width) * frame.height, 0.0);

    const double inv_px = 1.0 / camera.pixel_size;
    const double norm = 1.0 / (camera.psf_sigma * std::sqrt(2.0));
    const int reach = std::max(1, static_cast<int>(std::ceil(4.0 * camera.psf_sigma * inv_px)));

    for (const auto& snap : trajectory.frames) {
        if (snap.time > t_end + 1e-12) break;
        ++frame.n_snapshots;
        for (int i = 0; i < snap.n(); ++i) {
            const Eigen::Vector3d si = rot * (snap.positions[i] * scale.length);
            double weight = 1.0;
            if (camera.weight_by_scattering && laser != nullptr)
                weight = laser->scattering_rate(snap.velocities[i]);
            frame.total_weight += weight;

            const double u = si.x(), v = si.y();
            const int col0 = static_cast<int>(std::floor((u - frame.origin_u) * inv_px));
            const int row0 = static_cast<int>(std::floor((v - frame.origin_v) * inv_px));
            for (int row = std::max(0, row0 - reach);
                 row <= std::min(frame.height - 1, row0 + reach); ++row) {
                const double va = frame.origin_v + row * camera.pixel_size;
                const double fv = 0.5 * (std::erf((va + camera.pixel_size - v) * norm) -
                                         std::erf((va - v) * norm));
                for (int col = std::max(0, col0 - reach);
                     col <= std::min(frame.width - 1, col0 + reach); ++col) {
                    const double ua = frame.origin_u + col * camera.pixel_size;
                    const double fu = 0.5 * (std::erf((ua + camera.pixel_size - u) * norm) -
                                             std::erf((ua - u) * norm));
                    frame.at(row, col) += weight * fu * fv;
                }
            }
        }
    }
    return frame;
}

namespace {

double background_level(const ImageFrame& frame) {
    std::vector<double> pixels = frame.intensity;
    const std::size_t mid = pixels.size() / 2;
    std::nth_element(pixels.begin(), pixels.begin() + mid, pixels.end());
    return pixels[mid];
}

}  // namespace

std::vector<double> blur_metric(const ImageFrame& frame,
                                const std::vector<Eigen::Vector2d>& reference) {
    const int n = static_cast<int>(reference.size());
    if (n < 1) throw PhysicsError("blur_metric: no reference positions");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return reference[a].x() < reference[b].x(); });

    // stripe boundaries midway between axial neighbors; collision when two
    // spots share a column within two pixels
    for (int k = 0; k + 1 < n; ++k) {
        if (reference[order[k + 1]].x() - reference[order[k]].x() < 2.0 * frame.camera.pixel_size)
            throw OverlappingSpots("blur_metric: spots of ions " + std::to_string(order[k]) +
                                       " and " + std::to_string(order[k + 1]) + " overlap",
                                   {order[k], order[k + 1]});
    }

    const double bg = background_level(frame);
    std::vector<double> spread(n, 0.0);
    for (int k = 0; k < n; ++k) {
        const int ion = order[k];
        const double lo =
            (k == 0) ? frame.origin_u
                     : 0.5 * (reference[order[k - 1]].x() + reference[ion].x());
        const double hi = (k == n - 1)
                              ? frame.origin_u + frame.width * frame.camera.pixel_size
                              : 0.5 * (reference[ion].x() + reference[order[k + 1]].x());
        const int col_lo = std::max(0, static_cast<int>((lo - frame.origin_u) / frame.camera.pixel_size));
        const int col_hi = std::min(frame.width - 1,
                                    static_cast<int>((hi - frame.origin_u) / frame.camera.pixel_size));
        double w_sum = 0.0, v_sum = 0.0;
        for (int row = 0; row < frame.height; ++row) {
            for (int col = col_lo; col <= col_hi; ++col) {
                const double w = std::max(0.0, frame.at(row, col) - bg);
                w_sum += w;
                v_sum += w * frame.v_of(row);
            }
        }
        if (w_sum <= 0.0) continue;
        const double v_mean = v_sum / w_sum;
        double second = 0.0;
        for (int row = 0; row < frame.height; ++row) {
            for (int col = col_lo; col <= col_hi; ++col) {
                const double w = std::max(0.0, frame.at(row, col) - bg);
                second += w * (frame.v_of(row) - v_mean) * (frame.v_of(row) - v_mean);
            }
        }
        spread[ion] = std::sqrt(second / w_sum);
    }
    return spread;
}

std::vector<Eigen::Vector2d> extract_positions(const ImageFrame& frame, int expected_count) {
    if (expected_count < 1) throw ConfigError("extract_positions: expected_count must be >= 1");
    const double bg = background_level(frame);
    double peak = 0.0;
    for (double p : frame.intensity) peak = std::max(peak, p);
    if (peak <= bg)
        throw CountMismatch("extract_positions: empty frame");
    const double threshold = bg + 0.05 * (peak - bg);

    struct Candidate {
        int row, col;
        double value;
    };
    std::vector<Candidate> candidates;
    for (int row = 1; row + 1 < frame.height; ++row) {
        for (int col = 1; col + 1 < frame.width; ++col) {
            const double v = frame.at(row, col);
            if (v < threshold) continue;
            if (v >= frame.at(row - 1, col) && v >= frame.at(row + 1, col) &&
                v >= frame.at(row, col - 1) && v >= frame.at(row, col + 1) &&
                v > frame.at(row - 1, col - 1) && v > frame.at(row + 1, col + 1))
                candidates.push_back({row, col, v});
        }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

    const double min_sep = 3.0;
    std::vector<Candidate> kept;
    for (const auto& c : candidates) {
        bool clear = true;
        for (const auto& k : kept) {
            const double dr = c.row - k.row, dc = c.col - k.col;
            if (dr * dr + dc * dc < min_sep * min_sep) {
                clear = false;
                break;
            }
        }
        if (clear) kept.push_back(c);
        if (static_cast<int>(kept.size()) == expected_count) break;
    }
    if (static_cast<int>(kept.size()) != expected_count)
        throw CountMismatch("extract_positions: found " + std::to_string(kept.size()) +
                            " peaks, expected " + std::to_string(expected_count));

    // subpixel centroid in a window around each peak
    const int r_win = std::max(3, static_cast<int>(std::ceil(
                                      2.5 * frame.camera.psf_sigma / frame.camera.pixel_size)));
    std::vector<Eigen::Vector2d> positions;
    positions.reserve(expected_count);
    for (const auto& c : kept) {
        double w_sum = 0.0, u_sum = 0.0, v_sum = 0.0;
        for (int row = std::max(0, c.row - r_win); row <= std::min(frame.height - 1, c.row + r_win);
             ++row) {
            for (int col = std::max(0, c.col - r_win);
                 col <= std::min(frame.width - 1, c.col + r_win); ++col) {
                const double w = std::max(0.0, frame.at(row, col) - bg);
                w_sum += w;
                u_sum += w * frame.u_of(col);
                v_sum += w * frame.v_of(row);
            }
        }
        positions.emplace_back(u_sum / w_sum, v_sum / w_sum);
    }
    std::sort(positions.begin(), positions.end(),
              [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() < b.x(); });
    return positions;
}

}  // namespace kinktrap
