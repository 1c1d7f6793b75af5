// Synthetic fluorescence frames from trajectories and blur quantification.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kinktrap/dynamics.hpp"

namespace kinktrap {

struct CameraConfig {
    double pixel_size = 0.8e-6;  // m at the object plane
    int width = 0;               // pixels; 0 = auto-size from the trajectory
    int height = 0;
    double exposure = 200e-3;    // s
    double psf_sigma = 1.0e-6;   // m
    double tilt_x = 0.0;         // view-axis tilt about the x axis, rad
    double tilt_y = 0.0;         // about the y axis
    bool weight_by_scattering = true;
};

struct ImageFrame {
    int width = 0;
    int height = 0;
    std::vector<double> intensity;  // row-major, origin top-left
    CameraConfig camera;
    double origin_u = 0.0;  // image-plane coordinate (m) of the left pixel edge
    double origin_v = 0.0;  // of the top pixel edge
    double total_weight = 0.0;
    int n_snapshots = 0;

    double& at(int row, int col) { return intensity[row * width + col]; }
    double at(int row, int col) const { return intensity[row * width + col]; }
    // image-plane coordinates (m) of a pixel center
    double u_of(int col) const { return origin_u + (col + 0.5) * camera.pixel_size; }
    double v_of(int row) const { return origin_v + (row + 0.5) * camera.pixel_size; }
};

// Projects each trajectory snapshot onto the image plane (view along z with
// the configured small tilts) and deposits one Gaussian PSF per ion, weighted
// by the instantaneous scattering rate when a laser is given. Accumulates
// snapshots until the exposure window is filled. Throws ExposureUnderrun when
// the trajectory is shorter than the exposure.
ImageFrame render_frame(const Trajectory& trajectory, const CameraConfig& camera,
                        const UnitScale& scale, const ScaledLaser* laser);

// World (scaled) position -> image plane (m).
Eigen::Vector2d project_position(const Eigen::Vector3d& position, const CameraConfig& camera,
                                 const UnitScale& scale);

// Background-subtracted RMS spread of each ion's spot along the v (radial)
// image axis, within per-ion stripes bounded midway to the axial neighbors.
// `reference` holds the projected spot positions in image-plane meters.
// Throws OverlappingSpots when stripes collide (reported with ion indices).
std::vector<double> blur_metric(const ImageFrame& frame,
                                const std::vector<Eigen::Vector2d>& reference);

// Local-maxima-seeded centroid fits. Returns image-plane positions (m),
// ordered by ascending u. Throws CountMismatch when fewer than
// `expected_count` separated peaks are found.
std::vector<Eigen::Vector2d> extract_positions(const ImageFrame& frame, int expected_count);

}  // namespace kinktrap
