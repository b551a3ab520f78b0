#pragma once

#include <cstdint>
#include <vector>

#include "mvhand/observations.hpp"
#include "mvhand/skeleton.hpp"

namespace mvhand {

// Camera ring for synthetic scenes: n cameras evenly spaced on a circle of
// the given radius, elevated by height_mm, all aimed at look_at. Defaults
// model a close-range capture rig with a long lens, the regime the default
// loss weights are balanced for.
struct RigSpec {
    int n_cameras = 4;
    double radius_mm = 800.0;
    double height_mm = 300.0;
    Point3 look_at = Point3::Zero();
    double focal_px = 2200.0;
    int image_width = 1920;
    int image_height = 1080;

    void validate() const; // throws InvalidSpec
};

// Sampling ranges for the seeded motion model: per-axis sinusoidal
// translation, sinusoidal rotation about a fixed axis, and one positive
// flexion sinusoid per articulation (proximal, middle, distal). Periods are
// in frames; defaults give the slow, deliberate motion of fine manipulation
// at 30 fps.
struct MotionSpec {
    std::pair<double, double> base_offset_mm = {-50.0, 50.0};
    std::pair<double, double> translation_amp_mm = {15.0, 40.0};
    std::pair<double, double> translation_period = {500.0, 900.0};
    std::pair<double, double> rotation_amp_rad = {0.08, 0.2};
    std::pair<double, double> rotation_period = {600.0, 1000.0};
    std::array<std::pair<double, double>, 3> flexion_amp_rad = {
        {{0.15, 0.35}, {0.10, 0.30}, {0.08, 0.20}}};
    std::pair<double, double> flexion_period = {450.0, 800.0};

    void validate() const; // throws InvalidSpec
};

struct NoiseSpec {
    double pixel_sigma = 0.0;
    double dropout_prob = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

std::vector<CameraParams> generate_rig(const RigSpec& spec);

// Smooth seeded hand motion: a sinusoidal rigid trajectory of the rest pose
// composed with bounded per-articulation hinge flexion. Every transform is
// rigid about a joint pivot, so bone lengths never change.
std::vector<HandPose3D> generate_motion(int frames, const SkeletonDef& skel,
                                        std::uint64_t seed,
                                        const MotionSpec& motion = {});

// The confidence a rendered keypoint gets for a given true pixel error:
// exp(-err^2 / (2 (3 sigma + 1e-6)^2)), clipped to [0.05, 1].
double confidence_from_error(double err_px, double sigma);

// Project the trajectory into every camera, perturb with isotropic Gaussian
// pixel noise, drop keypoints at the given rate, and emit confidences from
// the model above. The random stream advances identically for every
// (frame, view, joint) regardless of outcome, so scenes with the same seed
// are bit-identical even across geometry changes.
std::vector<FrameObservations> render_observations(
    const std::vector<HandPose3D>& traj, const std::vector<CameraParams>& rig,
    const NoiseSpec& noise);

} // namespace mvhand
