#include "mvhand/synth.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "mvhand/random.hpp"

namespace mvhand {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct Sinusoid {
    double amplitude = 0.0;
    double period = 1.0;
    double phase = 0.0;

    double at(double t) const { return amplitude * std::sin(kTwoPi * t / period + phase); }
    // Shifted to [0, amplitude] for articulation angles.
    double positive_at(double t) const {
        return amplitude * (0.5 + 0.5 * std::sin(kTwoPi * t / period + phase));
    }
};

Sinusoid sample_sinusoid(rng::Engine& g, std::pair<double, double> amp,
                         std::pair<double, double> period) {
    Sinusoid s;
    s.amplitude = rng::uniform(g, amp.first, amp.second);
    s.period = rng::uniform(g, period.first, period.second);
    s.phase = rng::uniform(g, 0.0, kTwoPi);
    return s;
}

void check_range(std::pair<double, double> r, double lo_min, const char* what) {
    if (!std::isfinite(r.first) || !std::isfinite(r.second) || r.first > r.second ||
        r.first < lo_min) {
        throw InvalidSpec(std::string(what) + " range is malformed");
    }
}

} // namespace

void RigSpec::validate() const {
    if (n_cameras < 2) throw InvalidSpec("a rig needs at least two cameras");
    if (!(radius_mm > 0.0)) throw InvalidSpec("ring radius must be positive");
    if (!std::isfinite(height_mm)) throw InvalidSpec("ring height must be finite");
    if (!look_at.allFinite()) throw InvalidSpec("look-at point must be finite");
    if (!(focal_px > 0.0)) throw InvalidSpec("focal length must be positive");
    if (image_width <= 0 || image_height <= 0) {
        throw InvalidSpec("image size must be positive");
    }
}

std::vector<CameraParams> generate_rig(const RigSpec& spec) {
    spec.validate();

    std::vector<CameraParams> rig;
    rig.reserve(spec.n_cameras);
    for (int i = 0; i < spec.n_cameras; ++i) {
        const double phi = kTwoPi * i / spec.n_cameras;
        const Point3 center = spec.look_at + Point3(spec.radius_mm * std::cos(phi),
                                                    spec.radius_mm * std::sin(phi),
                                                    spec.height_mm);

        const Point3 forward = (spec.look_at - center).normalized();
        Point3 right = forward.cross(Point3::UnitZ());
        if (right.norm() < 1e-12) {
            throw InvalidSpec("camera looks straight along the vertical axis");
        }
        right.normalize();
        const Point3 down = forward.cross(right);

        CameraParams cam;
        cam.id = "cam" + std::to_string(i);
        cam.rotation.row(0) = right.transpose();
        cam.rotation.row(1) = down.transpose();
        cam.rotation.row(2) = forward.transpose();
        cam.translation = -cam.rotation * center;
        cam.intrinsics << spec.focal_px, 0.0, 0.5 * spec.image_width,
            0.0, spec.focal_px, 0.5 * spec.image_height,
            0.0, 0.0, 1.0;
        cam.width = spec.image_width;
        cam.height = spec.image_height;
        cam.validate();
        rig.push_back(cam);
    }
    return rig;
}

void MotionSpec::validate() const {
    check_range(base_offset_mm, -1e6, "base offset");
    check_range(translation_amp_mm, 0.0, "translation amplitude");
    check_range(translation_period, 1.0, "translation period");
    check_range(rotation_amp_rad, 0.0, "rotation amplitude");
    check_range(rotation_period, 1.0, "rotation period");
    for (const auto& r : flexion_amp_rad) check_range(r, 0.0, "flexion amplitude");
    check_range(flexion_period, 1.0, "flexion period");
}

std::vector<HandPose3D> generate_motion(int frames, const SkeletonDef& skel,
                                        std::uint64_t seed,
                                        const MotionSpec& motion) {
    if (frames < 1) throw InvalidArgument("frame count must be >= 1");
    motion.validate();

    rng::Engine g(seed);

    // Rigid trajectory: per-axis sinusoidal translation around a seeded base
    // point plus a sinusoidal rotation about a fixed random axis.
    Point3 base;
    for (int k = 0; k < 3; ++k) {
        base[k] = rng::uniform(g, motion.base_offset_mm.first,
                               motion.base_offset_mm.second);
    }
    Sinusoid trans[3];
    for (auto& s : trans) {
        s = sample_sinusoid(g, motion.translation_amp_mm, motion.translation_period);
    }

    Point3 rot_axis;
    do {
        for (int k = 0; k < 3; ++k) rot_axis[k] = rng::gaussian(g);
    } while (rot_axis.norm() < 1e-6);
    rot_axis.normalize();
    const Sinusoid rot =
        sample_sinusoid(g, motion.rotation_amp_rad, motion.rotation_period);

    // One hinge sinusoid per articulation, proximal joints swinging widest.
    Sinusoid flex[kFingerCount][3];
    for (int f = 0; f < kFingerCount; ++f) {
        for (int a = 0; a < 3; ++a) {
            flex[f][a] =
                sample_sinusoid(g, motion.flexion_amp_rad[a], motion.flexion_period);
        }
    }

    const HandPose3D rest = canonical_hand();

    // Rest-pose hinge axis per finger: perpendicular to the metacarpal in
    // the palm plane, shared by all three articulations of that finger.
    Point3 rest_axis[kFingerCount];
    for (int f = 0; f < kFingerCount; ++f) {
        const Point3 meta =
            rest.joints[skel.finger_chains[f][0]] - rest.joints[kWristJoint];
        rest_axis[f] = meta.cross(Point3::UnitZ()).normalized();
    }

    std::vector<HandPose3D> traj;
    traj.reserve(frames);
    for (int t = 0; t < frames; ++t) {
        HandPose3D local = rest;
        for (int f = 0; f < kFingerCount; ++f) {
            const auto& chain = skel.finger_chains[f];
            Eigen::Matrix3d carried = Eigen::Matrix3d::Identity();
            for (int a = 0; a < 3; ++a) {
                const Point3 axis = carried * rest_axis[f];
                const Eigen::Matrix3d r =
                    Eigen::AngleAxisd(flex[f][a].positive_at(t), axis).toRotationMatrix();
                const Point3 pivot = local.joints[chain[a]];
                for (int k = a + 1; k < 4; ++k) {
                    local.joints[chain[k]] = pivot + r * (local.joints[chain[k]] - pivot);
                }
                carried = r * carried;
            }
        }

        const Eigen::Matrix3d rt =
            Eigen::AngleAxisd(rot.at(t), rot_axis).toRotationMatrix();
        Point3 tt = base;
        for (int k = 0; k < 3; ++k) tt[k] += trans[k].at(t);
        traj.push_back(local.transformed(rt, tt));
    }
    return traj;
}

void NoiseSpec::validate() const {
    if (!(pixel_sigma >= 0.0) || !std::isfinite(pixel_sigma)) {
        throw InvalidSpec("pixel sigma must be finite and non-negative");
    }
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
        throw InvalidSpec("dropout probability must lie in [0, 1]");
    }
}

double confidence_from_error(double err_px, double sigma) {
    const double scale = 3.0 * sigma + 1e-6;
    const double c = std::exp(-err_px * err_px / (2.0 * scale * scale));
    return std::clamp(c, 0.05, 1.0);
}

std::vector<FrameObservations> render_observations(
    const std::vector<HandPose3D>& traj, const std::vector<CameraParams>& rig,
    const NoiseSpec& noise) {
    noise.validate();
    for (const auto& cam : rig) cam.validate();

    rng::Engine g(noise.seed);
    std::vector<FrameObservations> out;
    out.reserve(traj.size());

    for (const auto& pose : traj) {
        FrameObservations frame;
        frame.reserve(rig.size());
        for (const auto& cam : rig) {
            HandObservation2D obs;
            obs.hand_id = 0;
            obs.handedness = Handedness::Right;
            for (int j = 0; j < kJointCount; ++j) {
                // Fixed three draws per slot keeps the stream aligned no
                // matter how the slot turns out.
                const double n1 = rng::gaussian(g);
                const double n2 = rng::gaussian(g);
                const double u = rng::uniform_unit(g);

                Keypoint2D& kp = obs.keypoints[j];
                if (!pose.valid[j] || u < noise.dropout_prob) continue;
                const Point3 in_cam = cam.camera_frame(pose.joints[j]);
                if (in_cam.z() <= kMinDepthMm) continue;

                const Point2 exact = project(pose.joints[j], cam);
                const Point2 err(noise.pixel_sigma * n1, noise.pixel_sigma * n2);
                kp.position = exact + err;
                kp.confidence = confidence_from_error(err.norm(), noise.pixel_sigma);
            }
            frame.push_back(obs);
        }
        out.push_back(std::move(frame));
    }
    return out;
}

} // namespace mvhand
