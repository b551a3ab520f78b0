#pragma once

#include <vector>

#include "mvhand/geometry.hpp"
#include "mvhand/observations.hpp"
#include "mvhand/skeleton.hpp"

namespace mvhand {

struct LossWeights {
    double reproj = 1.0;
    double smooth = 20.0;
    double shape = 50.0;
    double biomech = 0.0;
    double bone = 0.0; // only the ground-truth fitter turns this on

    void validate() const; // all finite and non-negative
};

// Per-articulation angle bounds in radians. Flexion angles are measured
// between consecutive bone vectors along each finger chain, three per finger
// (knuckle, middle, distal), ordered finger-major. Abduction is the deviation
// of the finger's splay angle — the angle its metacarpal bone makes with the
// middle finger's — from the rest pose.
struct BiomechLimits {
    std::array<std::pair<double, double>, 3 * kFingerCount> flexion;
    std::array<std::pair<double, double>, kFingerCount> abduction;

    static BiomechLimits defaults();
    void validate() const; // min < max, both within (-pi, pi)
};

using PoseGradient = std::array<Point3, kJointCount>;

struct LossResult {
    double value = 0.0;
    PoseGradient gradient;
    // (view, joint) pairs skipped because the joint sat behind the camera
    int behind_camera = 0;

    LossResult() {
        for (auto& g : gradient) g.setZero();
    }
};

struct MultiPoseLossResult {
    double value = 0.0;
    std::vector<std::vector<PoseGradient>> gradients; // [frame][hand]
};

// Confidence-weighted squared reprojection error summed over views and
// joints. Joints behind a camera are dropped for that view and counted.
LossResult reproj_loss(const HandPose3D& pose, const FrameObservations& obs,
                       const std::vector<CameraParams>& cams);

// Squared displacement of each joint from its previous-frame position. prev
// is a constant; no gradient flows to it.
LossResult smooth_loss(const HandPose3D& pose, const HandPose3D& prev);

// Rotation-invariant shape change between consecutive frames: both poses are
// wrist-centered, the best aligning rotation is solved in closed form, and
// the residual is the squared Frobenius distance. The rotation is held fixed
// for the gradient (envelope theorem); differentiating through the SVD is
// unstable near repeated singular values and buys nothing for descent.
LossResult shape_loss(const HandPose3D& pose, const HandPose3D& prev);

// Orthogonal-Procrustes solve: the rotation minimizing |x * R^T - y|_F over
// SO(3), with the reflection case corrected by flipping the smallest
// singular direction. Rows of x and y are paired points, already centered.
Eigen::Matrix3d procrustes_rotation(const Eigen::MatrixX3d& x,
                                    const Eigen::MatrixX3d& y);

// Squared hinge penalties on flexion and splay angles outside their bounds.
// The hinge is blended quadratic-to-linear over kHingeWidth before squaring
// so the gradient is continuous at the bound.
LossResult biomech_loss(const HandPose3D& pose, const SkeletonDef& skel,
                        const BiomechLimits& limits);

inline constexpr double kHingeWidth = 1e-3; // radians

// Mean squared deviation of every bone length from its nominal value across
// all frames and hands: sum of (|X_j - X_k| - l_hat)^2 over frames, hands,
// and bones, divided by (total hand instances * bone count). Bones with an
// invalid endpoint are skipped; the normalizer is unaffected.
MultiPoseLossResult bone_loss(const std::vector<std::vector<HandPose3D>>& poses,
                              const NominalBoneLengths& nominal,
                              const SkeletonDef& skel);

// Weighted sum of the enabled terms for one frame of one hand. Terms with
// weight zero are never evaluated, so their preconditions don't apply. prev
// may be null when smooth and shape are disabled; nominal may be null when
// bone is disabled.
LossResult total_loss(const HandPose3D& pose, const HandPose3D* prev,
                      const FrameObservations& obs,
                      const std::vector<CameraParams>& cams,
                      const LossWeights& weights, const SkeletonDef& skel,
                      const BiomechLimits& limits,
                      const NominalBoneLengths* nominal = nullptr);

} // namespace mvhand
