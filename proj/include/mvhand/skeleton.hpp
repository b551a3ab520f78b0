#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvhand/geometry.hpp"

namespace mvhand {

inline constexpr int kJointCount = 21;
inline constexpr int kBoneCount = 20;
inline constexpr int kFingerCount = 5;
inline constexpr int kWristJoint = 0;

/// The 21-joint hand topology. Joint order follows the COCO-WholeBody hand
/// convention: wrist, then thumb/index/middle/ring/little chains of four
/// joints each. Bones form a tree rooted at the wrist; every non-wrist
/// joint is the child of exactly one bone.
struct SkeletonDef {
    std::array<std::string, kJointCount> joint_names;
    std::array<std::pair<int, int>, kBoneCount> bones; // (parent, child)
    std::array<std::array<int, 4>, kFingerCount> finger_chains;

    static const SkeletonDef& hand21();

    /// Index of the bone whose child is `joint`, or -1 for the wrist.
    int parent_bone(int joint) const;
};

/// Per-bone reference lengths, aligned with SkeletonDef::bones.
struct NominalBoneLengths {
    std::array<double, kBoneCount> lengths{};

    /// Throws InvalidArgument unless all lengths are strictly positive and finite.
    void validate() const;
};

/// One hand's 3D joints in world millimeters. Invalid joints carry a NaN
/// sentinel and are excluded from every loss and metric.
struct HandPose3D {
    std::array<Point3, kJointCount> joints;
    std::array<bool, kJointCount> valid;

    HandPose3D();

    int count_valid() const;

    /// Rigidly transformed copy: joints become R * x + t, validity unchanged.
    HandPose3D transformed(const Eigen::Matrix3d& r, const Point3& t) const;
};

/// Fixed rest pose: a flat open right hand, wrist at the origin, fingers
/// along +y, palm normal +z, wrist-to-middle-fingertip span 190 mm. Joint
/// coordinates are documented constants from anthropometric averages.
HandPose3D canonical_hand();

/// Euclidean length per bone; bones with an invalid endpoint yield nullopt.
std::array<std::optional<double>, kBoneCount> bone_lengths(const HandPose3D& pose,
                                                           const SkeletonDef& skel);

/// Per-bone median of the observed lengths across poses. For an even number
/// of observations the median is the mean of the two middle values. Throws
/// UnobservedBone listing any bone never observed with both endpoints valid.
NominalBoneLengths estimate_nominal_lengths(const std::vector<HandPose3D>& poses,
                                            const SkeletonDef& skel);

} // namespace mvhand
