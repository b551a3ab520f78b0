#include "mvhand/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvhand {

namespace {

SkeletonDef make_hand21() {
    SkeletonDef s;
    s.joint_names = {"wrist",
                     "thumb_cmc",  "thumb_mcp",  "thumb_ip",   "thumb_tip",
                     "index_mcp",  "index_pip",  "index_dip",  "index_tip",
                     "middle_mcp", "middle_pip", "middle_dip", "middle_tip",
                     "ring_mcp",   "ring_pip",   "ring_dip",   "ring_tip",
                     "little_mcp", "little_pip", "little_dip", "little_tip"};
    int b = 0;
    for (int f = 0; f < kFingerCount; ++f) {
        const int base = 1 + 4 * f;
        s.finger_chains[f] = {base, base + 1, base + 2, base + 3};
        s.bones[b++] = {kWristJoint, base};
        s.bones[b++] = {base, base + 1};
        s.bones[b++] = {base + 1, base + 2};
        s.bones[b++] = {base + 2, base + 3};
    }
    return s;
}

// Rest-pose joint positions in millimeters (flat right hand, palm up).
constexpr double kCanonicalJoints[kJointCount][3] = {
    {0, 0, 0},                                              // wrist
    {32, 25, 0},  {55, 52, 0},  {69, 72, 0},  {79, 87, 0},  // thumb
    {24, 86, 0},  {26, 130, 0}, {27, 157, 0}, {28, 176, 0}, // index
    {2, 89, 0},   {2, 139, 0},  {2, 170, 0},  {2, 190, 0},  // middle
    {-18, 86, 0}, {-20, 131, 0}, {-21, 160, 0}, {-22, 179, 0}, // ring
    {-36, 79, 0}, {-40, 113, 0}, {-42, 134, 0}, {-44, 151, 0}, // little
};

} // namespace

const SkeletonDef& SkeletonDef::hand21() {
    static const SkeletonDef instance = make_hand21();
    return instance;
}

int SkeletonDef::parent_bone(int joint) const {
    for (int b = 0; b < kBoneCount; ++b) {
        if (bones[b].second == joint) return b;
    }
    return -1;
}

void NominalBoneLengths::validate() const {
    for (int b = 0; b < kBoneCount; ++b) {
        if (!(lengths[b] > 0.0) || !std::isfinite(lengths[b])) {
            throw InvalidArgument("nominal bone length " + std::to_string(b) +
                                  " must be strictly positive and finite");
        }
    }
}

HandPose3D::HandPose3D() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    joints.fill(Point3(nan, nan, nan));
    valid.fill(false);
}

int HandPose3D::count_valid() const {
    int n = 0;
    for (bool v : valid) n += v ? 1 : 0;
    return n;
}

HandPose3D HandPose3D::transformed(const Eigen::Matrix3d& r, const Point3& t) const {
    HandPose3D out = *this;
    for (int j = 0; j < kJointCount; ++j) {
        if (valid[j]) out.joints[j] = r * joints[j] + t;
    }
    return out;
}

HandPose3D canonical_hand() {
    HandPose3D pose;
    for (int j = 0; j < kJointCount; ++j) {
        pose.joints[j] = Point3(kCanonicalJoints[j][0], kCanonicalJoints[j][1],
                                kCanonicalJoints[j][2]);
        pose.valid[j] = true;
    }
    return pose;
}

std::array<std::optional<double>, kBoneCount> bone_lengths(const HandPose3D& pose,
                                                           const SkeletonDef& skel) {
    std::array<std::optional<double>, kBoneCount> out;
    for (int b = 0; b < kBoneCount; ++b) {
        const auto [j, k] = skel.bones[b];
        if (pose.valid[j] && pose.valid[k]) {
            out[b] = (pose.joints[j] - pose.joints[k]).norm();
        }
    }
    return out;
}

NominalBoneLengths estimate_nominal_lengths(const std::vector<HandPose3D>& poses,
                                            const SkeletonDef& skel) {
    std::array<std::vector<double>, kBoneCount> samples;
    for (const auto& pose : poses) {
        const auto lengths = bone_lengths(pose, skel);
        for (int b = 0; b < kBoneCount; ++b) {
            if (lengths[b]) samples[b].push_back(*lengths[b]);
        }
    }

    std::vector<int> unobserved;
    for (int b = 0; b < kBoneCount; ++b) {
        if (samples[b].empty()) unobserved.push_back(b);
    }
    if (!unobserved.empty()) {
        std::ostringstream msg;
        msg << "bones never fully observed:";
        for (int b : unobserved) msg << ' ' << b;
        throw UnobservedBone(msg.str());
    }

    NominalBoneLengths nominal;
    for (int b = 0; b < kBoneCount; ++b) {
        auto& v = samples[b];
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        nominal.lengths[b] = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return nominal;
}

} // namespace mvhand
