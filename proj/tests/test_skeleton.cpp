#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mvhand/random.hpp"
#include "mvhand/skeleton.hpp"
#include "util.hpp"

using namespace mvhand;

namespace {

// Pose whose every bone has exactly the given length: children are placed by
// walking the bone list from the wrist along distinct directions.
HandPose3D uniform_length_pose(double length) {
    const SkeletonDef& skel = SkeletonDef::hand21();
    HandPose3D pose;
    pose.joints[kWristJoint].setZero();
    pose.valid[kWristJoint] = true;
    bool progress = true;
    while (progress) {
        progress = false;
        for (size_t b = 0; b < skel.bones.size(); ++b) {
            const auto [parent, child] = skel.bones[b];
            if (!pose.valid[parent] || pose.valid[child]) continue;
            const double a = 0.7 * static_cast<double>(b);
            const Point3 dir =
                Point3(std::cos(a), std::sin(a), 0.4 * std::sin(2.0 * a)).normalized();
            pose.joints[child] = pose.joints[parent] + length * dir;
            pose.valid[child] = true;
            progress = true;
        }
    }
    return pose;
}

} // namespace

TEST_SUITE("skeleton") {

TEST_CASE("hand topology is a 21-joint tree") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    CHECK(skel.joint_names.size() == 21);
    CHECK(skel.bones.size() == 20);

    std::array<int, kJointCount> child_count{};
    for (const auto& [parent, child] : skel.bones) {
        CHECK(parent >= 0);
        CHECK(parent < kJointCount);
        CHECK(child > 0); // the wrist is never a child
        CHECK(child < kJointCount);
        ++child_count[child];
    }
    CHECK(child_count[kWristJoint] == 0);
    for (int j = 1; j < kJointCount; ++j) CHECK(child_count[j] == 1);

    // Connected: walking parent links from any joint reaches the wrist.
    for (int j = 1; j < kJointCount; ++j) {
        int cur = j;
        int hops = 0;
        while (cur != kWristJoint && hops <= kJointCount) {
            const int b = skel.parent_bone(cur);
            REQUIRE(b >= 0);
            cur = skel.bones[b].first;
            ++hops;
        }
        CHECK(cur == kWristJoint);
    }
    CHECK(skel.parent_bone(kWristJoint) == -1);

    for (const auto& chain : skel.finger_chains) {
        for (int j : chain) {
            CHECK(j > 0);
            CHECK(j < kJointCount);
        }
    }
}

TEST_CASE("rest pose is a full-size flat hand at the origin") {
    const HandPose3D hand = canonical_hand();
    CHECK(hand.count_valid() == 21);
    CHECK(hand.joints[kWristJoint].norm() == 0.0);

    const auto lengths = bone_lengths(hand, SkeletonDef::hand21());
    for (const auto& l : lengths) {
        REQUIRE(l.has_value());
        CHECK(*l > 0.0);
    }

    // Wrist to middle fingertip spans about 190 mm.
    const int tip = SkeletonDef::hand21().finger_chains[2][3];
    CHECK(hand.joints[tip].norm() == doctest::Approx(190.0).epsilon(0.05));
}

TEST_CASE("bone lengths are rigid invariants and scale linearly") {
    rng::Engine g(5);
    const SkeletonDef& skel = SkeletonDef::hand21();
    const HandPose3D pose = testutil::jittered_hand(g, 2.0);
    const auto base = bone_lengths(pose, skel);

    const HandPose3D moved =
        pose.transformed(testutil::random_rotation(g), testutil::random_point(g, 300.0));
    const auto after = bone_lengths(moved, skel);
    for (size_t b = 0; b < base.size(); ++b) {
        CHECK(std::abs(*after[b] - *base[b]) <= 1e-9);
    }

    HandPose3D doubled = pose;
    for (auto& p : doubled.joints) p *= 2.0;
    const auto scaled = bone_lengths(doubled, skel);
    for (size_t b = 0; b < base.size(); ++b) {
        CHECK(std::abs(*scaled[b] - 2.0 * *base[b]) <= 1e-9);
    }
}

TEST_CASE("bones missing an endpoint report no length") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    HandPose3D pose = canonical_hand();
    const auto [parent, child] = skel.bones[6];
    pose.valid[child] = false;
    const auto lengths = bone_lengths(pose, skel);
    CHECK(!lengths[6].has_value());
    CHECK(lengths[0].has_value());
    (void)parent;
}

TEST_CASE("identical poses estimate their own lengths") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const std::vector<HandPose3D> poses(4, canonical_hand());
    const NominalBoneLengths nominal = estimate_nominal_lengths(poses, skel);
    const auto expect = bone_lengths(canonical_hand(), skel);
    for (int b = 0; b < kBoneCount; ++b) {
        CHECK(nominal.lengths[b] == doctest::Approx(*expect[b]).epsilon(1e-12));
    }
}

TEST_CASE("median picks the middle observation") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const std::vector<HandPose3D> odd = {uniform_length_pose(9.0), uniform_length_pose(10.0),
                                         uniform_length_pose(11.0)};
    const NominalBoneLengths mid = estimate_nominal_lengths(odd, skel);
    for (int b = 0; b < kBoneCount; ++b) {
        CHECK(mid.lengths[b] == doctest::Approx(10.0).epsilon(1e-12));
    }

    // Even count averages the two middle values.
    const std::vector<HandPose3D> even = {uniform_length_pose(9.0), uniform_length_pose(10.0),
                                          uniform_length_pose(11.0), uniform_length_pose(20.0)};
    const NominalBoneLengths half = estimate_nominal_lengths(even, skel);
    for (int b = 0; b < kBoneCount; ++b) {
        CHECK(half.lengths[b] == doctest::Approx(10.5).epsilon(1e-12));
    }
}

TEST_CASE("noisy medians match a sort-and-pick oracle and stay near truth") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    rng::Engine g(41);
    std::vector<HandPose3D> poses;
    for (int i = 0; i < 100; ++i) poses.push_back(testutil::jittered_hand(g, 1.0));

    const NominalBoneLengths nominal = estimate_nominal_lengths(poses, skel);

    const auto truth = bone_lengths(canonical_hand(), skel);
    for (int b = 0; b < kBoneCount; ++b) {
        std::vector<double> seen;
        for (const auto& pose : poses) {
            const auto [parent, child] = skel.bones[b];
            seen.push_back((pose.joints[child] - pose.joints[parent]).norm());
        }
        std::sort(seen.begin(), seen.end());
        const double med = 0.5 * (seen[49] + seen[50]);
        CHECK(nominal.lengths[b] == doctest::Approx(med).epsilon(1e-12));
        CHECK(std::abs(nominal.lengths[b] - *truth[b]) <= 1.0);
    }
}

TEST_CASE("estimation ignores pose order") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    rng::Engine g(43);
    std::vector<HandPose3D> poses;
    for (int i = 0; i < 11; ++i) poses.push_back(testutil::jittered_hand(g, 1.5));

    const NominalBoneLengths a = estimate_nominal_lengths(poses, skel);
    std::reverse(poses.begin(), poses.end());
    std::rotate(poses.begin(), poses.begin() + 3, poses.end());
    const NominalBoneLengths b = estimate_nominal_lengths(poses, skel);
    for (int k = 0; k < kBoneCount; ++k) CHECK(a.lengths[k] == b.lengths[k]);
}

TEST_CASE("a bone never observed is an error") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    std::vector<HandPose3D> poses(3, canonical_hand());
    const int child = skel.bones[4].second;
    for (auto& pose : poses) pose.valid[child] = false;
    CHECK_THROWS_AS(estimate_nominal_lengths(poses, skel), UnobservedBone);
    CHECK_THROWS_AS(estimate_nominal_lengths({}, skel), UnobservedBone);
}

TEST_CASE("nominal lengths must be positive and finite") {
    NominalBoneLengths ok;
    ok.lengths.fill(25.0);
    CHECK_NOTHROW(ok.validate());

    NominalBoneLengths zero = ok;
    zero.lengths[3] = 0.0;
    CHECK_THROWS_AS(zero.validate(), InvalidArgument);

    NominalBoneLengths inf = ok;
    inf.lengths[7] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(inf.validate(), InvalidArgument);
}

TEST_CASE("default pose starts fully invalid") {
    const HandPose3D pose;
    CHECK(pose.count_valid() == 0);

    HandPose3D one;
    one.joints[4] = {1.0, 2.0, 3.0};
    one.valid[4] = true;
    const HandPose3D moved = one.transformed(Eigen::Matrix3d::Identity(), {1.0, 0.0, 0.0});
    CHECK(moved.count_valid() == 1);
    CHECK(moved.joints[4].x() == doctest::Approx(2.0));
}

} // TEST_SUITE
