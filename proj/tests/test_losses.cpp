#include "doctest.h"

#include <cmath>

#include <Eigen/Geometry>

#include "mvhand/losses.hpp"
#include "mvhand/random.hpp"
#include "mvhand/synth.hpp"
#include "oracles.hpp"
#include "util.hpp"

using namespace mvhand;

namespace {

Eigen::VectorXd flatten(const HandPose3D& pose) {
    Eigen::VectorXd x(3 * kJointCount);
    for (int j = 0; j < kJointCount; ++j) x.segment<3>(3 * j) = pose.joints[j];
    return x;
}

HandPose3D unflatten(const Eigen::VectorXd& x, const HandPose3D& like) {
    HandPose3D pose = like;
    for (int j = 0; j < kJointCount; ++j) pose.joints[j] = x.segment<3>(3 * j);
    return pose;
}

Eigen::VectorXd flatten_grad(const PoseGradient& g) {
    Eigen::VectorXd x(3 * kJointCount);
    for (int j = 0; j < kJointCount; ++j) x.segment<3>(3 * j) = g[j];
    return x;
}

double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-12);
}

// Observations of a pose with hand-picked confidences and a pixel offset.
FrameObservations observe(const HandPose3D& pose, const std::vector<CameraParams>& cams,
                          rng::Engine& g, double offset_px) {
    FrameObservations obs(cams.size());
    for (size_t v = 0; v < cams.size(); ++v) {
        HandObservation2D ho;
        for (int j = 0; j < kJointCount; ++j) {
            ho.keypoints[j].position =
                project(pose.joints[j], cams[v]) +
                Point2(offset_px * rng::gaussian(g), offset_px * rng::gaussian(g));
            ho.keypoints[j].confidence = rng::uniform(g, 0.2, 1.0);
        }
        obs[v] = ho;
    }
    return obs;
}

Eigen::MatrixX3d stack(const std::vector<Point3>& rows) {
    Eigen::MatrixX3d m(rows.size(), 3);
    for (size_t i = 0; i < rows.size(); ++i) m.row(i) = rows[i].transpose();
    return m;
}

// Rotate every joint of one finger chain rigidly about the wrist in the palm
// plane (z axis); flexion angles are untouched, only the splay moves.
HandPose3D splay_finger(const HandPose3D& pose, int finger, double angle) {
    const SkeletonDef& skel = SkeletonDef::hand21();
    HandPose3D out = pose;
    const Eigen::Matrix3d r =
        Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    for (int j : skel.finger_chains[finger]) {
        out.joints[j] = r * (pose.joints[j] - pose.joints[kWristJoint]) +
                        pose.joints[kWristJoint];
    }
    return out;
}

} // namespace

TEST_SUITE("losses") {

TEST_CASE("perfect reprojection scores zero") {
    RigSpec spec;
    const auto rig = generate_rig(spec);
    rng::Engine g(2);
    const HandPose3D pose = testutil::jittered_hand(g, 1.0);
    const FrameObservations obs = observe(pose, rig, g, 0.0);

    const LossResult r = reproj_loss(pose, obs, rig);
    CHECK(r.value <= 1e-18);
    CHECK(flatten_grad(r.gradient).norm() <= 1e-9);
    CHECK(r.behind_camera == 0);
}

TEST_CASE("a lone 3 px offset at half confidence costs 4.5") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    HandPose3D pose;
    pose.joints[5] = {10.0, 20.0, 800.0};
    pose.valid[5] = true;

    HandObservation2D ho;
    ho.keypoints[5].position = project(pose.joints[5], cam) + Point2(3.0, 0.0);
    ho.keypoints[5].confidence = 0.5;
    FrameObservations obs = {ho};

    const LossResult r = reproj_loss(pose, obs, {cam});
    CHECK(r.value == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("joints behind a camera are dropped and counted") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    HandPose3D pose;
    pose.joints[3] = {0.0, 0.0, -500.0}; // behind
    pose.valid[3] = true;
    pose.joints[4] = {0.0, 0.0, 500.0};
    pose.valid[4] = true;

    HandObservation2D ho;
    ho.keypoints[3].position = {100.0, 100.0};
    ho.keypoints[3].confidence = 1.0;
    ho.keypoints[4].position = project(pose.joints[4], cam) + Point2(1.0, 0.0);
    ho.keypoints[4].confidence = 1.0;
    FrameObservations obs = {ho};

    const LossResult r = reproj_loss(pose, obs, {cam});
    CHECK(r.behind_camera == 1);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reprojection gradient matches central differences") {
    RigSpec spec;
    const auto rig = generate_rig(spec);
    rng::Engine g(3);
    for (int trial = 0; trial < 10; ++trial) {
        const HandPose3D pose = testutil::jittered_hand(g, 4.0);
        const FrameObservations obs = observe(pose, rig, g, 3.0);

        const LossResult r = reproj_loss(pose, obs, rig);
        const auto f = [&](const Eigen::VectorXd& x) {
            return reproj_loss(unflatten(x, pose), obs, rig).value;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(pose), 1e-4);
        CHECK(rel_err(flatten_grad(r.gradient), fd) < 1e-5);
    }
}

TEST_CASE("temporal displacement is the plain squared norm") {
    rng::Engine g(5);
    const HandPose3D pose = testutil::jittered_hand(g, 2.0);
    CHECK(smooth_loss(pose, pose).value == 0.0);

    HandPose3D moved = pose;
    moved.joints[9] += Point3(1.0, 2.0, 2.0);
    const LossResult r = smooth_loss(moved, pose);
    CHECK(r.value == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(r.gradient[9].isApprox(Point3(2.0, 4.0, 4.0), 1e-12));

    // Joints invalid on either side do not participate.
    HandPose3D gap = moved;
    gap.valid[9] = false;
    CHECK(smooth_loss(gap, pose).value == 0.0);
}

TEST_CASE("smoothness gradient matches central differences") {
    rng::Engine g(7);
    for (int trial = 0; trial < 10; ++trial) {
        const HandPose3D prev = testutil::jittered_hand(g, 3.0);
        const HandPose3D pose = testutil::jittered_hand(g, 3.0);
        const LossResult r = smooth_loss(pose, prev);
        const auto f = [&](const Eigen::VectorXd& x) {
            return smooth_loss(unflatten(x, pose), prev).value;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(pose), 1e-4);
        CHECK(rel_err(flatten_grad(r.gradient), fd) < 1e-6);
    }
}

TEST_CASE("horn oracle reproduces a known rotation") {
    rng::Engine g(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Matrix3d want = testutil::random_rotation(g);
        Eigen::MatrixX3d x(8, 3);
        for (int i = 0; i < 8; ++i) x.row(i) = testutil::random_point(g, 50.0).transpose();
        const Eigen::MatrixX3d y = x * want.transpose();
        const Eigen::Matrix3d got = oracle::procrustes_horn(x, y);
        CHECK((got - want).norm() <= 1e-9);
    }
}

TEST_CASE("procrustes solve agrees with the quaternion method") {
    rng::Engine g(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + trial % 5;
        Eigen::MatrixX3d x(n, 3), y(n, 3);
        for (int i = 0; i < n; ++i) {
            x.row(i) = testutil::random_point(g, 40.0).transpose();
            y.row(i) = testutil::random_point(g, 40.0).transpose();
        }
        x.rowwise() -= x.colwise().mean();
        y.rowwise() -= y.colwise().mean();

        const Eigen::Matrix3d r = procrustes_rotation(x, y);
        CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-9);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((r - oracle::procrustes_horn(x, y)).norm() <= 1e-7);
    }
}

TEST_CASE("reflection-shaped data still yields a proper rotation") {
    rng::Engine g(13);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixX3d x(6, 3);
        for (int i = 0; i < 6; ++i) {
            // Nearly planar cloud: reflections become competitive.
            x.row(i) = Eigen::RowVector3d(rng::uniform(g, -40.0, 40.0),
                                          rng::uniform(g, -40.0, 40.0),
                                          rng::uniform(g, -0.01, 0.01));
        }
        Eigen::MatrixX3d y = x;
        y.col(2) = -y.col(2); // mirror across the plane
        x.rowwise() -= x.colwise().mean();
        y.rowwise() -= y.colwise().mean();

        const Eigen::Matrix3d r = procrustes_rotation(x, y);
        CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() <= 1e-9);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK((r - oracle::procrustes_horn(x, y)).norm() <= 1e-7);
    }
}

TEST_CASE("rigid motion between frames costs no shape change") {
    rng::Engine g(15);
    for (int trial = 0; trial < 20; ++trial) {
        const HandPose3D pose = testutil::jittered_hand(g, 3.0);
        const HandPose3D moved =
            pose.transformed(testutil::random_rotation(g), testutil::random_point(g, 200.0));
        CHECK(shape_loss(pose, moved).value <= 1e-9);
        CHECK(shape_loss(moved, pose).value <= 1e-9);
    }
    const HandPose3D pose = canonical_hand();
    CHECK(shape_loss(pose, pose).value == 0.0);
}

TEST_CASE("scaling about the wrist matches the alignment oracle") {
    const HandPose3D pose = canonical_hand();
    HandPose3D scaled = pose;
    for (int j = 0; j < kJointCount; ++j) scaled.joints[j] = 1.1 * pose.joints[j];

    const double got = shape_loss(scaled, pose).value;
    CHECK(got > 0.0);

    // Longhand: wrist-center both clouds, align with the quaternion oracle,
    // take the squared Frobenius residual.
    std::vector<Point3> xs, ys;
    for (int j = 0; j < kJointCount; ++j) {
        xs.push_back(scaled.joints[j] - scaled.joints[kWristJoint]);
        ys.push_back(pose.joints[j] - pose.joints[kWristJoint]);
    }
    const Eigen::MatrixX3d x = stack(xs), y = stack(ys);
    const Eigen::Matrix3d r = oracle::procrustes_horn(x, y);
    const double want = (x * r.transpose() - y).squaredNorm();
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("too few or collinear shared joints are degenerate") {
    HandPose3D a, b;
    for (int j = 0; j < 3; ++j) {
        a.joints[j] = {10.0 * j, 0.0, 0.0};
        a.valid[j] = true;
        b.joints[j] = {0.0, 10.0 * j, 0.0};
        b.valid[j] = true;
    }
    // Wrist plus two more joints, but all collinear.
    CHECK_THROWS_AS(shape_loss(a, b), DegenerateShape);

    HandPose3D c = canonical_hand(), d = canonical_hand();
    for (int j = 2; j < kJointCount; ++j) c.valid[j] = false;
    CHECK_THROWS_AS(shape_loss(c, d), DegenerateShape);
}

TEST_CASE("shape gradient matches differences of the fixed-rotation objective") {
    rng::Engine g(17);
    for (int trial = 0; trial < 10; ++trial) {
        const HandPose3D prev = testutil::jittered_hand(g, 3.0);
        const HandPose3D pose = testutil::jittered_hand(g, 3.0);
        const LossResult r = shape_loss(pose, prev);

        // Freeze the rotation at the base point, then vary the pose.
        std::vector<Point3> xs, ys;
        for (int j = 0; j < kJointCount; ++j) {
            xs.push_back(pose.joints[j] - pose.joints[kWristJoint]);
            ys.push_back(prev.joints[j] - prev.joints[kWristJoint]);
        }
        const Eigen::Matrix3d rot = oracle::procrustes_horn(stack(xs), stack(ys));
        const auto f = [&](const Eigen::VectorXd& v) {
            const HandPose3D p = unflatten(v, pose);
            double acc = 0.0;
            for (int j = 0; j < kJointCount; ++j) {
                const Point3 cx = p.joints[j] - p.joints[kWristJoint];
                const Point3 cy = prev.joints[j] - prev.joints[kWristJoint];
                acc += (rot * cx - cy).squaredNorm();
            }
            return acc;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(pose), 1e-4);
        CHECK(rel_err(flatten_grad(r.gradient), fd) < 1e-4);
    }
}

TEST_CASE("rest pose satisfies the default angle limits") {
    const LossResult r =
        biomech_loss(canonical_hand(), SkeletonDef::hand21(), BiomechLimits::defaults());
    CHECK(r.value == 0.0);
    CHECK(flatten_grad(r.gradient).norm() == 0.0);
}

TEST_CASE("default limits match the documented table") {
    const BiomechLimits lim = BiomechLimits::defaults();
    const double deg = M_PI / 180.0;
    for (int f = 0; f < kFingerCount; ++f) {
        CHECK(lim.flexion[3 * f + 0].second == doctest::Approx(110.0 * deg));
        CHECK(lim.flexion[3 * f + 1].second == doctest::Approx(90.0 * deg));
        CHECK(lim.flexion[3 * f + 2].second == doctest::Approx(80.0 * deg));
        for (int a = 0; a < 3; ++a) CHECK(lim.flexion[3 * f + a].first == 0.0);
        CHECK(lim.abduction[f].first == doctest::Approx(-25.0 * deg));
        CHECK(lim.abduction[f].second == doctest::Approx(25.0 * deg));
    }
    CHECK_NOTHROW(lim.validate());

    BiomechLimits bad = lim;
    bad.flexion[2] = {0.5, 0.5};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = lim;
    bad.abduction[1] = {-4.0, 0.4};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("an over-bent fingertip is penalized and pushed back") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    HandPose3D pose = canonical_hand();

    // Bend the index distal articulation to 110 degrees, 30 past its bound.
    const auto& chain = skel.finger_chains[1];
    const int mid = chain[2], tip = chain[3];
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(110.0 * M_PI / 180.0, Eigen::Vector3d::UnitX()).toRotationMatrix();
    pose.joints[tip] = pose.joints[mid] + rot * (pose.joints[tip] - pose.joints[mid]);

    const LossResult r = biomech_loss(pose, skel, limits);
    CHECK(r.value > 0.0);

    // A small step against the gradient must lower the penalty.
    HandPose3D stepped = pose;
    const Eigen::VectorXd g = flatten_grad(r.gradient);
    REQUIRE(g.norm() > 0.0);
    const Eigen::VectorXd x = flatten(pose) - (1e-3 / g.norm()) * g;
    stepped = unflatten(x, pose);
    CHECK(biomech_loss(stepped, skel, limits).value < r.value);
}

TEST_CASE("splaying a finger past its bound is penalized") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    const HandPose3D pose = canonical_hand();
    // The splay deviation is measured against the middle finger, so rotate
    // the index away from it (clockwise in the palm plane) to widen the gap.
    CHECK(biomech_loss(splay_finger(pose, 1, -30.0 * M_PI / 180.0), skel, limits).value >
          0.0);
    CHECK(biomech_loss(splay_finger(pose, 1, -10.0 * M_PI / 180.0), skel, limits).value ==
          0.0);
}

TEST_CASE("the middle finger sets the splay reference and is never scored") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    BiomechLimits limits = BiomechLimits::defaults();
    // Give every finger generous bounds except a middle-finger abduction
    // band so tight that any scoring of it would fire.
    for (auto& f : limits.flexion) f = {-3.0, 3.0};
    for (auto& a : limits.abduction) a = {-3.0, 3.0};
    limits.abduction[2] = {-1e-9, 1e-9};

    const HandPose3D pose = canonical_hand();
    const HandPose3D swung = splay_finger(pose, 2, 20.0 * M_PI / 180.0);
    CHECK(biomech_loss(swung, skel, limits).value == 0.0);
}

TEST_CASE("coincident joints make the angle undefined") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    HandPose3D pose = canonical_hand();
    const auto& chain = skel.finger_chains[0];
    pose.joints[chain[1]] = pose.joints[chain[0]];
    CHECK_THROWS_AS(biomech_loss(pose, skel, BiomechLimits::defaults()), ZeroLengthBone);
}

TEST_CASE("biomech gradient matches central differences") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    rng::Engine g(19);
    int active = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const HandPose3D pose = testutil::jittered_hand(g, 6.0);
        const LossResult r = biomech_loss(pose, skel, limits);
        if (r.value > 1e-9) ++active;
        const auto f = [&](const Eigen::VectorXd& x) {
            return biomech_loss(unflatten(x, pose), skel, limits).value;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(pose), 1e-5);
        if (fd.norm() < 1e-12) {
            CHECK(flatten_grad(r.gradient).norm() < 1e-12);
        } else {
            CHECK(rel_err(flatten_grad(r.gradient), fd) < 1e-4);
        }
    }
    CHECK(active > 0); // the jitter must actually exercise the hinges
}

TEST_CASE("bones at nominal length cost nothing") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const HandPose3D pose = canonical_hand();
    NominalBoneLengths nominal = estimate_nominal_lengths({pose}, skel);
    const MultiPoseLossResult r = bone_loss({{pose}}, nominal, skel);
    CHECK(r.value <= 1e-18);
}

TEST_CASE("one stretched leaf bone costs its normalized square") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    const HandPose3D rest = canonical_hand();
    const NominalBoneLengths nominal = estimate_nominal_lengths({rest}, skel);

    // Stretch the middle fingertip 2 mm along its own bone: a leaf joint, so
    // exactly one length changes.
    const auto& chain = skel.finger_chains[2];
    const int mid = chain[2], tip = chain[3];
    HandPose3D pose = rest;
    const Point3 dir = (rest.joints[tip] - rest.joints[mid]).normalized();
    pose.joints[tip] += 2.0 * dir;

    const MultiPoseLossResult r = bone_loss({{pose}}, nominal, skel);
    CHECK(r.value == doctest::Approx(4.0 / 20.0).epsilon(1e-12));
}

TEST_CASE("bone loss matches a triple-loop oracle") {
    const SkeletonDef& skel = SkeletonDef::hand21();
    rng::Engine g(23);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<HandPose3D>> frames;
        const int n_frames = 1 + trial % 4;
        for (int t = 0; t < n_frames; ++t) {
            std::vector<HandPose3D> hands;
            const int n_hands = 1 + (trial + t) % 2;
            for (int m = 0; m < n_hands; ++m) hands.push_back(testutil::jittered_hand(g, 2.0));
            frames.push_back(hands);
        }
        NominalBoneLengths nominal;
        const auto base = bone_lengths(canonical_hand(), skel);
        for (int b = 0; b < kBoneCount; ++b) {
            nominal.lengths[b] = *base[b] + rng::uniform(g, -1.0, 1.0);
        }

        const MultiPoseLossResult r = bone_loss(frames, nominal, skel);

        double sum = 0.0;
        long instances = 0;
        for (const auto& hands : frames) {
            instances += static_cast<long>(hands.size());
            for (const auto& hand : hands) {
                for (int b = 0; b < kBoneCount; ++b) {
                    const auto [parent, child] = skel.bones[b];
                    if (!hand.valid[parent] || !hand.valid[child]) continue;
                    const double len = (hand.joints[child] - hand.joints[parent]).norm();
                    const double d = len - nominal.lengths[b];
                    sum += d * d;
                }
            }
        }
        const double want = sum / (static_cast<double>(instances) * kBoneCount);
        CHECK(r.value == doctest::Approx(want).epsilon(1e-12));

        // Gradient against central differences over the first hand.
        const auto f = [&](const Eigen::VectorXd& x) {
            auto moved = frames;
            moved[0][0] = unflatten(x, frames[0][0]);
            return bone_loss(moved, nominal, skel).value;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(frames[0][0]), 1e-5);
        CHECK(rel_err(flatten_grad(r.gradients[0][0]), fd) < 1e-5);
    }
}

TEST_CASE("weighted total equals the weighted sum of its parts") {
    RigSpec spec;
    const auto rig = generate_rig(spec);
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    rng::Engine g(29);

    const HandPose3D prev = testutil::jittered_hand(g, 3.0);
    const HandPose3D pose = testutil::jittered_hand(g, 3.0);
    const FrameObservations obs = observe(pose, rig, g, 2.0);

    LossWeights w;
    w.reproj = 1.0;
    w.smooth = 20.0;
    w.shape = 50.0;
    w.biomech = 0.0;
    const double total = total_loss(pose, &prev, obs, rig, w, skel, limits).value;
    const double parts = 1.0 * reproj_loss(pose, obs, rig).value +
                         20.0 * smooth_loss(pose, prev).value +
                         50.0 * shape_loss(pose, prev).value;
    CHECK(total == doctest::Approx(parts).epsilon(1e-12));

    // Linearity in each coefficient.
    LossWeights scaled = w;
    scaled.smooth = 40.0;
    const double bumped = total_loss(pose, &prev, obs, rig, scaled, skel, limits).value;
    CHECK(bumped - total == doctest::Approx(20.0 * smooth_loss(pose, prev).value)
                                .epsilon(1e-12));
}

TEST_CASE("zero weights disable their terms entirely") {
    RigSpec spec;
    const auto rig = generate_rig(spec);
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    rng::Engine g(31);

    const HandPose3D pose = testutil::jittered_hand(g, 2.0);
    const FrameObservations obs = observe(pose, rig, g, 0.0);

    LossWeights off;
    off.reproj = off.smooth = off.shape = off.biomech = 0.0;
    CHECK(total_loss(pose, nullptr, obs, rig, off, skel, limits).value == 0.0);

    LossWeights data_only;
    data_only.smooth = data_only.shape = 0.0;
    data_only.reproj = 1.0;
    CHECK(total_loss(pose, nullptr, obs, rig, data_only, skel, limits).value <= 1e-18);

    // A disabled biomech term means its preconditions never trip: collapse a
    // bone and check nothing throws.
    HandPose3D collapsed = pose;
    const auto& chain = skel.finger_chains[0];
    collapsed.joints[chain[1]] = collapsed.joints[chain[0]];
    CHECK_NOTHROW(total_loss(collapsed, nullptr, obs, rig, data_only, skel, limits));
}

TEST_CASE("total gradient matches central differences") {
    RigSpec spec;
    const auto rig = generate_rig(spec);
    const SkeletonDef& skel = SkeletonDef::hand21();
    const BiomechLimits limits = BiomechLimits::defaults();
    rng::Engine g(37);

    for (int trial = 0; trial < 5; ++trial) {
        const HandPose3D prev = testutil::jittered_hand(g, 3.0);
        const HandPose3D pose = testutil::jittered_hand(g, 3.0);
        const FrameObservations obs = observe(pose, rig, g, 2.0);
        LossWeights w;

        const LossResult r = total_loss(pose, &prev, obs, rig, w, skel, limits);

        std::vector<Point3> xs, ys;
        for (int j = 0; j < kJointCount; ++j) {
            xs.push_back(pose.joints[j] - pose.joints[kWristJoint]);
            ys.push_back(prev.joints[j] - prev.joints[kWristJoint]);
        }
        const Eigen::Matrix3d rot = oracle::procrustes_horn(stack(xs), stack(ys));
        const auto f = [&](const Eigen::VectorXd& x) {
            const HandPose3D p = unflatten(x, pose);
            double shape = 0.0;
            for (int j = 0; j < kJointCount; ++j) {
                const Point3 cx = p.joints[j] - p.joints[kWristJoint];
                const Point3 cy = prev.joints[j] - prev.joints[kWristJoint];
                shape += (rot * cx - cy).squaredNorm();
            }
            return w.reproj * reproj_loss(p, obs, rig).value +
                   w.smooth * smooth_loss(p, prev).value + w.shape * shape;
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(f, flatten(pose), 1e-4);
        CHECK(rel_err(flatten_grad(r.gradient), fd) < 1e-4);
    }
}

TEST_CASE("weights must be finite and non-negative") {
    LossWeights w;
    CHECK_NOTHROW(w.validate());
    w.shape = -1.0;
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
    w.shape = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
}

} // TEST_SUITE
