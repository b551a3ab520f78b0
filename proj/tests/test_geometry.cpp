#include "doctest.h"

#include <cmath>

#include <Eigen/Geometry>

#include "mvhand/geometry.hpp"
#include "mvhand/random.hpp"
#include "mvhand/synth.hpp"
#include "oracles.hpp"
#include "util.hpp"

using namespace mvhand;

namespace {

// Proper look-at camera for hand-built fixtures.
CameraParams lookat_camera(const Point3& center, const Point3& target, double f,
                           double cx, double cy) {
    CameraParams cam;
    const Point3 forward = (target - center).normalized();
    Point3 right = forward.cross(Point3::UnitZ()).normalized();
    const Point3 down = forward.cross(right);
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * center;
    cam.intrinsics << f, 0, cx, 0, f, cy, 0, 0, 1;
    cam.width = 1920;
    cam.height = 1080;
    cam.validate();
    return cam;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("principal point and focal scaling") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    const Point2 a = project({0.0, 0.0, 500.0}, cam);
    CHECK(a.x() == doctest::Approx(960.0).epsilon(1e-12));
    CHECK(a.y() == doctest::Approx(540.0).epsilon(1e-12));

    const Point2 b = project({100.0, 0.0, 1000.0}, cam);
    CHECK(b.x() == doctest::Approx(1060.0).epsilon(1e-12));
    CHECK(b.y() == doctest::Approx(540.0).epsilon(1e-12));
}

TEST_CASE("projection matches the longhand matrix oracle") {
    rng::Engine g(11);
    for (int i = 0; i < 200; ++i) {
        CameraParams cam;
        cam.id = "r";
        cam.rotation = testutil::random_rotation(g);
        cam.translation = testutil::random_point(g, 500.0);
        const double f = rng::uniform(g, 500.0, 2000.0);
        cam.intrinsics << f, 0, rng::uniform(g, 400.0, 1500.0), 0, f,
            rng::uniform(g, 300.0, 800.0), 0, 0, 1;
        cam.width = 1920;
        cam.height = 1080;
        cam.validate();

        // Choose the point in the camera frame so depth is safely positive,
        // then pull it back to world coordinates.
        const Point3 pc{rng::uniform(g, -300.0, 300.0), rng::uniform(g, -300.0, 300.0),
                        rng::uniform(g, 500.0, 3000.0)};
        const Point3 p = cam.rotation.transpose() * (pc - cam.translation);

        const Point2 got = project(p, cam);
        const Point2 want = oracle::project(cam, p);
        CHECK((got - want).norm() <= 1e-9);
    }
}

TEST_CASE("depth at or below the cutoff is rejected") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    CHECK_THROWS_AS(project({0.0, 0.0, 0.0}, cam), NonPositiveDepth);
    CHECK_THROWS_AS(project({0.0, 0.0, -100.0}, cam), NonPositiveDepth);
    CHECK_NOTHROW(project({0.0, 0.0, 1.0}, cam));
}

TEST_CASE("camera invariants are enforced") {
    CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    CHECK_NOTHROW(cam.validate());

    CameraParams bad = cam;
    bad.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(bad.validate(), InvalidCamera);

    bad = cam;
    bad.rotation.col(0) = -bad.rotation.col(0); // determinant -1
    CHECK_THROWS_AS(bad.validate(), InvalidCamera);

    bad = cam;
    bad.intrinsics(0, 0) = -5.0;
    CHECK_THROWS_AS(bad.validate(), InvalidCamera);

    bad = cam;
    bad.intrinsics(2, 0) = 0.1;
    CHECK_THROWS_AS(bad.validate(), InvalidCamera);

    bad = cam;
    bad.width = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidCamera);
}

TEST_CASE("triangulation recovers a point from exact projections") {
    RigSpec spec;
    spec.n_cameras = 4;
    const auto rig = generate_rig(spec);

    rng::Engine g(7);
    for (int i = 0; i < 50; ++i) {
        const Point3 p = testutil::random_point(g, 120.0);
        std::vector<WeightedObservation> obs;
        for (const auto& cam : rig) obs.push_back({cam, project(p, cam), 1.0});
        const TriangulationResult r = triangulate(obs);
        CHECK((r.point - p).norm() <= 1e-6);
        CHECK(r.views_used == 4);
        CHECK(r.mean_reprojection_error_px <= 1e-6);
    }
}

TEST_CASE("fewer than two usable views is an error") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    std::vector<WeightedObservation> one = {{cam, {960.0, 540.0}, 1.0}};
    CHECK_THROWS_AS(triangulate(one), InsufficientViews);

    // A zero-weight row does not count as a view.
    std::vector<WeightedObservation> padded = {{cam, {960.0, 540.0}, 1.0},
                                               {cam, {960.0, 540.0}, 0.0}};
    CHECK_THROWS_AS(triangulate(padded), InsufficientViews);
    CHECK_THROWS_AS(triangulate({}), InsufficientViews);
}

TEST_CASE("coincident cameras are degenerate") {
    const CameraParams cam = testutil::simple_camera(1000.0, 960.0, 540.0);
    std::vector<WeightedObservation> obs = {{cam, {1000.0, 600.0}, 1.0},
                                            {cam, {1000.0, 600.0}, 1.0}};
    CHECK_THROWS_AS(triangulate(obs), DegenerateGeometry);
}

TEST_CASE("mirror-symmetric pair keeps the point on the symmetry plane") {
    const CameraParams left = lookat_camera({800.0, 0.0, 100.0}, Point3::Zero(), 1200.0,
                                            960.0, 540.0);
    const CameraParams right = lookat_camera({-800.0, 0.0, 100.0}, Point3::Zero(),
                                             1200.0, 960.0, 540.0);
    rng::Engine g(3);
    for (int i = 0; i < 20; ++i) {
        const Point3 p{0.0, rng::uniform(g, -100.0, 100.0), rng::uniform(g, -100.0, 100.0)};
        std::vector<WeightedObservation> obs = {{left, project(p, left), 1.0},
                                                {right, project(p, right), 1.0}};
        const TriangulationResult r = triangulate(obs);
        CHECK(std::abs(r.point.x()) <= 1e-9);
    }
}

TEST_CASE("projection is invariant under a joint rigid transform") {
    rng::Engine g(19);
    for (int i = 0; i < 50; ++i) {
        const CameraParams cam = lookat_camera(testutil::random_point(g, 100.0) +
                                                   Point3(900.0, 0.0, 200.0),
                                               Point3::Zero(), 1500.0, 960.0, 540.0);
        const Point3 p = testutil::random_point(g, 150.0);
        const Point2 before = project(p, cam);

        const Eigen::Matrix3d s = testutil::random_rotation(g);
        const Point3 d = testutil::random_point(g, 400.0);

        // Move the world: x -> s x + d. The camera follows by composing the
        // inverse into its extrinsics.
        CameraParams moved = cam;
        moved.rotation = cam.rotation * s.transpose();
        moved.translation = cam.translation - cam.rotation * s.transpose() * d;
        moved.validate();

        const Point2 after = project(s * p + d, moved);
        CHECK((before - after).norm() <= 1e-9);
    }
}

TEST_CASE("uniform weight rescaling leaves the solution unchanged") {
    RigSpec spec;
    spec.n_cameras = 5;
    const auto rig = generate_rig(spec);
    rng::Engine g(23);
    for (int i = 0; i < 20; ++i) {
        const Point3 p = testutil::random_point(g, 100.0);
        std::vector<WeightedObservation> obs;
        for (const auto& cam : rig) {
            const Point2 px = project(p, cam) + Point2(rng::gaussian(g), rng::gaussian(g));
            obs.push_back({cam, px, rng::uniform(g, 0.2, 1.0)});
        }
        const Point3 base = triangulate(obs).point;
        for (auto& o : obs) o.weight *= 37.5;
        const Point3 scaled = triangulate(obs).point;
        CHECK((base - scaled).norm() <= 1e-9);
    }
}

TEST_CASE("round trip holds for any point seen by two or more cameras") {
    RigSpec spec;
    spec.n_cameras = 3;
    const auto rig = generate_rig(spec);
    rng::Engine g(31);
    for (int i = 0; i < 50; ++i) {
        const Point3 p = testutil::random_point(g, 150.0);
        std::vector<WeightedObservation> obs;
        for (size_t v = 0; v < rig.size(); ++v) {
            if (v == 0 && i % 3 == 0) continue; // exercise the 2-view case too
            obs.push_back({rig[v], project(p, rig[v]), rng::uniform(g, 0.3, 1.0)});
        }
        CHECK((triangulate(obs).point - p).norm() <= 1e-6);
    }
}

} // TEST_SUITE
