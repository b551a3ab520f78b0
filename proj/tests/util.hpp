#pragma once

// Shared fixtures and scratch helpers for the test suites.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Geometry>

#include "mvhand/cli.hpp"
#include "mvhand/geometry.hpp"
#include "mvhand/observations.hpp"
#include "mvhand/random.hpp"
#include "mvhand/skeleton.hpp"

namespace testutil {

inline Eigen::Matrix3d random_rotation(mvhand::rng::Engine& g) {
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q[i] = mvhand::rng::gaussian(g);
    q.normalize();
    return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

inline mvhand::Point3 random_point(mvhand::rng::Engine& g, double scale) {
    return {mvhand::rng::uniform(g, -scale, scale), mvhand::rng::uniform(g, -scale, scale),
            mvhand::rng::uniform(g, -scale, scale)};
}

// Canonical hand with independent Gaussian joint jitter.
inline mvhand::HandPose3D jittered_hand(mvhand::rng::Engine& g, double sigma_mm) {
    mvhand::HandPose3D pose = mvhand::canonical_hand();
    for (auto& p : pose.joints) {
        for (int k = 0; k < 3; ++k) p[k] += sigma_mm * mvhand::rng::gaussian(g);
    }
    return pose;
}

// Axis-aligned camera at the origin: f and principal point only.
inline mvhand::CameraParams simple_camera(double f, double cx, double cy,
                                          int w = 1920, int h = 1080) {
    mvhand::CameraParams cam;
    cam.id = "cam";
    cam.intrinsics << f, 0, cx, 0, f, cy, 0, 0, 1;
    cam.width = w;
    cam.height = h;
    return cam;
}

// Unique writable directory, removed when the guard dies.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("mvhand_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliResult run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = mvhand::run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testutil
