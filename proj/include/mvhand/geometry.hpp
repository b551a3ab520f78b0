#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvhand/error.hpp"

namespace mvhand {

using Point2 = Eigen::Vector2d; // pixels
using Point3 = Eigen::Vector3d; // world millimeters

/// One view's pinhole intrinsics, world-to-camera pose, and image size.
/// No distortion model: inputs are assumed undistorted upstream, and
/// calibration files carrying distortion coefficients are rejected at load.
struct CameraParams {
    std::string id;
    Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity(); // pixels
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();   // world-to-camera
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();    // world-to-camera, mm
    int width = 0;
    int height = 0;

    /// Throws InvalidCamera unless: rotation orthonormal with det +1
    /// (1e-9), focal lengths and image size strictly positive, and the
    /// intrinsics' last row is [0, 0, 1].
    void validate() const;

    /// World point expressed in the camera frame: R*p + t.
    Point3 camera_frame(const Point3& p) const { return rotation * p + translation; }

    /// 3x4 matrix K [R | t].
    Eigen::Matrix<double, 3, 4> projection_matrix() const;
};

/// Pinhole projection into pixel coordinates. The result may lie outside
/// [0,W]x[0,H]. Throws NonPositiveDepth when camera-frame z <= 1e-9 mm.
Point2 project(const Point3& p, const CameraParams& cam);

/// Minimum camera-frame depth for a point to be considered in front of a
/// camera, in millimeters.
inline constexpr double kMinDepthMm = 1e-9;

struct WeightedObservation {
    CameraParams camera;
    Point2 pixel = Point2::Zero();
    double weight = 1.0;
};

struct TriangulationResult {
    Point3 point = Point3::Zero();
    double mean_reprojection_error_px = 0.0; // over positive-weight views
    int views_used = 0;
};

/// Confidence-weighted linear (DLT) triangulation. Rows of the homogeneous
/// design matrix are scaled by sqrt(weight) so the algebraic least-squares
/// objective is sum_i w_i * r_i^2. Throws InsufficientViews with fewer than
/// two positive-weight observations and DegenerateGeometry when the design
/// matrix is rank-deficient (singular value ratio above 1e12).
TriangulationResult triangulate(const std::vector<WeightedObservation>& observations);

} // namespace mvhand
