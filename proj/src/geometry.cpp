#include "mvhand/geometry.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace mvhand {

namespace {

constexpr double kRotationTol = 1e-9;
constexpr double kConditionLimit = 1e12;

bool is_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

} // namespace

void CameraParams::validate() const {
    if (!is_finite(intrinsics) || !is_finite(rotation) || !is_finite(translation)) {
        throw InvalidCamera("camera '" + id + "': non-finite parameters");
    }
    const Eigen::Matrix3d rtr = rotation.transpose() * rotation;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kRotationTol) {
        throw InvalidCamera("camera '" + id + "': rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > kRotationTol) {
        throw InvalidCamera("camera '" + id + "': rotation determinant is not +1");
    }
    if (intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0) {
        throw InvalidCamera("camera '" + id + "': focal lengths must be strictly positive");
    }
    if (intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 || intrinsics(2, 2) != 1.0) {
        throw InvalidCamera("camera '" + id + "': intrinsics last row must be [0, 0, 1]");
    }
    if (width <= 0 || height <= 0) {
        throw InvalidCamera("camera '" + id + "': image size must be strictly positive");
    }
}

Eigen::Matrix<double, 3, 4> CameraParams::projection_matrix() const {
    Eigen::Matrix<double, 3, 4> rt;
    rt.leftCols<3>() = rotation;
    rt.col(3) = translation;
    return intrinsics * rt;
}

Point2 project(const Point3& p, const CameraParams& cam) {
    const Point3 pc = cam.camera_frame(p);
    if (pc.z() <= kMinDepthMm) {
        throw NonPositiveDepth("camera '" + cam.id + "': camera-frame depth " +
                               std::to_string(pc.z()) + " mm is not positive");
    }
    const Point3 uvw = cam.intrinsics * pc;
    return Point2(uvw.x() / uvw.z(), uvw.y() / uvw.z());
}

TriangulationResult triangulate(const std::vector<WeightedObservation>& observations) {
    int positive = 0;
    for (const auto& obs : observations) {
        if (!std::isfinite(obs.weight) || obs.weight < 0.0) {
            throw InvalidArgument("triangulate: weights must be finite and >= 0");
        }
        if (obs.weight > 0.0) ++positive;
    }
    if (positive < 2) {
        throw InsufficientViews("triangulate: need >= 2 positive-weight observations, got " +
                                std::to_string(positive));
    }

    Eigen::MatrixXd design(2 * positive, 4);
    int row = 0;
    for (const auto& obs : observations) {
        if (obs.weight <= 0.0) continue;
        const Eigen::Matrix<double, 3, 4> p = obs.camera.projection_matrix();
        const double s = std::sqrt(obs.weight);
        design.row(row++) = s * (obs.pixel.x() * p.row(2) - p.row(0));
        design.row(row++) = s * (obs.pixel.y() * p.row(2) - p.row(1));
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
    const Eigen::VectorXd& sing = svd.singularValues();
    if (sing(2) <= 0.0 || sing(0) / sing(2) > kConditionLimit) {
        throw DegenerateGeometry("triangulate: design matrix is rank-deficient");
    }
    const Eigen::Vector4d h = svd.matrixV().col(3);
    if (std::abs(h(3)) < 1e-12) {
        throw DegenerateGeometry("triangulate: solution is at infinity");
    }

    TriangulationResult result;
    result.point = h.head<3>() / h(3);
    result.views_used = positive;

    double err_sum = 0.0;
    int err_count = 0;
    for (const auto& obs : observations) {
        if (obs.weight <= 0.0) continue;
        const Point3 pc = obs.camera.camera_frame(result.point);
        if (pc.z() <= kMinDepthMm) continue;
        const Point3 uvw = obs.camera.intrinsics * pc;
        const Point2 reproj(uvw.x() / uvw.z(), uvw.y() / uvw.z());
        err_sum += (reproj - obs.pixel).norm();
        ++err_count;
    }
    result.mean_reprojection_error_px = err_count > 0 ? err_sum / err_count : 0.0;
    return result;
}

} // namespace mvhand
