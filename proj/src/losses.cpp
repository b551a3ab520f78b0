#include "mvhand/losses.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace mvhand {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

// Quadratic-to-linear hinge, C1 at zero: 0 for x <= 0, x^2/2w on (0, w),
// x - w/2 beyond. Squaring it gives the penalty.
double hinge(double x) {
    if (x <= 0.0) return 0.0;
    if (x < kHingeWidth) return x * x / (2.0 * kHingeWidth);
    return x - 0.5 * kHingeWidth;
}

double hinge_deriv(double x) {
    if (x <= 0.0) return 0.0;
    if (x < kHingeWidth) return x / kHingeWidth;
    return 1.0;
}

// penalty(theta) = hinge(theta - hi)^2 + hinge(lo - theta)^2, and its
// derivative with respect to theta.
std::pair<double, double> bound_penalty(double theta, double lo, double hi) {
    const double over = theta - hi;
    const double under = lo - theta;
    const double value = hinge(over) * hinge(over) + hinge(under) * hinge(under);
    const double deriv = 2.0 * hinge(over) * hinge_deriv(over) -
                         2.0 * hinge(under) * hinge_deriv(under);
    return {value, deriv};
}

struct AngleGrad {
    double theta = 0.0;
    Point3 d_a = Point3::Zero(); // d theta / d a
    Point3 d_b = Point3::Zero();
};

// Unsigned angle between two vectors via atan2(|a x b|, a.b), with gradients.
// Norms must be positive; the sine is floored so gradients stay finite at 0
// and pi where the true derivative direction degenerates.
AngleGrad angle_between(const Point3& a, const Point3& b) {
    const double na = a.norm();
    const double nb = b.norm();
    const Point3 ah = a / na;
    const Point3 bh = b / nb;
    const double c = std::clamp(ah.dot(bh), -1.0, 1.0);
    const double s = ah.cross(bh).norm();

    AngleGrad out;
    out.theta = std::atan2(s, c);
    const double s_safe = std::max(s, 1e-9);
    out.d_a = -(bh - c * ah) / (na * s_safe);
    out.d_b = -(ah - c * bh) / (nb * s_safe);
    return out;
}

void check_bone(const Point3& v, const char* what) {
    if (v.norm() < 1e-6) {
        throw ZeroLengthBone(std::string("degenerate ") + what + " bone (norm < 1e-6 mm)");
    }
}

// Rest-pose splay angle of each finger's metacarpal against the middle
// finger's, used as the abduction reference.
const std::array<double, kFingerCount>& canonical_splay() {
    static const std::array<double, kFingerCount> splay = [] {
        const HandPose3D rest = canonical_hand();
        const SkeletonDef& skel = SkeletonDef::hand21();
        const Point3 mid = rest.joints[skel.finger_chains[2][0]] - rest.joints[kWristJoint];
        std::array<double, kFingerCount> out{};
        for (int f = 0; f < kFingerCount; ++f) {
            const Point3 u = rest.joints[skel.finger_chains[f][0]] - rest.joints[kWristJoint];
            out[f] = angle_between(u, mid).theta;
        }
        return out;
    }();
    return splay;
}

} // namespace

void LossWeights::validate() const {
    const double w[] = {reproj, smooth, shape, biomech, bone};
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0) {
            throw InvalidArgument("loss weights must be finite and non-negative");
        }
    }
}

BiomechLimits BiomechLimits::defaults() {
    BiomechLimits lim;
    for (int f = 0; f < kFingerCount; ++f) {
        lim.flexion[f * 3 + 0] = {0.0, 110.0 * kDeg};
        lim.flexion[f * 3 + 1] = {0.0, 90.0 * kDeg};
        lim.flexion[f * 3 + 2] = {0.0, 80.0 * kDeg};
        lim.abduction[f] = {-25.0 * kDeg, 25.0 * kDeg};
    }
    return lim;
}

void BiomechLimits::validate() const {
    auto check = [](const std::pair<double, double>& b) {
        if (!(b.first < b.second) || b.first <= -kPi || b.second >= kPi) {
            throw InvalidArgument("angle bounds must satisfy min < max within (-pi, pi)");
        }
    };
    for (const auto& b : flexion) check(b);
    for (const auto& b : abduction) check(b);
}

LossResult reproj_loss(const HandPose3D& pose, const FrameObservations& obs,
                       const std::vector<CameraParams>& cams) {
    if (obs.size() != cams.size()) {
        throw InvalidArgument("observation count does not match camera count");
    }

    LossResult out;
    for (size_t v = 0; v < cams.size(); ++v) {
        if (!obs[v]) continue;
        const CameraParams& cam = cams[v];
        const Eigen::Matrix3d kr = cam.intrinsics * cam.rotation;
        const Eigen::Vector3d kt = cam.intrinsics * cam.translation;

        for (int j = 0; j < kJointCount; ++j) {
            const Keypoint2D& kp = obs[v]->keypoints[j];
            if (!pose.valid[j] || !kp.present()) continue;

            const Eigen::Vector3d p = kr * pose.joints[j] + kt;
            if (p.z() <= kMinDepthMm) {
                ++out.behind_camera;
                continue;
            }
            const double u = p.x() / p.z();
            const double w = p.y() / p.z();
            const Eigen::Vector2d r(u - kp.position.x(), w - kp.position.y());
            out.value += kp.confidence * r.squaredNorm();

            const Eigen::RowVector3d du = (kr.row(0) - u * kr.row(2)) / p.z();
            const Eigen::RowVector3d dv = (kr.row(1) - w * kr.row(2)) / p.z();
            out.gradient[j] +=
                2.0 * kp.confidence * (r.x() * du + r.y() * dv).transpose();
        }
    }
    return out;
}

LossResult smooth_loss(const HandPose3D& pose, const HandPose3D& prev) {
    LossResult out;
    for (int j = 0; j < kJointCount; ++j) {
        if (!pose.valid[j] || !prev.valid[j]) continue;
        const Point3 d = pose.joints[j] - prev.joints[j];
        out.value += d.squaredNorm();
        out.gradient[j] = 2.0 * d;
    }
    return out;
}

Eigen::Matrix3d procrustes_rotation(const Eigen::MatrixX3d& x,
                                    const Eigen::MatrixX3d& y) {
    if (x.rows() != y.rows() || x.rows() < 3) {
        throw DegenerateShape("procrustes needs >= 3 paired points");
    }
    const Eigen::Matrix3d h = x.transpose() * y;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d r = v * u.transpose();
    if (r.determinant() < 0.0) {
        v.col(2) *= -1.0;
        r = v * u.transpose();
    }
    return r;
}

LossResult shape_loss(const HandPose3D& pose, const HandPose3D& prev) {
    if (!pose.valid[kWristJoint] || !prev.valid[kWristJoint]) {
        throw DegenerateShape("shape loss needs the wrist in both poses");
    }

    std::vector<int> shared;
    for (int j = 0; j < kJointCount; ++j) {
        if (pose.valid[j] && prev.valid[j]) shared.push_back(j);
    }
    const int n = static_cast<int>(shared.size());
    if (n < 3) {
        throw DegenerateShape("shape loss needs >= 3 shared valid joints");
    }

    Eigen::MatrixX3d xc(n, 3), yc(n, 3);
    for (int i = 0; i < n; ++i) {
        xc.row(i) = (pose.joints[shared[i]] - pose.joints[kWristJoint]).transpose();
        yc.row(i) = (prev.joints[shared[i]] - prev.joints[kWristJoint]).transpose();
    }

    auto collinear = [n](const Eigen::MatrixX3d& m) {
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const Point3 c = m.row(i).cross(m.row(j));
                best = std::max(best, c.norm());
            }
        }
        return best < 1e-9;
    };
    if (collinear(xc) || collinear(yc)) {
        throw DegenerateShape("shared joints are collinear");
    }

    const Eigen::Matrix3d r = procrustes_rotation(xc, yc);
    const Eigen::MatrixX3d resid = xc * r.transpose() - yc;

    LossResult out;
    out.value = resid.squaredNorm();

    // R held fixed: d/dXc |Xc R^T - Yc|^2 = 2 (Xc R^T - Yc) R, and the wrist
    // collects the negated column sums through the centering.
    const Eigen::MatrixX3d d = 2.0 * resid * r;
    Point3 wrist_grad = Point3::Zero();
    for (int i = 0; i < n; ++i) {
        if (shared[i] == kWristJoint) continue;
        out.gradient[shared[i]] = d.row(i).transpose();
        wrist_grad -= d.row(i).transpose();
    }
    out.gradient[kWristJoint] = wrist_grad;
    return out;
}

LossResult biomech_loss(const HandPose3D& pose, const SkeletonDef& skel,
                        const BiomechLimits& limits) {
    limits.validate();
    LossResult out;

    for (int f = 0; f < kFingerCount; ++f) {
        const auto& chain = skel.finger_chains[f];
        for (int a = 0; a < 3; ++a) {
            const int prev = a == 0 ? kWristJoint : chain[a - 1];
            const int pivot = chain[a];
            const int next = chain[a + 1];
            if (!pose.valid[prev] || !pose.valid[pivot] || !pose.valid[next]) continue;

            const Point3 in = pose.joints[pivot] - pose.joints[prev];
            const Point3 ot = pose.joints[next] - pose.joints[pivot];
            check_bone(in, "incoming");
            check_bone(ot, "outgoing");

            const AngleGrad ag = angle_between(in, ot);
            const auto [lo, hi] = limits.flexion[f * 3 + a];
            const auto [val, dval] = bound_penalty(ag.theta, lo, hi);
            out.value += val;
            if (dval != 0.0) {
                out.gradient[prev] -= dval * ag.d_a;
                out.gradient[pivot] += dval * (ag.d_a - ag.d_b);
                out.gradient[next] += dval * ag.d_b;
            }
        }
    }

    // Splay deviation at each finger base. The middle finger is its own
    // reference, so its deviation is identically zero and is skipped.
    const int mid_base = skel.finger_chains[2][0];
    for (int f = 0; f < kFingerCount; ++f) {
        if (f == 2) continue;
        const int base = skel.finger_chains[f][0];
        if (!pose.valid[kWristJoint] || !pose.valid[base] || !pose.valid[mid_base]) continue;

        const Point3 u = pose.joints[base] - pose.joints[kWristJoint];
        const Point3 m = pose.joints[mid_base] - pose.joints[kWristJoint];
        check_bone(u, "metacarpal");
        check_bone(m, "metacarpal");

        const AngleGrad ag = angle_between(u, m);
        const double dev = ag.theta - canonical_splay()[f];
        const auto [lo, hi] = limits.abduction[f];
        const auto [val, dval] = bound_penalty(dev, lo, hi);
        out.value += val;
        if (dval != 0.0) {
            out.gradient[base] += dval * ag.d_a;
            out.gradient[mid_base] += dval * ag.d_b;
            out.gradient[kWristJoint] -= dval * (ag.d_a + ag.d_b);
        }
    }
    return out;
}

MultiPoseLossResult bone_loss(const std::vector<std::vector<HandPose3D>>& poses,
                              const NominalBoneLengths& nominal,
                              const SkeletonDef& skel) {
    nominal.validate();

    MultiPoseLossResult out;
    out.gradients.resize(poses.size());

    size_t instances = 0;
    for (const auto& frame : poses) instances += frame.size();
    if (instances == 0) return out;
    const double norm = 1.0 / (static_cast<double>(instances) * kBoneCount);

    for (size_t t = 0; t < poses.size(); ++t) {
        out.gradients[t].resize(poses[t].size());
        for (size_t m = 0; m < poses[t].size(); ++m) {
            auto& grad = out.gradients[t][m];
            for (auto& g : grad) g.setZero();

            const HandPose3D& pose = poses[t][m];
            for (int b = 0; b < kBoneCount; ++b) {
                const auto [j, k] = skel.bones[b];
                if (!pose.valid[j] || !pose.valid[k]) continue;
                const Point3 d = pose.joints[j] - pose.joints[k];
                const double len = d.norm();
                const double r = len - nominal.lengths[b];
                out.value += norm * r * r;
                const Point3 dir = d / std::max(len, 1e-12);
                grad[j] += norm * 2.0 * r * dir;
                grad[k] -= norm * 2.0 * r * dir;
            }
        }
    }
    return out;
}

LossResult total_loss(const HandPose3D& pose, const HandPose3D* prev,
                      const FrameObservations& obs,
                      const std::vector<CameraParams>& cams,
                      const LossWeights& weights, const SkeletonDef& skel,
                      const BiomechLimits& limits,
                      const NominalBoneLengths* nominal) {
    weights.validate();

    LossResult out;
    auto accumulate = [&out](double w, const LossResult& term) {
        out.value += w * term.value;
        for (int j = 0; j < kJointCount; ++j) out.gradient[j] += w * term.gradient[j];
        out.behind_camera += term.behind_camera;
    };

    if (weights.reproj > 0.0) accumulate(weights.reproj, reproj_loss(pose, obs, cams));
    if (weights.smooth > 0.0) {
        if (!prev) throw InvalidArgument("smooth term enabled without a previous pose");
        accumulate(weights.smooth, smooth_loss(pose, *prev));
    }
    if (weights.shape > 0.0) {
        if (!prev) throw InvalidArgument("shape term enabled without a previous pose");
        accumulate(weights.shape, shape_loss(pose, *prev));
    }
    if (weights.biomech > 0.0) accumulate(weights.biomech, biomech_loss(pose, skel, limits));
    if (weights.bone > 0.0) {
        if (!nominal) throw InvalidArgument("bone term enabled without nominal lengths");
        const MultiPoseLossResult bone = bone_loss({{pose}}, *nominal, skel);
        LossResult term;
        term.value = bone.value;
        term.gradient = bone.gradients[0][0];
        accumulate(weights.bone, term);
    }
    return out;
}

} // namespace mvhand
