#include "mvhand/solver.hpp"

#include <algorithm>
#include <cmath>

#include "mvhand/trackflow.hpp"

namespace mvhand {

namespace {

std::vector<int> free_joints(const HandPose3D& pose) {
    std::vector<int> idx;
    for (int j = 0; j < kJointCount; ++j) {
        if (pose.valid[j]) idx.push_back(j);
    }
    return idx;
}

Eigen::VectorXd pack(const HandPose3D& pose, const std::vector<int>& idx) {
    Eigen::VectorXd x(3 * idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        x.segment<3>(3 * static_cast<Eigen::Index>(i)) = pose.joints[idx[i]];
    }
    return x;
}

void unpack(const Eigen::VectorXd& x, const std::vector<int>& idx, HandPose3D& pose) {
    for (size_t i = 0; i < idx.size(); ++i) {
        pose.joints[idx[i]] = x.segment<3>(3 * static_cast<Eigen::Index>(i));
    }
}

Bounds box_around(const Eigen::VectorXd& x0, double halfwidth) {
    Bounds b;
    b.lower = x0.array() - halfwidth;
    b.upper = x0.array() + halfwidth;
    return b;
}

bool has_confidence_mass(const FrameObservations& obs) {
    for (const auto& o : obs) {
        if (!o) continue;
        for (const auto& kp : o->keypoints) {
            if (kp.present()) return true;
        }
    }
    return false;
}

} // namespace

HandPose3D triangulate_frame(const FrameObservations& obs,
                             const std::vector<CameraParams>& cams, int min_views) {
    if (obs.size() != cams.size()) {
        throw InvalidArgument("observation count does not match camera count");
    }
    if (min_views < 2) {
        throw InvalidArgument("triangulation needs at least two views per joint");
    }
    HandPose3D pose;
    for (int j = 0; j < kJointCount; ++j) {
        std::vector<WeightedObservation> views;
        for (size_t v = 0; v < cams.size(); ++v) {
            if (!obs[v]) continue;
            const Keypoint2D& kp = obs[v]->keypoints[j];
            if (!kp.present()) continue;
            views.push_back({cams[v], kp.position, kp.confidence});
        }
        if (views.size() < static_cast<size_t>(min_views)) continue;
        try {
            pose.joints[j] = triangulate(views).point;
            pose.valid[j] = true;
        } catch (const Error&) {
            // degenerate geometry — leave the joint invalid
        }
    }
    return pose;
}

std::pair<HandPose3D, FrameReport> solve_frame(
    const HandPose3D& prev_pose, const HandPose3D& init,
    const FrameObservations& obs, const std::vector<CameraParams>& cams,
    const LossWeights& weights, const BiomechLimits& limits,
    const SolverOptions& opts, const SkeletonDef& skel) {
    weights.validate();
    opts.validate();
    if (obs.size() != cams.size()) {
        throw InvalidArgument("observation count does not match camera count");
    }

    FrameObservations work = obs;
    for (auto& o : work) {
        if (o) *o = override_wrist(*o);
    }

    // With no data term and only the temporal terms active, the previous
    // pose is the exact global minimizer; skip the solve.
    if (!has_confidence_mass(work) && weights.biomech == 0.0 &&
        (weights.smooth > 0.0 || weights.shape > 0.0)) {
        FrameReport rep;
        rep.converged = true;
        return {prev_pose, rep};
    }

    const std::vector<int> idx = free_joints(init);
    if (idx.empty()) {
        throw InvalidArgument("initialization has no valid joints to optimize");
    }

    HandPose3D scratch = init;
    const Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        unpack(x, idx, scratch);
        const LossResult r =
            total_loss(scratch, &prev_pose, work, cams, weights, skel, limits);
        for (size_t i = 0; i < idx.size(); ++i) {
            grad.segment<3>(3 * static_cast<Eigen::Index>(i)) = r.gradient[idx[i]];
        }
        return r.value;
    };

    const Eigen::VectorXd x0 = pack(init, idx);
    const Bounds bounds = box_around(x0, opts.bound_halfwidth_mm);
    LbfgsReport lrep;
    const Eigen::VectorXd xs = lbfgs_minimize(fn, x0, opts, &lrep, &bounds);

    HandPose3D out = init;
    unpack(xs, idx, out);

    FrameReport rep;
    rep.iterations = lrep.iterations;
    rep.initial_objective = lrep.initial_objective;
    rep.final_objective = lrep.final_objective;
    rep.converged = lrep.converged;
    if (weights.reproj > 0.0) {
        const LossResult t = reproj_loss(out, work, cams);
        rep.reproj_value = t.value;
        rep.behind_camera = t.behind_camera;
    }
    if (weights.smooth > 0.0) rep.smooth_value = smooth_loss(out, prev_pose).value;
    if (weights.shape > 0.0) rep.shape_value = shape_loss(out, prev_pose).value;
    if (weights.biomech > 0.0) rep.biomech_value = biomech_loss(out, skel, limits).value;
    return {out, rep};
}

std::vector<int> window_offsets(int frame_count, int window_size, int window_overlap) {
    if (frame_count <= 0) throw InvalidArgument("frame count must be positive");
    if (!(window_overlap > 0 && window_overlap < window_size)) {
        throw InvalidArgument("window_overlap must satisfy 0 < overlap < window_size");
    }
    std::vector<int> offsets;
    int o = 0;
    for (;;) {
        offsets.push_back(o);
        if (o + window_size >= frame_count) break;
        o += window_size - window_overlap;
    }
    return offsets;
}

std::pair<std::vector<HandPose3D>, SolveReport> solve_sequence(
    const std::vector<FrameObservations>& frames,
    const std::vector<CameraParams>& cams, const LossWeights& weights,
    const BiomechLimits& limits, const SolverOptions& opts,
    const SkeletonDef& skel) {
    weights.validate();
    opts.validate();
    const int n = static_cast<int>(frames.size());
    if (n == 0) throw InvalidArgument("sequence must contain at least one frame");

    std::vector<FrameObservations> work(frames);
    std::vector<bool> usable(n);
    for (int f = 0; f < n; ++f) {
        if (frames[f].size() != cams.size()) {
            throw InvalidArgument("frame " + std::to_string(f) +
                                  " observation count does not match camera count");
        }
        for (auto& o : work[f]) {
            if (o) *o = override_wrist(*o);
        }
        usable[f] = has_confidence_mass(work[f]);
    }

    const HandPose3D canon = canonical_hand();
    std::vector<HandPose3D> sol(n);
    std::vector<bool> solved(n, false);
    SolveReport report;
    report.frames.resize(n);
    for (int f = 0; f < n; ++f) report.frames[f].frame = f;

    // Triangulation init with a canonical-hand fallback: joints that fail to
    // triangulate are placed at their rest offset from the best available
    // anchor (triangulated wrist, else the latest solved wrist, else the
    // translation aligning the rest pose to whatever did triangulate).
    const auto build_init = [&](int f) {
        HandPose3D tri = triangulate_frame(work[f], cams);
        if (tri.count_valid() == kJointCount) return tri;

        Point3 anchor = Point3::Zero();
        bool anchored = false;
        if (tri.valid[kWristJoint]) {
            anchor = tri.joints[kWristJoint];
            anchored = true;
        }
        if (!anchored) {
            for (int p = f - 1; p >= 0; --p) {
                if (solved[p] && sol[p].valid[kWristJoint]) {
                    anchor = sol[p].joints[kWristJoint];
                    anchored = true;
                    break;
                }
            }
        }
        if (!anchored && tri.count_valid() > 0) {
            int m = 0;
            for (int j = 0; j < kJointCount; ++j) {
                if (!tri.valid[j]) continue;
                anchor += tri.joints[j] - (canon.joints[j] - canon.joints[kWristJoint]);
                ++m;
            }
            anchor /= m;
        }
        for (int j = 0; j < kJointCount; ++j) {
            if (tri.valid[j]) continue;
            tri.joints[j] = anchor + (canon.joints[j] - canon.joints[kWristJoint]);
            tri.valid[j] = true;
        }
        return tri;
    };

    for (int o : window_offsets(n, opts.window_size, opts.window_overlap)) {
        const int end = std::min(o + opts.window_size, n);
        for (int i = o; i < end; ++i) {
            if (!usable[i]) continue;

            const HandPose3D init = solved[i] ? sol[i] : build_init(i);

            int prev_idx = -1;
            for (int p = i - 1; p >= 0; --p) {
                if (solved[p]) {
                    prev_idx = p;
                    break;
                }
            }
            LossWeights wts = weights;
            const HandPose3D& prev = prev_idx >= 0 ? sol[prev_idx] : init;
            if (prev_idx < 0) {
                wts.smooth = 0.0;
                wts.shape = 0.0;
            }

            auto [pose, rep] = solve_frame(prev, init, work[i], cams, wts, limits,
                                           opts, skel);
            sol[i] = pose;
            solved[i] = true;
            rep.frame = i;
            report.frames[i] = rep;
        }
    }

    // Fill observation-free frames from their solved neighbors.
    for (int i = 0; i < n; ++i) {
        if (usable[i]) continue;
        report.frames[i].interpolated = true;
        int p = -1, q = -1;
        for (int k = i - 1; k >= 0; --k) {
            if (solved[k]) {
                p = k;
                break;
            }
        }
        for (int k = i + 1; k < n; ++k) {
            if (solved[k]) {
                q = k;
                break;
            }
        }
        if (p < 0 && q < 0) continue; // nothing to interpolate from
        if (p < 0 || q < 0) {
            sol[i] = sol[p < 0 ? q : p];
            continue;
        }
        const double a = static_cast<double>(i - p) / (q - p);
        HandPose3D pose;
        for (int j = 0; j < kJointCount; ++j) {
            const bool vp = sol[p].valid[j];
            const bool vq = sol[q].valid[j];
            if (vp && vq) {
                pose.joints[j] = (1.0 - a) * sol[p].joints[j] + a * sol[q].joints[j];
                pose.valid[j] = true;
            } else if (vp || vq) {
                pose.joints[j] = vp ? sol[p].joints[j] : sol[q].joints[j];
                pose.valid[j] = true;
            }
        }
        sol[i] = pose;
    }

    return {std::move(sol), std::move(report)};
}

GtFitResult fit_ground_truth(const std::vector<FrameObservations>& annotations,
                             const std::vector<CameraParams>& cams,
                             const SkeletonDef& skel, double lambda_reproj,
                             double lambda_bone, const SolverOptions& opts) {
    opts.validate();
    if (annotations.empty()) throw InvalidArgument("no annotated frames supplied");
    if (!std::isfinite(lambda_reproj) || lambda_reproj < 0.0 ||
        !std::isfinite(lambda_bone) || lambda_bone < 0.0) {
        throw InvalidArgument("fitting weights must be finite and non-negative");
    }

    const int t_count = static_cast<int>(annotations.size());
    GtFitResult res;
    res.poses.resize(t_count);
    for (int t = 0; t < t_count; ++t) {
        if (annotations[t].size() != cams.size()) {
            throw InvalidArgument("frame " + std::to_string(t) +
                                  " observation count does not match camera count");
        }
        res.poses[t] = triangulate_frame(annotations[t], cams);
        res.insufficient_joints += kJointCount - res.poses[t].count_valid();
    }

    res.nominal = estimate_nominal_lengths(res.poses, skel);

    std::vector<std::vector<int>> idx(t_count);
    std::vector<int> offset(t_count);
    int total = 0;
    for (int t = 0; t < t_count; ++t) {
        idx[t] = free_joints(res.poses[t]);
        offset[t] = total;
        total += 3 * static_cast<int>(idx[t].size());
    }

    Eigen::VectorXd x0(total);
    for (int t = 0; t < t_count; ++t) {
        x0.segment(offset[t], 3 * idx[t].size()) = pack(res.poses[t], idx[t]);
    }

    std::vector<std::vector<HandPose3D>> scratch(t_count);
    for (int t = 0; t < t_count; ++t) scratch[t] = {res.poses[t]};

    const Objective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        double f = 0.0;
        grad.setZero();
        for (int t = 0; t < t_count; ++t) {
            unpack(x.segment(offset[t], 3 * idx[t].size()), idx[t], scratch[t][0]);
        }
        if (lambda_reproj > 0.0) {
            for (int t = 0; t < t_count; ++t) {
                const LossResult r = reproj_loss(scratch[t][0], annotations[t], cams);
                f += lambda_reproj * r.value;
                for (size_t i = 0; i < idx[t].size(); ++i) {
                    grad.segment<3>(offset[t] + 3 * static_cast<Eigen::Index>(i)) +=
                        lambda_reproj * r.gradient[idx[t][i]];
                }
            }
        }
        if (lambda_bone > 0.0) {
            const MultiPoseLossResult r = bone_loss(scratch, res.nominal, skel);
            f += lambda_bone * r.value;
            for (int t = 0; t < t_count; ++t) {
                for (size_t i = 0; i < idx[t].size(); ++i) {
                    grad.segment<3>(offset[t] + 3 * static_cast<Eigen::Index>(i)) +=
                        lambda_bone * r.gradients[t][0][idx[t][i]];
                }
            }
        }
        return f;
    };

    const Bounds bounds = box_around(x0, opts.bound_halfwidth_mm);
    const Eigen::VectorXd xs = lbfgs_minimize(fn, x0, opts, &res.report, &bounds);
    for (int t = 0; t < t_count; ++t) {
        unpack(xs.segment(offset[t], 3 * idx[t].size()), idx[t], res.poses[t]);
    }
    return res;
}

} // namespace mvhand
