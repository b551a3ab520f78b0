#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvhand/losses.hpp"

namespace mvhand {

struct SolverOptions {
    double learning_rate = 1.0;
    int max_iterations = 100;
    double tolerance = 1e-5; // relative objective change
    int window_size = 50;
    int window_overlap = 25;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int history_size = 10;
    // Box half-width around the initialization, per coordinate. Wide enough
    // to be inactive in practice; shrink it to exercise the bounded path.
    double bound_halfwidth_mm = 10000.0;

    void validate() const;
};

// Evaluate the objective at x and fill grad (same size as x); returns f(x).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

// One accepted line-search step, with enough to re-check the strong Wolfe
// conditions after the fact.
struct StepRecord {
    double step = 0.0;
    double f0 = 0.0;        // objective at the line-search origin
    double slope0 = 0.0;    // directional derivative there
    double f_step = 0.0;    // objective at the accepted point
    double slope_step = 0.0;
};

struct LbfgsReport {
    int iterations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    bool converged = false;
    std::string termination; // tolerance | gradient | max_iterations | line_search
    std::vector<StepRecord> steps;
};

// Limited-memory BFGS with a strong Wolfe line search. Optional box bounds
// are handled by projecting the search direction at active coordinates and
// capping the step at the feasible boundary.
Eigen::VectorXd lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                               const SolverOptions& opts, LbfgsReport* report = nullptr,
                               const Bounds* bounds = nullptr);

struct FrameReport {
    int frame = 0;
    int iterations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    bool converged = false;
    bool interpolated = false; // no usable observations; filled from neighbors
    int behind_camera = 0;
    // Unweighted term values at the final pose; zero for disabled terms.
    double reproj_value = 0.0;
    double smooth_value = 0.0;
    double shape_value = 0.0;
    double biomech_value = 0.0;
};

struct SolveReport {
    std::vector<FrameReport> frames;
};

// Per-joint confidence-weighted triangulation of one frame. Joints seen by
// fewer than min_views views (or degenerately placed) come back invalid.
HandPose3D triangulate_frame(const FrameObservations& obs,
                             const std::vector<CameraParams>& cams,
                             int min_views = 2);

// Minimize the weighted loss for one frame over the init-valid joints. The
// wrist keypoint's confidence is forced to 1 in every view first. When the
// observations carry no confidence mass and only the temporal terms are on,
// the previous pose is returned directly — it is the exact minimizer.
std::pair<HandPose3D, FrameReport> solve_frame(
    const HandPose3D& prev_pose, const HandPose3D& init,
    const FrameObservations& obs, const std::vector<CameraParams>& cams,
    const LossWeights& weights, const BiomechLimits& limits,
    const SolverOptions& opts, const SkeletonDef& skel = SkeletonDef::hand21());

// Start offsets of the overlapping solve windows covering frame_count frames.
std::vector<int> window_offsets(int frame_count, int window_size, int window_overlap);

// Sequential solve over a sequence in overlapping windows. Frames are
// initialized by triangulation (canonical-hand fallback anchored at the
// wrist), each solved against the previous frame's solution; overlap frames
// are re-initialized from the earlier window and the later window's result
// wins. Frame 0 is solved without temporal terms. Frames with no usable
// observations are linearly interpolated from their solved neighbors.
std::pair<std::vector<HandPose3D>, SolveReport> solve_sequence(
    const std::vector<FrameObservations>& frames,
    const std::vector<CameraParams>& cams, const LossWeights& weights,
    const BiomechLimits& limits, const SolverOptions& opts,
    const SkeletonDef& skel = SkeletonDef::hand21());

struct GtFitResult {
    std::vector<HandPose3D> poses;
    NominalBoneLengths nominal;
    LbfgsReport report;
    int insufficient_joints = 0; // joint instances left invalid for lack of views
};

// Two-stage ground-truth fitting for one hand's annotated clip: triangulate
// every joint, estimate nominal bone lengths (per-bone median), then jointly
// refine all frames under reprojection plus bone-length regularization.
GtFitResult fit_ground_truth(const std::vector<FrameObservations>& annotations,
                             const std::vector<CameraParams>& cams,
                             const SkeletonDef& skel, double lambda_reproj,
                             double lambda_bone, const SolverOptions& opts);

} // namespace mvhand
