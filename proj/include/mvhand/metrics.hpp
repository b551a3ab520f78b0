#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvhand/geometry.hpp"
#include "mvhand/observations.hpp"
#include "mvhand/skeleton.hpp"

namespace mvhand {

struct MetricsConfig {
    std::vector<double> pck2d_thresholds = {5.0, 10.0, 20.0, 30.0}; // px
    std::vector<double> pck3d_thresholds = {5.0, 10.0, 25.0, 50.0}; // mm
    std::vector<double> oks_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                          0.75, 0.80, 0.85, 0.90, 0.95};
    std::array<double, kJointCount> oks_sigma;
    // Joints entering the error pools. The wrist and thumb base are excluded
    // by default; their labels vary too much to score against.
    std::array<bool, kJointCount> joint_mask;
    // Use 101-point interpolated precision-recall per threshold instead of
    // plain pooled precision.
    bool coco_interpolated_ap = false;

    MetricsConfig() {
        oks_sigma.fill(0.035);
        joint_mask.fill(true);
        joint_mask[0] = joint_mask[1] = false;
    }

    void validate() const;
};

struct MetricsReport {
    std::optional<double> mpjpe_mm;
    std::optional<double> mre_px;
    std::optional<double> mje_px;
    std::vector<double> pck2d;
    std::vector<double> pck3d;
    std::optional<double> mpck2d;
    std::optional<double> mpck3d;
    std::optional<double> ap;
    std::string pck2d_source; // "projected_3d" or "direct_2d"
    long evaluated_3d = 0; // (frame, joint) pairs in the 3D pools
    long evaluated_2d = 0; // (frame, joint, view) tuples in the 2D pools
    long frames = 0;
};

// A (frame, joint) pair is evaluated when the mask admits the joint and both
// poses have it valid; a 2D tuple additionally needs the annotation present.
// The collectors below return the per-pair error pools the metrics reduce.
std::vector<double> errors_3d(const std::vector<HandPose3D>& pred,
                              const std::vector<HandPose3D>& gt,
                              const std::array<bool, kJointCount>& mask);

std::vector<double> errors_2d_projected(const std::vector<HandPose3D>& pred,
                                        const std::vector<FrameObservations>& gt2d,
                                        const std::vector<CameraParams>& cams,
                                        const std::array<bool, kJointCount>& mask);

std::vector<double> errors_2d_direct(const std::vector<FrameObservations>& pred2d,
                                     const std::vector<FrameObservations>& gt2d,
                                     const std::array<bool, kJointCount>& mask);

// Mean 3D joint error in millimeters. Throws EmptyEvaluation when the mask
// and validity flags leave nothing to average; same for the two below.
double mpjpe(const std::vector<HandPose3D>& pred, const std::vector<HandPose3D>& gt,
             const std::array<bool, kJointCount>& mask);

// Mean reprojection error in pixels of predicted 3D against 2D annotations.
double mre(const std::vector<HandPose3D>& pred,
           const std::vector<FrameObservations>& gt2d,
           const std::vector<CameraParams>& cams,
           const std::array<bool, kJointCount>& mask);

// Mean 2D joint error in pixels between matching detections.
double mje(const std::vector<FrameObservations>& pred2d,
           const std::vector<FrameObservations>& gt2d,
           const std::array<bool, kJointCount>& mask);

// Fraction of errors strictly below each threshold (empty pool counts as 0).
std::vector<double> pck_fractions(const std::vector<double>& errors,
                                  const std::vector<double>& thresholds);

double mpck(const std::vector<double>& fractions);

// One 2D hand instance for detection-style scoring.
struct ScoredInstance2D {
    std::array<Point2, kJointCount> keypoints;
    std::array<bool, kJointCount> visible; // gt visibility; ignored on preds
    double score = 1.0;                    // prediction confidence for ranking

    ScoredInstance2D() {
        for (auto& k : keypoints) k.setZero();
        visible.fill(true);
    }
};

// Object keypoint similarity over the gt-visible joints, scaled by the
// square root of the gt keypoint bounding-box area.
double oks(const ScoredInstance2D& pred, const ScoredInstance2D& gt,
           const std::array<double, kJointCount>& sigma);

// Mean precision of OKS-matched detections over the threshold grid; images
// are indexed in lockstep. nullopt when there is nothing on either side.
std::optional<double> average_precision(
    const std::vector<std::vector<ScoredInstance2D>>& preds,
    const std::vector<std::vector<ScoredInstance2D>>& gts,
    const MetricsConfig& cfg);

// Greedy wrist-distance matching of predicted to gt hands within a frame,
// gated at 200 mm; returns (pred index, gt index) pairs.
std::vector<std::pair<int, int>> match_hands(const std::vector<HandPose3D>& pred,
                                             const std::vector<HandPose3D>& gt,
                                             double gate_mm = 200.0);

// Score a single-hand sequence: 3D metrics against gt3d, 2D metrics by
// projecting into the annotated views. PCK2D uses the projected entry point.
MetricsReport build_report(const std::vector<HandPose3D>& pred,
                           const std::vector<HandPose3D>& gt3d,
                           const std::vector<FrameObservations>& gt2d,
                           const std::vector<CameraParams>& cams,
                           const MetricsConfig& cfg);

// Score 2D detections directly against 2D annotations (MJE + direct PCK2D).
MetricsReport build_report_2d(const std::vector<FrameObservations>& pred2d,
                              const std::vector<FrameObservations>& gt2d,
                              const MetricsConfig& cfg);

} // namespace mvhand
