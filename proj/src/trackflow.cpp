#include "mvhand/trackflow.hpp"

#include <algorithm>
#include <cmath>

namespace mvhand {

BBox BBox::clamped(double width, double height) const {
    BBox out = *this;
    out.x_min = std::clamp(x_min, 0.0, width);
    out.x_max = std::clamp(x_max, 0.0, width);
    out.y_min = std::clamp(y_min, 0.0, height);
    out.y_max = std::clamp(y_max, 0.0, height);
    return out;
}

void AlwaysSucceedsTracker::init(int, const BBox& box) { box_ = box; }

std::optional<BBox> AlwaysSucceedsTracker::step(TrackDirection) { return box_; }

SpanLimitedTracker::SpanLimitedTracker(int forward_span, int backward_span)
    : forward_span_(forward_span), backward_span_(backward_span) {
    if (forward_span < 0 || backward_span < 0) {
        throw InvalidArgument("tracker spans must be non-negative");
    }
}

void SpanLimitedTracker::init(int, const BBox& box) {
    forward_taken_ = 0;
    backward_taken_ = 0;
    failed_ = false;
    box_ = box;
}

std::optional<BBox> SpanLimitedTracker::step(TrackDirection direction) {
    if (failed_) return std::nullopt;
    int& taken = direction == TrackDirection::Forward ? forward_taken_ : backward_taken_;
    const int span = direction == TrackDirection::Forward ? forward_span_ : backward_span_;
    if (taken >= span) {
        failed_ = true;
        return std::nullopt;
    }
    ++taken;
    return box_;
}

ScriptedTracker::ScriptedTracker(std::set<int> fail_frames)
    : fail_frames_(std::move(fail_frames)) {}

void ScriptedTracker::init(int frame, const BBox& box) {
    frame_ = frame;
    failed_ = false;
    box_ = box;
}

std::optional<BBox> ScriptedTracker::step(TrackDirection direction) {
    if (failed_) return std::nullopt;
    const int next = frame_ + (direction == TrackDirection::Forward ? 1 : -1);
    if (fail_frames_.count(next)) {
        failed_ = true;
        return std::nullopt;
    }
    frame_ = next;
    return box_;
}

HandObservation2D filter_keypoints(const HandObservation2D& obs, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("confidence threshold must lie in [0, 1]");
    }
    HandObservation2D out = obs;
    for (auto& kp : out.keypoints) {
        if (kp.confidence < threshold) kp.confidence = 0.0;
    }
    return out;
}

HandObservation2D override_wrist(const HandObservation2D& obs) {
    HandObservation2D out = obs;
    if (out.keypoints[kWristJoint].present()) {
        out.keypoints[kWristJoint].confidence = 1.0;
    }
    return out;
}

double mean_confidence(const HandObservation2D& obs) {
    double sum = 0.0;
    for (const auto& kp : obs.keypoints) sum += kp.confidence;
    return sum / kJointCount;
}

namespace {

void validate_grid(const ConfidenceGrid& grid, double init_threshold) {
    if (!(init_threshold >= 0.0 && init_threshold <= 1.0)) {
        throw InvalidArgument("init threshold must lie in [0, 1]");
    }
    for (size_t f = 0; f < grid.size(); ++f) {
        if (grid[f].size() != grid[0].size()) {
            throw InvalidArgument("confidence grid is ragged across hands");
        }
        for (size_t h = 0; h < grid[f].size(); ++h) {
            if (grid[f][h].size() != grid[0][0].size()) {
                throw InvalidArgument("confidence grid is ragged across views");
            }
            for (double c : grid[f][h]) {
                if (!(c >= 0.0 && c <= 1.0)) {
                    throw InvalidArgument("confidences must lie in [0, 1]");
                }
            }
        }
    }
}

} // namespace

TrackPlan schedule_tracking(const ConfidenceGrid& mean_confidences,
                            double init_threshold, TrackerInterface& tracker) {
    validate_grid(mean_confidences, init_threshold);

    const int frames = static_cast<int>(mean_confidences.size());
    const int hands = frames > 0 ? static_cast<int>(mean_confidences[0].size()) : 0;
    const int views = hands > 0 ? static_cast<int>(mean_confidences[0][0].size()) : 0;

    TrackPlan plan;
    plan.frame_count = frames;
    plan.episodes.assign(hands, std::vector<std::vector<TrackEpisode>>(views));
    plan.covered.assign(hands, std::vector<std::vector<bool>>(
                                   views, std::vector<bool>(frames, false)));

    const BBox seed{0.0, 0.0, 1.0, 1.0}; // placeholder; stubs ignore it

    for (int h = 0; h < hands; ++h) {
        for (int v = 0; v < views; ++v) {
            auto& covered = plan.covered[h][v];
            for (;;) {
                int keyframe = -1;
                double best = init_threshold;
                for (int f = 0; f < frames; ++f) {
                    if (covered[f]) continue;
                    const double c = mean_confidences[f][h][v];
                    if (c > best) {
                        best = c;
                        keyframe = f;
                    }
                }
                if (keyframe < 0) break;

                TrackEpisode ep;
                ep.keyframe = keyframe;
                covered[keyframe] = true;

                tracker.init(keyframe, seed);
                for (int f = keyframe + 1; f < frames && !covered[f]; ++f) {
                    if (!tracker.step(TrackDirection::Forward)) break;
                    covered[f] = true;
                    ++ep.forward_span;
                }
                tracker.init(keyframe, seed);
                for (int f = keyframe - 1; f >= 0 && !covered[f]; --f) {
                    if (!tracker.step(TrackDirection::Backward)) break;
                    covered[f] = true;
                    ++ep.backward_span;
                }
                plan.episodes[h][v].push_back(ep);
            }
        }
    }
    return plan;
}

} // namespace mvhand
