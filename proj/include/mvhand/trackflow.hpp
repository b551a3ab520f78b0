#pragma once

#include <optional>
#include <set>
#include <vector>

#include "mvhand/observations.hpp"

namespace mvhand {

// Axis-aligned pixel box, (x_min, y_min) top-left inclusive.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool well_formed() const { return x_min < x_max && y_min < y_max; }
    BBox clamped(double width, double height) const;
};

enum class TrackDirection { Forward, Backward };

// Minimal surface a video tracker must expose to the scheduler. Concrete
// trackers live outside this library; the stubs below make the scheduling
// logic testable without one.
class TrackerInterface {
public:
    virtual ~TrackerInterface() = default;
    virtual void init(int frame, const BBox& box) = 0;
    // Advance one frame in the given direction. nullopt signals tracking
    // failure; after a failure every step fails until the next init().
    virtual std::optional<BBox> step(TrackDirection direction) = 0;
};

// Never fails.
class AlwaysSucceedsTracker : public TrackerInterface {
public:
    void init(int frame, const BBox& box) override;
    std::optional<BBox> step(TrackDirection direction) override;

private:
    BBox box_;
};

// Succeeds for a fixed number of steps per direction from the init frame,
// then fails.
class SpanLimitedTracker : public TrackerInterface {
public:
    SpanLimitedTracker(int forward_span, int backward_span);
    void init(int frame, const BBox& box) override;
    std::optional<BBox> step(TrackDirection direction) override;

private:
    int forward_span_;
    int backward_span_;
    int forward_taken_ = 0;
    int backward_taken_ = 0;
    bool failed_ = true; // unusable before the first init
    BBox box_;
};

// Fails exactly when stepping onto one of the listed frames.
class ScriptedTracker : public TrackerInterface {
public:
    explicit ScriptedTracker(std::set<int> fail_frames);
    void init(int frame, const BBox& box) override;
    std::optional<BBox> step(TrackDirection direction) override;

private:
    std::set<int> fail_frames_;
    int frame_ = 0;
    bool failed_ = true;
    BBox box_;
};

struct TrackEpisode {
    int keyframe = 0;
    int forward_span = 0;  // covered frames after the keyframe
    int backward_span = 0; // covered frames before the keyframe
};

struct TrackPlan {
    // episodes[hand][view], in the order the scheduler created them
    std::vector<std::vector<std::vector<TrackEpisode>>> episodes;
    // covered[hand][view][frame]
    std::vector<std::vector<std::vector<bool>>> covered;
    int frame_count = 0;
};

// Mean detection confidence per frame, per hand, per view. Rectangular:
// every frame must list the same hand count and every hand the same views.
using ConfidenceGrid = std::vector<std::vector<std::vector<double>>>;

inline constexpr double kConfidenceFilterThreshold = 0.1;
inline constexpr double kKeyframeInitThreshold = 0.3;

// Zero out keypoints whose confidence falls below the threshold; they are
// treated as absent from then on.
HandObservation2D filter_keypoints(const HandObservation2D& obs,
                                   double threshold = kConfidenceFilterThreshold);

// Detectors localize the wrist reliably even when they score it low, so its
// confidence is forced to 1 when present.
HandObservation2D override_wrist(const HandObservation2D& obs);

// Arithmetic mean of all 21 keypoint confidences (absent keypoints count 0).
double mean_confidence(const HandObservation2D& obs);

// Greedy keyframe selection with bidirectional propagation: repeatedly seed
// the tracker at the highest-confidence uncovered frame above the threshold,
// run it forward then backward until failure, a sequence boundary, or an
// already-covered frame, and mark the episode's frames covered. Each
// (hand, view) track is scheduled independently; ties break toward the
// lowest frame index.
TrackPlan schedule_tracking(const ConfidenceGrid& mean_confidences,
                            double init_threshold, TrackerInterface& tracker);

} // namespace mvhand
