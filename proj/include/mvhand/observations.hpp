#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvhand/geometry.hpp"
#include "mvhand/skeleton.hpp"

namespace mvhand {

enum class Handedness { Left, Right, Unknown };

inline std::string to_string(Handedness h) {
    switch (h) {
        case Handedness::Left: return "left";
        case Handedness::Right: return "right";
        default: return "unknown";
    }
}

inline Handedness handedness_from_string(const std::string& s) {
    if (s == "left") return Handedness::Left;
    if (s == "right") return Handedness::Right;
    if (s == "unknown") return Handedness::Unknown;
    throw InvalidArgument("unrecognized handedness: " + s);
}

// One detected keypoint in pixel coordinates. Confidence 0 means "not detected";
// such keypoints carry no positional information.
struct Keypoint2D {
    Point2 position = Point2::Zero();
    double confidence = 0.0;

    bool present() const { return confidence > 0.0; }
};

// A full 21-keypoint detection of one hand in one view.
struct HandObservation2D {
    int hand_id = 0;
    Handedness handedness = Handedness::Unknown;
    std::array<Keypoint2D, kJointCount> keypoints;
};

// Detections for every view of a single frame, indexed by camera. A view with
// no detection for the hand in question holds nullopt.
using FrameObservations = std::vector<std::optional<HandObservation2D>>;

} // namespace mvhand
