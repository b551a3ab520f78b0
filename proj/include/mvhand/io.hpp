#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvhand/losses.hpp"
#include "mvhand/metrics.hpp"
#include "mvhand/observations.hpp"
#include "mvhand/solver.hpp"

namespace mvhand::io {

using json = nlohmann::ordered_json;

// 2D detections: frames[t][view] lists every hand seen by that camera, with
// views indexed in calibration order.
struct KeypointData {
    double fps = 0.0;
    std::vector<std::vector<std::vector<HandObservation2D>>> frames;
};

struct TrajectoryHand {
    int hand_id = 0;
    HandPose3D pose;
};

// 3D trajectories: frames[t] lists the hands present in that frame.
struct TrajectoryData {
    std::vector<std::vector<TrajectoryHand>> frames;
};

std::vector<CameraParams> load_calibration(const std::string& path);
void save_calibration(const std::string& path, const std::vector<CameraParams>& cams);

// The keypoint file's view ids must all exist in the calibration; frames may
// omit views they have no detections for.
KeypointData load_keypoints(const std::string& path,
                            const std::vector<CameraParams>& cams);
void save_keypoints(const std::string& path, const KeypointData& data,
                    const std::vector<CameraParams>& cams);

TrajectoryData load_trajectory(const std::string& path);
void save_trajectory(const std::string& path, const TrajectoryData& data);

BiomechLimits load_biomech_limits(const std::string& path);

void save_nominal_lengths(const std::string& path,
                          const std::vector<std::pair<int, NominalBoneLengths>>& hands);

json metrics_to_json(const MetricsReport& report, const MetricsConfig& cfg);
json solve_report_to_json(const SolveReport& report);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

// All hand ids appearing anywhere in the data, ascending.
std::vector<int> hand_ids(const KeypointData& data);
std::vector<int> hand_ids(const TrajectoryData& data);

// One hand's observations as a per-frame, per-view sequence (nullopt where
// that camera didn't see the hand in that frame).
std::vector<FrameObservations> hand_sequence(const KeypointData& data, int hand_id,
                                             size_t view_count);

} // namespace mvhand::io
