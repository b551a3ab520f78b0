#include "mvhand/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace mvhand::io {

namespace {

std::string idx(const std::string& base, size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

const json& member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + ": missing field '" + key + "'");
    return *it;
}

double number_at(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

double finite_at(const json& j, const std::string& path) {
    const double v = number_at(j, path);
    if (!std::isfinite(v)) throw SchemaError(path + ": must be finite");
    return v;
}

int integer_at(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
    return j.get<int>();
}

std::string string_at(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path + ": expected a string");
    return j.get<std::string>();
}

const json& array_at(const json& j, const std::string& path, size_t n = 0) {
    if (!j.is_array()) throw SchemaError(path + ": expected an array");
    if (n > 0 && j.size() != n) {
        throw SchemaError(path + ": expected " + std::to_string(n) + " entries, got " +
                          std::to_string(j.size()));
    }
    return j;
}

void check_header(const json& j, const std::string& path, const char* units) {
    const json& h = member(j, path, "header");
    const std::string got_units = string_at(member(h, path + ".header", "units"),
                                            path + ".header.units");
    if (got_units != units) {
        throw SchemaError(path + ".header.units: expected \"" + units + "\", got \"" +
                          got_units + "\"");
    }
    const std::string skel = string_at(member(h, path + ".header", "skeleton"),
                                       path + ".header.skeleton");
    if (skel != "hand21") {
        throw SchemaError(path + ".header.skeleton: expected \"hand21\", got \"" +
                          skel + "\"");
    }
}

} // namespace

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        // parse errors proper, but also number overflow (1e999 and friends)
        throw SchemaError(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw SchemaError("write failed for " + path);
}

std::vector<CameraParams> load_calibration(const std::string& path) {
    const json root = read_json_file(path);
    array_at(root, path);

    static const char* kDistortionKeys[] = {"dist",          "distortion",
                                            "dist_coeffs",   "distortion_coefficients",
                                            "distcoeffs",    "D"};
    std::vector<CameraParams> cams;
    std::set<std::string> ids;
    for (size_t i = 0; i < root.size(); ++i) {
        const std::string p = idx(path, i);
        const json& c = root[i];
        if (!c.is_object()) throw SchemaError(p + ": expected an object");
        for (const char* key : kDistortionKeys) {
            if (c.contains(key)) {
                throw SchemaError(p + ": field '" + key +
                                  "' not supported — supply undistorted calibration "
                                  "without distortion coefficients");
            }
        }

        CameraParams cam;
        cam.id = string_at(member(c, p, "id"), p + ".id");
        if (!ids.insert(cam.id).second) {
            throw SchemaError(p + ".id: duplicate camera id '" + cam.id + "'");
        }
        const json& k = array_at(member(c, p, "K"), p + ".K", 9);
        const json& r = array_at(member(c, p, "R"), p + ".R", 9);
        const json& t = array_at(member(c, p, "t"), p + ".t", 3);
        for (int e = 0; e < 9; ++e) {
            cam.intrinsics(e / 3, e % 3) = finite_at(k[e], idx(p + ".K", e));
            cam.rotation(e / 3, e % 3) = finite_at(r[e], idx(p + ".R", e));
        }
        for (int e = 0; e < 3; ++e) {
            cam.translation(e) = finite_at(t[e], idx(p + ".t", e));
        }
        cam.width = integer_at(member(c, p, "width"), p + ".width");
        cam.height = integer_at(member(c, p, "height"), p + ".height");
        cam.validate();
        cams.push_back(std::move(cam));
    }
    if (cams.empty()) throw SchemaError(path + ": calibration lists no cameras");
    return cams;
}

void save_calibration(const std::string& path, const std::vector<CameraParams>& cams) {
    json root = json::array();
    for (const auto& cam : cams) {
        json c;
        c["id"] = cam.id;
        json k = json::array(), r = json::array(), t = json::array();
        for (int e = 0; e < 9; ++e) {
            k.push_back(cam.intrinsics(e / 3, e % 3));
            r.push_back(cam.rotation(e / 3, e % 3));
        }
        for (int e = 0; e < 3; ++e) t.push_back(cam.translation(e));
        c["K"] = std::move(k);
        c["R"] = std::move(r);
        c["t"] = std::move(t);
        c["width"] = cam.width;
        c["height"] = cam.height;
        root.push_back(std::move(c));
    }
    write_json_file(path, root);
}

KeypointData load_keypoints(const std::string& path,
                            const std::vector<CameraParams>& cams) {
    const json root = read_json_file(path);
    check_header(root, path, "px");
    const json& header = member(root, path, "header");
    KeypointData data;
    data.fps = number_at(member(header, path + ".header", "fps"), path + ".header.fps");
    if (!(data.fps > 0.0) || !std::isfinite(data.fps)) {
        throw SchemaError(path + ".header.fps: must be positive");
    }

    std::map<std::string, size_t> view_index;
    for (size_t v = 0; v < cams.size(); ++v) view_index[cams[v].id] = v;

    const json& frames = array_at(member(root, path, "frames"), path + ".frames");
    data.frames.reserve(frames.size());
    for (size_t t = 0; t < frames.size(); ++t) {
        const std::string pf = idx(path + ".frames", t);
        const json& views = member(frames[t], pf, "views");
        if (!views.is_object()) throw SchemaError(pf + ".views: expected an object");

        std::vector<std::vector<HandObservation2D>> frame(cams.size());
        for (const auto& [view_id, view_val] : views.items()) {
            const std::string pv = pf + ".views." + view_id;
            const auto found = view_index.find(view_id);
            if (found == view_index.end()) {
                throw SchemaError(pv + ": view id not present in the calibration");
            }
            const json& hands = array_at(member(view_val, pv, "hands"), pv + ".hands");
            for (size_t h = 0; h < hands.size(); ++h) {
                const std::string ph = idx(pv + ".hands", h);
                HandObservation2D obs;
                obs.hand_id = integer_at(member(hands[h], ph, "hand_id"), ph + ".hand_id");
                const std::string hd =
                    string_at(member(hands[h], ph, "handedness"), ph + ".handedness");
                try {
                    obs.handedness = handedness_from_string(hd);
                } catch (const InvalidArgument&) {
                    throw SchemaError(ph + ".handedness: must be left/right/unknown");
                }
                const json& kps =
                    array_at(member(hands[h], ph, "keypoints"), ph + ".keypoints",
                             kJointCount);
                for (int j = 0; j < kJointCount; ++j) {
                    const std::string pk = idx(ph + ".keypoints", j);
                    const json& kp = array_at(kps[j], pk, 3);
                    obs.keypoints[j].position.x() = finite_at(kp[0], pk + "[0]");
                    obs.keypoints[j].position.y() = finite_at(kp[1], pk + "[1]");
                    const double c = finite_at(kp[2], pk + "[2]");
                    if (c < 0.0 || c > 1.0) {
                        throw SchemaError(pk + "[2]: confidence must lie in [0, 1]");
                    }
                    obs.keypoints[j].confidence = c;
                }
                frame[found->second].push_back(std::move(obs));
            }
        }
        data.frames.push_back(std::move(frame));
    }
    return data;
}

void save_keypoints(const std::string& path, const KeypointData& data,
                    const std::vector<CameraParams>& cams) {
    json root;
    root["header"] = {{"units", "px"}, {"skeleton", "hand21"}, {"fps", data.fps}};
    json frames = json::array();
    for (const auto& frame : data.frames) {
        if (frame.size() != cams.size()) {
            throw InvalidArgument("keypoint frame view count does not match calibration");
        }
        json views;
        for (size_t v = 0; v < frame.size(); ++v) {
            if (frame[v].empty()) continue;
            json hands = json::array();
            for (const auto& obs : frame[v]) {
                json kps = json::array();
                for (const auto& kp : obs.keypoints) {
                    kps.push_back({kp.position.x(), kp.position.y(), kp.confidence});
                }
                hands.push_back({{"hand_id", obs.hand_id},
                                 {"handedness", to_string(obs.handedness)},
                                 {"keypoints", std::move(kps)}});
            }
            views[cams[v].id] = {{"hands", std::move(hands)}};
        }
        frames.push_back({{"views", std::move(views)}});
    }
    root["frames"] = std::move(frames);
    write_json_file(path, root);
}

TrajectoryData load_trajectory(const std::string& path) {
    const json root = read_json_file(path);
    check_header(root, path, "mm");

    TrajectoryData data;
    const json& frames = array_at(member(root, path, "frames"), path + ".frames");
    data.frames.reserve(frames.size());
    for (size_t t = 0; t < frames.size(); ++t) {
        const std::string pf = idx(path + ".frames", t);
        const json& hands = array_at(member(frames[t], pf, "hands"), pf + ".hands");
        std::vector<TrajectoryHand> frame;
        for (size_t h = 0; h < hands.size(); ++h) {
            const std::string ph = idx(pf + ".hands", h);
            TrajectoryHand th;
            th.hand_id = integer_at(member(hands[h], ph, "hand_id"), ph + ".hand_id");
            const json& joints =
                array_at(member(hands[h], ph, "joints"), ph + ".joints", kJointCount);
            const json& valid =
                array_at(member(hands[h], ph, "valid"), ph + ".valid", kJointCount);
            for (int j = 0; j < kJointCount; ++j) {
                const std::string pj = idx(ph + ".joints", j);
                if (!valid[j].is_boolean()) {
                    throw SchemaError(idx(ph + ".valid", j) + ": expected a boolean");
                }
                if (!valid[j].get<bool>()) continue;
                const json& xyz = array_at(joints[j], pj, 3);
                for (int k = 0; k < 3; ++k) {
                    th.pose.joints[j][k] = finite_at(xyz[k], idx(pj, k));
                }
                th.pose.valid[j] = true;
            }
            frame.push_back(std::move(th));
        }
        data.frames.push_back(std::move(frame));
    }
    return data;
}

void save_trajectory(const std::string& path, const TrajectoryData& data) {
    json root;
    root["header"] = {{"units", "mm"}, {"skeleton", "hand21"}};
    json frames = json::array();
    for (const auto& frame : data.frames) {
        json hands = json::array();
        for (const auto& th : frame) {
            json joints = json::array();
            json valid = json::array();
            for (int j = 0; j < kJointCount; ++j) {
                if (th.pose.valid[j]) {
                    joints.push_back({th.pose.joints[j].x(), th.pose.joints[j].y(),
                                      th.pose.joints[j].z()});
                } else {
                    joints.push_back({0.0, 0.0, 0.0});
                }
                valid.push_back(th.pose.valid[j]);
            }
            hands.push_back({{"hand_id", th.hand_id},
                             {"joints", std::move(joints)},
                             {"valid", std::move(valid)}});
        }
        frames.push_back({{"hands", std::move(hands)}});
    }
    root["frames"] = std::move(frames);
    write_json_file(path, root);
}

BiomechLimits load_biomech_limits(const std::string& path) {
    const json root = read_json_file(path);
    BiomechLimits lim;
    const json& flex = array_at(member(root, path, "flexion"), path + ".flexion",
                                lim.flexion.size());
    const json& abd = array_at(member(root, path, "abduction"), path + ".abduction",
                               lim.abduction.size());
    const auto read_pair = [](const json& j, const std::string& p) {
        const json& a = array_at(j, p, 2);
        return std::pair<double, double>(finite_at(a[0], p + "[0]"),
                                         finite_at(a[1], p + "[1]"));
    };
    for (size_t i = 0; i < lim.flexion.size(); ++i) {
        lim.flexion[i] = read_pair(flex[i], idx(path + ".flexion", i));
    }
    for (size_t i = 0; i < lim.abduction.size(); ++i) {
        lim.abduction[i] = read_pair(abd[i], idx(path + ".abduction", i));
    }
    try {
        lim.validate();
    } catch (const InvalidArgument& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return lim;
}

void save_nominal_lengths(const std::string& path,
                          const std::vector<std::pair<int, NominalBoneLengths>>& hands) {
    json root;
    root["units"] = "mm";
    root["skeleton"] = "hand21";
    json arr = json::array();
    for (const auto& [id, nominal] : hands) {
        json lengths = json::array();
        for (double l : nominal.lengths) lengths.push_back(l);
        arr.push_back({{"hand_id", id}, {"lengths", std::move(lengths)}});
    }
    root["hands"] = std::move(arr);
    write_json_file(path, root);
}

json metrics_to_json(const MetricsReport& report, const MetricsConfig& cfg) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    json j;
    j["frames"] = report.frames;
    j["evaluated_3d"] = report.evaluated_3d;
    j["evaluated_2d"] = report.evaluated_2d;
    j["mpjpe_mm"] = opt(report.mpjpe_mm);
    j["mre_px"] = opt(report.mre_px);
    j["mje_px"] = opt(report.mje_px);
    if (report.pck3d.empty()) {
        j["pck3d"] = nullptr;
    } else {
        j["pck3d"] = {{"thresholds_mm", cfg.pck3d_thresholds},
                      {"fractions", report.pck3d}};
    }
    if (report.pck2d.empty()) {
        j["pck2d"] = nullptr;
    } else {
        j["pck2d"] = {{"thresholds_px", cfg.pck2d_thresholds},
                      {"fractions", report.pck2d},
                      {"source", report.pck2d_source}};
    }
    j["mpck3d"] = opt(report.mpck3d);
    j["mpck2d"] = opt(report.mpck2d);
    j["ap"] = opt(report.ap);
    return j;
}

json solve_report_to_json(const SolveReport& report) {
    json frames = json::array();
    for (const auto& f : report.frames) {
        frames.push_back({{"frame", f.frame},
                          {"iterations", f.iterations},
                          {"initial_objective", f.initial_objective},
                          {"final_objective", f.final_objective},
                          {"converged", f.converged},
                          {"interpolated", f.interpolated},
                          {"behind_camera", f.behind_camera},
                          {"terms",
                           {{"reproj", f.reproj_value},
                            {"smooth", f.smooth_value},
                            {"shape", f.shape_value},
                            {"biomech", f.biomech_value}}}});
    }
    return json{{"frames", std::move(frames)}};
}

std::vector<int> hand_ids(const KeypointData& data) {
    std::set<int> ids;
    for (const auto& frame : data.frames) {
        for (const auto& view : frame) {
            for (const auto& obs : view) ids.insert(obs.hand_id);
        }
    }
    return {ids.begin(), ids.end()};
}

std::vector<int> hand_ids(const TrajectoryData& data) {
    std::set<int> ids;
    for (const auto& frame : data.frames) {
        for (const auto& th : frame) ids.insert(th.hand_id);
    }
    return {ids.begin(), ids.end()};
}

std::vector<FrameObservations> hand_sequence(const KeypointData& data, int hand_id,
                                             size_t view_count) {
    std::vector<FrameObservations> out;
    out.reserve(data.frames.size());
    for (const auto& frame : data.frames) {
        if (frame.size() != view_count) {
            throw InvalidArgument("keypoint frame view count does not match calibration");
        }
        FrameObservations fo(view_count);
        for (size_t v = 0; v < view_count; ++v) {
            for (const auto& obs : frame[v]) {
                if (obs.hand_id == hand_id) {
                    fo[v] = obs;
                    break;
                }
            }
        }
        out.push_back(std::move(fo));
    }
    return out;
}

} // namespace mvhand::io
