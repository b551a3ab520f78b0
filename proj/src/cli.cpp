#include "mvhand/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "CLI11.hpp"
#include "mvhand/io.hpp"
#include "mvhand/synth.hpp"
#include "mvhand/trackflow.hpp"

namespace mvhand {

namespace {

namespace fs = std::filesystem;
using io::json;

// ---------------------------------------------------------------------------
// configuration file support: YAML (and therefore JSON) mirroring the flags,
// with top-level sections named after the subcommands.

class YamlJsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return {};
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        YAML::Node root;
        try {
            root = YAML::Load(input);
        } catch (const YAML::Exception& e) {
            throw CLI::ConfigError(std::string("config parse error: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        if (root.IsNull() || !root.IsDefined()) return items;
        if (!root.IsMap()) {
            throw CLI::ConfigError("config root must be a mapping of option names");
        }
        walk(root, {}, items);
        return items;
    }

  private:
    static void walk(const YAML::Node& node, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem>& items) {
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            const YAML::Node& value = kv.second;
            if (value.IsMap()) {
                auto deeper = parents;
                deeper.push_back(key);
                walk(value, std::move(deeper), items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.IsScalar()) {
                item.inputs.push_back(value.Scalar());
            } else if (value.IsSequence()) {
                for (const auto& el : value) {
                    if (!el.IsScalar()) {
                        throw CLI::ConfigError("config key '" + key +
                                               "': nested sequences are not supported");
                    }
                    item.inputs.push_back(el.Scalar());
                }
            } else {
                throw CLI::ConfigError("config key '" + key +
                                       "': expected a scalar, sequence, or mapping");
            }
            items.push_back(std::move(item));
        }
    }
};

// ---------------------------------------------------------------------------
// small shared helpers

int thread_count() {
    const char* env = std::getenv("MVHAND_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1 || n > 256) {
        throw InvalidArgument("MVHAND_THREADS must be an integer in [1, 256]");
    }
    return static_cast<int>(n);
}

// Run fn(0..n-1), statically partitioned over MVHAND_THREADS workers. The
// first exception (lowest index) is rethrown after all workers join.
void run_parallel(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const auto threads =
        static_cast<std::size_t>(std::min<long>(thread_count(), static_cast<long>(n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t k = 0; k < threads; ++k) {
        pool.emplace_back([&, k] {
            for (std::size_t i = k; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, sep)) out.push_back(token);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument(what + ": '" + s + "' is not a number");
    }
}

LossWeights parse_weights(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 4) {
        throw InvalidArgument(
            "--weights expects four comma-separated values: "
            "reproj,smooth,shape,biomech");
    }
    LossWeights w;
    w.reproj = parse_double(parts[0], "--weights");
    w.smooth = parse_double(parts[1], "--weights");
    w.shape = parse_double(parts[2], "--weights");
    w.biomech = parse_double(parts[3], "--weights");
    w.validate();
    return w;
}

// Joints to exclude from the error pools, e.g. "0,1"; "" excludes none.
std::array<bool, kJointCount> parse_mask(const std::string& s) {
    std::array<bool, kJointCount> mask;
    mask.fill(true);
    if (s.empty()) return mask;
    for (const auto& tok : split(s, ',')) {
        std::size_t used = 0;
        int j = -1;
        try {
            j = std::stoi(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || j < 0 || j >= kJointCount) {
            throw InvalidArgument("--mask: '" + tok + "' is not a joint index in [0, " +
                                  std::to_string(kJointCount - 1) + "]");
        }
        mask[j] = false;
    }
    return mask;
}

double mean(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

// Single-hand per-frame pose sequence for one hand id; frames where the id
// is absent yield an all-invalid pose.
std::vector<HandPose3D> sequence_of(const io::TrajectoryData& data, int hand_id) {
    std::vector<HandPose3D> seq;
    seq.reserve(data.frames.size());
    for (const auto& frame : data.frames) {
        HandPose3D pose;
        for (const auto& th : frame) {
            if (th.hand_id == hand_id) {
                pose = th.pose;
                break;
            }
        }
        seq.push_back(pose);
    }
    return seq;
}

std::vector<int> common_ids(std::vector<int> a, const std::vector<int>& b) {
    std::vector<int> out;
    for (int id : a) {
        if (std::find(b.begin(), b.end(), id) != b.end()) out.push_back(id);
    }
    return out;
}

std::string file_units(const std::string& path) {
    const json j = io::read_json_file(path);
    if (!j.is_object() || !j.contains("header") || !j["header"].is_object() ||
        !j["header"].contains("units") || !j["header"]["units"].is_string()) {
        throw SchemaError(path + ": missing header.units tag");
    }
    return j["header"]["units"].get<std::string>();
}

// ---------------------------------------------------------------------------
// subcommand argument bundles

struct SimulateArgs {
    int cameras = 4;
    int frames = 100;
    double noise_px = 0.0;
    double dropout = 0.0;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct TriangulateArgs {
    std::string calib;
    std::string keypoints;
    int min_views = 2;
    double min_confidence = kConfidenceFilterThreshold;
    std::string out;
};

struct OptimizeArgs {
    std::string calib;
    std::string keypoints;
    std::string weights = "1,20,50,0";
    int window = 50;
    int overlap = 25;
    double min_confidence = kConfidenceFilterThreshold;
    std::string biomech_limits;
    std::string out;
    std::string report;
};

struct FitGtArgs {
    std::string calib;
    std::string annotations;
    double lambda_bone = 100.0;
    std::string out;
    std::string lengths_out;
};

struct EvaluateArgs {
    std::string pred;
    std::string gt;
    std::string calib;
    std::string mask = "0,1";
    bool coco_ap = false;
    std::string out;
};

// ---------------------------------------------------------------------------
// commands

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    RigSpec rig;
    rig.n_cameras = a.cameras;
    const std::vector<CameraParams> cams = generate_rig(rig);
    const std::vector<HandPose3D> traj =
        generate_motion(a.frames, SkeletonDef::hand21(), a.seed);

    NoiseSpec noise;
    noise.pixel_sigma = a.noise_px;
    noise.dropout_prob = a.dropout;
    noise.seed = a.seed + 1; // keep the render stream independent of the motion
    const std::vector<FrameObservations> rendered =
        render_observations(traj, cams, noise);

    io::KeypointData kp;
    kp.fps = 30.0;
    kp.frames.reserve(rendered.size());
    for (const auto& frame : rendered) {
        std::vector<std::vector<HandObservation2D>> views(cams.size());
        for (std::size_t v = 0; v < frame.size(); ++v) {
            if (frame[v]) views[v].push_back(*frame[v]);
        }
        kp.frames.push_back(std::move(views));
    }

    io::TrajectoryData gt;
    gt.frames.reserve(traj.size());
    for (const auto& pose : traj) gt.frames.push_back({io::TrajectoryHand{0, pose}});

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    io::save_calibration((dir / "calibration.json").string(), cams);
    io::save_keypoints((dir / "keypoints.json").string(), kp, cams);
    io::save_trajectory((dir / "ground_truth.json").string(), gt);

    out << "simulate: " << a.frames << " frames, " << a.cameras
        << " cameras, seed " << a.seed << " -> " << a.out_dir
        << "/{calibration,keypoints,ground_truth}.json\n";
}

void cmd_triangulate(const TriangulateArgs& a, std::ostream& out) {
    if (a.min_views < 2) {
        throw InvalidArgument("--min-views must be at least 2");
    }
    const std::vector<CameraParams> cams = io::load_calibration(a.calib);
    const io::KeypointData data = io::load_keypoints(a.keypoints, cams);
    const std::vector<int> ids = io::hand_ids(data);

    std::vector<std::vector<HandPose3D>> per_hand(ids.size());
    run_parallel(ids.size(), [&](std::size_t k) {
        std::vector<FrameObservations> seq =
            io::hand_sequence(data, ids[k], cams.size());
        std::vector<HandPose3D> poses;
        poses.reserve(seq.size());
        for (auto& frame : seq) {
            for (auto& o : frame) {
                if (o) *o = filter_keypoints(*o, a.min_confidence);
            }
            poses.push_back(triangulate_frame(frame, cams, a.min_views));
        }
        per_hand[k] = std::move(poses);
    });

    io::TrajectoryData result;
    result.frames.resize(data.frames.size());
    for (std::size_t t = 0; t < result.frames.size(); ++t) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            result.frames[t].push_back({ids[k], per_hand[k][t]});
        }
    }
    io::save_trajectory(a.out, result);
    out << "triangulate: " << data.frames.size() << " frames, " << ids.size()
        << " hands -> " << a.out << "\n";
}

void cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
    const LossWeights weights = parse_weights(a.weights);
    SolverOptions opts;
    opts.window_size = a.window;
    opts.window_overlap = a.overlap;
    opts.validate();
    const BiomechLimits limits = a.biomech_limits.empty()
                                     ? BiomechLimits::defaults()
                                     : io::load_biomech_limits(a.biomech_limits);

    const std::vector<CameraParams> cams = io::load_calibration(a.calib);
    const io::KeypointData data = io::load_keypoints(a.keypoints, cams);
    const std::vector<int> ids = io::hand_ids(data);

    std::vector<std::vector<HandPose3D>> per_hand(ids.size());
    std::vector<SolveReport> reports(ids.size());
    run_parallel(ids.size(), [&](std::size_t k) {
        std::vector<FrameObservations> seq =
            io::hand_sequence(data, ids[k], cams.size());
        for (auto& frame : seq) {
            for (auto& o : frame) {
                if (o) *o = filter_keypoints(*o, a.min_confidence);
            }
        }
        auto [poses, report] = solve_sequence(seq, cams, weights, limits, opts);
        per_hand[k] = std::move(poses);
        reports[k] = std::move(report);
    });

    io::TrajectoryData result;
    result.frames.resize(data.frames.size());
    for (std::size_t t = 0; t < result.frames.size(); ++t) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
            result.frames[t].push_back({ids[k], per_hand[k][t]});
        }
    }
    io::save_trajectory(a.out, result);

    if (!a.report.empty()) {
        json hands = json::array();
        for (std::size_t k = 0; k < ids.size(); ++k) {
            json h = io::solve_report_to_json(reports[k]);
            json entry;
            entry["hand_id"] = ids[k];
            entry["frames"] = std::move(h["frames"]);
            hands.push_back(std::move(entry));
        }
        io::write_json_file(a.report, json{{"hands", std::move(hands)}});
    }

    out << "optimize: " << data.frames.size() << " frames, " << ids.size()
        << " hands -> " << a.out;
    if (!a.report.empty()) out << " (report -> " << a.report << ")";
    out << "\n";
}

std::string derived_lengths_path(const std::string& out) {
    fs::path p(out);
    const std::string ext = p.extension().string();
    p.replace_extension();
    return p.string() + "_lengths" + (ext.empty() ? std::string(".json") : ext);
}

void cmd_fit_gt(const FitGtArgs& a, std::ostream& out) {
    const std::vector<CameraParams> cams = io::load_calibration(a.calib);
    const io::KeypointData data = io::load_keypoints(a.annotations, cams);
    const std::vector<int> ids = io::hand_ids(data);
    if (ids.empty()) {
        throw EmptyEvaluation("annotation file contains no hands to fit");
    }

    const SolverOptions opts;
    std::vector<GtFitResult> results(ids.size());
    run_parallel(ids.size(), [&](std::size_t k) {
        const std::vector<FrameObservations> seq =
            io::hand_sequence(data, ids[k], cams.size());
        results[k] =
            fit_ground_truth(seq, cams, SkeletonDef::hand21(), 1.0, a.lambda_bone, opts);
    });

    io::TrajectoryData result;
    result.frames.resize(data.frames.size());
    std::vector<std::pair<int, NominalBoneLengths>> lengths;
    int insufficient = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        for (std::size_t t = 0; t < result.frames.size(); ++t) {
            result.frames[t].push_back({ids[k], results[k].poses[t]});
        }
        lengths.emplace_back(ids[k], results[k].nominal);
        insufficient += results[k].insufficient_joints;
    }
    const std::string lengths_path =
        a.lengths_out.empty() ? derived_lengths_path(a.out) : a.lengths_out;
    io::save_trajectory(a.out, result);
    io::save_nominal_lengths(lengths_path, lengths);

    out << "fit-gt: " << data.frames.size() << " frames, " << ids.size()
        << " hands -> " << a.out << " (bone lengths -> " << lengths_path << ")";
    if (insufficient > 0) {
        out << "; " << insufficient << " joint instances lacked two views";
    }
    out << "\n";
}

ScoredInstance2D instance_of(const HandObservation2D& obs) {
    ScoredInstance2D inst;
    for (int j = 0; j < kJointCount; ++j) {
        inst.keypoints[j] = obs.keypoints[j].position;
        inst.visible[j] = obs.keypoints[j].present();
    }
    inst.score = mean_confidence(obs);
    return inst;
}

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    MetricsConfig cfg;
    cfg.joint_mask = parse_mask(a.mask);
    cfg.coco_interpolated_ap = a.coco_ap;
    cfg.validate();

    const std::string pred_units = file_units(a.pred);
    const std::string gt_units = file_units(a.gt);
    for (const auto& [path, units] : {std::pair{a.pred, pred_units},
                                      std::pair{a.gt, gt_units}}) {
        if (units != "mm" && units != "px") {
            throw SchemaError(path + ": header.units must be \"mm\" or \"px\"");
        }
    }
    if (pred_units == "px" && gt_units == "mm") {
        throw InvalidArgument(
            "pixel predictions cannot be scored against a 3D ground truth; pass "
            "the 3D file as the prediction or supply pixel ground truth");
    }

    MetricsReport rep;
    std::vector<int> hands;

    if (pred_units == "mm" && gt_units == "mm") {
        const io::TrajectoryData pred = io::load_trajectory(a.pred);
        const io::TrajectoryData gt = io::load_trajectory(a.gt);
        if (pred.frames.size() != gt.frames.size()) {
            throw InvalidArgument("prediction and ground truth frame counts differ");
        }
        rep.frames = static_cast<long>(gt.frames.size());
        hands = common_ids(io::hand_ids(pred), io::hand_ids(gt));
        std::vector<double> pool;
        for (int id : hands) {
            const auto errs =
                errors_3d(sequence_of(pred, id), sequence_of(gt, id), cfg.joint_mask);
            pool.insert(pool.end(), errs.begin(), errs.end());
        }
        if (pool.empty()) {
            throw EmptyEvaluation(
                "no overlapping valid joints between prediction and ground truth");
        }
        rep.evaluated_3d = static_cast<long>(pool.size());
        rep.mpjpe_mm = mean(pool);
        rep.pck3d = pck_fractions(pool, cfg.pck3d_thresholds);
        rep.mpck3d = mpck(rep.pck3d);
    } else if (pred_units == "mm") { // gt in px
        if (a.calib.empty()) {
            throw InvalidArgument(
                "2D metrics against pixel annotations require --calib to project "
                "the 3D predictions");
        }
        const std::vector<CameraParams> cams = io::load_calibration(a.calib);
        const io::TrajectoryData pred = io::load_trajectory(a.pred);
        const io::KeypointData gt = io::load_keypoints(a.gt, cams);
        if (pred.frames.size() != gt.frames.size()) {
            throw InvalidArgument("prediction and ground truth frame counts differ");
        }
        rep.frames = static_cast<long>(gt.frames.size());
        hands = common_ids(io::hand_ids(pred), io::hand_ids(gt));
        std::vector<double> pool;
        for (int id : hands) {
            const auto errs = errors_2d_projected(
                sequence_of(pred, id), io::hand_sequence(gt, id, cams.size()), cams,
                cfg.joint_mask);
            pool.insert(pool.end(), errs.begin(), errs.end());
        }
        if (pool.empty()) {
            throw EmptyEvaluation(
                "no projected joints overlap the 2D annotations");
        }
        rep.evaluated_2d = static_cast<long>(pool.size());
        rep.mre_px = mean(pool);
        rep.pck2d = pck_fractions(pool, cfg.pck2d_thresholds);
        rep.mpck2d = mpck(rep.pck2d);
        rep.pck2d_source = "projected_3d";
    } else { // px vs px
        if (a.calib.empty()) {
            throw InvalidArgument(
                "--calib is required to resolve the view ids in keypoint files");
        }
        const std::vector<CameraParams> cams = io::load_calibration(a.calib);
        const io::KeypointData pred = io::load_keypoints(a.pred, cams);
        const io::KeypointData gt = io::load_keypoints(a.gt, cams);
        if (pred.frames.size() != gt.frames.size()) {
            throw InvalidArgument("prediction and ground truth frame counts differ");
        }
        rep.frames = static_cast<long>(gt.frames.size());
        hands = common_ids(io::hand_ids(pred), io::hand_ids(gt));
        std::vector<double> pool;
        for (int id : hands) {
            const auto errs =
                errors_2d_direct(io::hand_sequence(pred, id, cams.size()),
                                 io::hand_sequence(gt, id, cams.size()),
                                 cfg.joint_mask);
            pool.insert(pool.end(), errs.begin(), errs.end());
        }
        if (!pool.empty()) {
            rep.evaluated_2d = static_cast<long>(pool.size());
            rep.mje_px = mean(pool);
            rep.pck2d = pck_fractions(pool, cfg.pck2d_thresholds);
            rep.mpck2d = mpck(rep.pck2d);
            rep.pck2d_source = "direct_2d";
        }

        // Detection-style AP over every (frame, view) image, ids ignored.
        std::vector<std::vector<ScoredInstance2D>> pred_imgs, gt_imgs;
        for (std::size_t t = 0; t < gt.frames.size(); ++t) {
            for (std::size_t v = 0; v < cams.size(); ++v) {
                std::vector<ScoredInstance2D> pi, gi;
                for (const auto& obs : pred.frames[t][v]) pi.push_back(instance_of(obs));
                for (const auto& obs : gt.frames[t][v]) gi.push_back(instance_of(obs));
                pred_imgs.push_back(std::move(pi));
                gt_imgs.push_back(std::move(gi));
            }
        }
        rep.ap = average_precision(pred_imgs, gt_imgs, cfg);
        if (pool.empty() && !rep.ap) {
            throw EmptyEvaluation("nothing to evaluate in either keypoint file");
        }
    }

    json j = io::metrics_to_json(rep, cfg);
    j["hands"] = hands;
    if (!a.out.empty()) {
        io::write_json_file(a.out, j);
        out << "evaluate: " << rep.frames << " frames -> " << a.out << "\n";
    } else {
        out << j.dump(2) << "\n";
    }
}

// ---------------------------------------------------------------------------
// error mapping

struct Failure {
    int code;
    const char* kind;
    std::string message;
};

Failure classify(std::exception_ptr ep) {
    try {
        std::rethrow_exception(std::move(ep));
    } catch (const InvalidArgument& e) {
        return {1, "usage", e.what()};
    } catch (const InvalidSpec& e) {
        return {1, "usage", e.what()};
    } catch (const SchemaError& e) {
        return {2, "schema", e.what()};
    } catch (const InvalidCamera& e) {
        return {2, "schema", e.what()};
    } catch (const NonPositiveDepth& e) {
        return {3, "numerical", e.what()};
    } catch (const NonFiniteObjective& e) {
        return {3, "numerical", e.what()};
    } catch (const DegenerateGeometry& e) {
        return {3, "numerical", e.what()};
    } catch (const DegenerateShape& e) {
        return {3, "numerical", e.what()};
    } catch (const ZeroLengthBone& e) {
        return {3, "numerical", e.what()};
    } catch (const UnobservedBone& e) {
        return {3, "numerical", e.what()};
    } catch (const InsufficientViews& e) {
        return {3, "numerical", e.what()};
    } catch (const EmptyEvaluation& e) {
        return {3, "numerical", e.what()};
    } catch (const Error& e) {
        return {2, "data", e.what()};
    } catch (const std::exception& e) {
        return {2, "internal", e.what()};
    } catch (...) {
        return {2, "internal", "unknown error"};
    }
}

int emit_failure(const Failure& f, bool json_errors, std::ostream& err) {
    if (json_errors) {
        json j;
        j["error"] = {{"type", f.kind}, {"message", f.message}, {"exit_code", f.code}};
        err << j.dump() << "\n";
    } else {
        err << "error: " << f.message << "\n";
    }
    return f.code;
}

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    // Honor --json-errors even when parsing itself fails.
    const bool json_errors =
        std::find(args.begin(), args.end(), "--json-errors") != args.end();

    CLI::App app{"multi-view 3D hand trajectory toolkit"};
    app.name("mvhand");
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<YamlJsonConfig>());
    app.set_config("--config", "",
                   "YAML or JSON file mirroring the flags; top-level sections "
                   "are named after the subcommands")
        ->configurable(false);
    bool json_flag = false;
    app.add_flag("--json-errors", json_flag,
                 "emit machine-parseable error JSON on stderr")
        ->configurable(false);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand(
        "simulate", "Generate a synthetic multi-camera hand scene");
    c_sim->add_option("--cameras", sim.cameras, "cameras on the ring")
        ->capture_default_str();
    c_sim->add_option("--frames", sim.frames, "frames to generate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_sim->add_option("--noise-px", sim.noise_px, "keypoint noise sigma in pixels")
        ->capture_default_str();
    c_sim->add_option("--dropout", sim.dropout, "per-keypoint dropout probability")
        ->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "random seed")->capture_default_str();
    c_sim->add_option("--out-dir", sim.out_dir, "output directory")->required();
    c_sim->callback([&] { cmd_simulate(sim, out); });

    TriangulateArgs tri;
    auto* c_tri = app.add_subcommand(
        "triangulate", "Per-frame weighted triangulation of 2D keypoints");
    c_tri->add_option("calib", tri.calib, "camera calibration JSON")->required();
    c_tri->add_option("keypoints", tri.keypoints, "2D keypoint JSON")->required();
    c_tri->add_option("--min-views", tri.min_views,
                      "minimum confident views per joint")
        ->capture_default_str();
    c_tri->add_option("--min-confidence", tri.min_confidence,
                      "zero out keypoints below this confidence")
        ->capture_default_str();
    c_tri->add_option("--out", tri.out, "output trajectory JSON")->required();
    c_tri->callback([&] { cmd_triangulate(tri, out); });

    OptimizeArgs opt;
    auto* c_opt = app.add_subcommand(
        "optimize", "Windowed trajectory optimization over 2D keypoints");
    c_opt->add_option("calib", opt.calib, "camera calibration JSON")->required();
    c_opt->add_option("keypoints", opt.keypoints, "2D keypoint JSON")->required();
    c_opt->add_option("--weights", opt.weights,
                      "loss weights reproj,smooth,shape,biomech")
        ->capture_default_str();
    c_opt->add_option("--window", opt.window, "window size in frames")
        ->capture_default_str();
    c_opt->add_option("--overlap", opt.overlap, "window overlap in frames")
        ->capture_default_str();
    c_opt->add_option("--min-confidence", opt.min_confidence,
                      "zero out keypoints below this confidence")
        ->capture_default_str();
    c_opt->add_option("--biomech-limits", opt.biomech_limits,
                      "joint angle limits JSON (defaults built in)");
    c_opt->add_option("--out", opt.out, "output trajectory JSON")->required();
    c_opt->add_option("--report", opt.report, "per-frame solve report JSON");
    c_opt->callback([&] { cmd_optimize(opt, out); });

    FitGtArgs fit;
    auto* c_fit = app.add_subcommand(
        "fit-gt", "Fit reference trajectories to dense annotations with "
                  "bone-length regularization");
    c_fit->add_option("calib", fit.calib, "camera calibration JSON")->required();
    c_fit->add_option("annotations", fit.annotations, "2D annotation JSON")
        ->required();
    c_fit->add_option("--lambda-bone", fit.lambda_bone,
                      "bone-length regularization weight")
        ->capture_default_str();
    c_fit->add_option("--out", fit.out, "output trajectory JSON")->required();
    c_fit->add_option("--lengths-out", fit.lengths_out,
                      "bone length JSON (default: derived from --out)");
    c_fit->callback([&] { cmd_fit_gt(fit, out); });

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand(
        "evaluate", "Score a prediction file against ground truth");
    c_ev->add_option("pred", ev.pred, "prediction (trajectory or keypoint JSON)")
        ->required();
    c_ev->add_option("gt", ev.gt, "ground truth (trajectory or keypoint JSON)")
        ->required();
    c_ev->add_option("--calib", ev.calib,
                     "calibration JSON (required when 2D data is involved)");
    c_ev->add_option("--mask", ev.mask, "comma-separated joints to exclude")
        ->capture_default_str();
    c_ev->add_flag("--coco-ap", ev.coco_ap,
                   "use 101-point interpolated precision for AP");
    c_ev->add_option("--out", ev.out, "write the report here instead of stdout");
    c_ev->callback([&] { cmd_evaluate(ev, out); });

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e, out, err); // --help and friends
        }
        return emit_failure({1, "usage", e.what()}, json_errors, err);
    } catch (...) {
        return emit_failure(classify(std::current_exception()), json_errors, err);
    }
}

} // namespace mvhand
