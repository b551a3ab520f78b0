#include "mvhand/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mvhand {

namespace {

void check_thresholds(const std::vector<double>& t, const char* name) {
    if (t.empty()) throw InvalidArgument(std::string(name) + " must not be empty");
    for (size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0)) throw InvalidArgument(std::string(name) + " must be positive");
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw InvalidArgument(std::string(name) + " must be strictly increasing");
        }
    }
}

double mean_or_throw(const std::vector<double>& v, const char* what) {
    if (v.empty()) {
        throw EmptyEvaluation(std::string("no evaluated pairs for ") + what);
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

} // namespace

void MetricsConfig::validate() const {
    check_thresholds(pck2d_thresholds, "pck2d_thresholds");
    check_thresholds(pck3d_thresholds, "pck3d_thresholds");
    check_thresholds(oks_thresholds, "oks_thresholds");
    for (double s : oks_sigma) {
        if (!(s > 0.0)) throw InvalidArgument("oks sigmas must be positive");
    }
    if (std::none_of(joint_mask.begin(), joint_mask.end(), [](bool b) { return b; })) {
        throw InvalidArgument("joint mask must keep at least one joint");
    }
}

std::vector<double> errors_3d(const std::vector<HandPose3D>& pred,
                              const std::vector<HandPose3D>& gt,
                              const std::array<bool, kJointCount>& mask) {
    if (pred.size() != gt.size()) {
        throw InvalidArgument("prediction and ground-truth sequences differ in length");
    }
    std::vector<double> pool;
    for (size_t f = 0; f < pred.size(); ++f) {
        for (int j = 0; j < kJointCount; ++j) {
            if (!mask[j] || !gt[f].valid[j] || !pred[f].valid[j]) continue;
            pool.push_back((pred[f].joints[j] - gt[f].joints[j]).norm());
        }
    }
    return pool;
}

std::vector<double> errors_2d_projected(const std::vector<HandPose3D>& pred,
                                        const std::vector<FrameObservations>& gt2d,
                                        const std::vector<CameraParams>& cams,
                                        const std::array<bool, kJointCount>& mask) {
    if (pred.size() != gt2d.size()) {
        throw InvalidArgument("prediction and annotation sequences differ in length");
    }
    std::vector<double> pool;
    for (size_t f = 0; f < pred.size(); ++f) {
        if (gt2d[f].size() != cams.size()) {
            throw InvalidArgument("annotation view count does not match camera count");
        }
        for (size_t v = 0; v < cams.size(); ++v) {
            if (!gt2d[f][v]) continue;
            for (int j = 0; j < kJointCount; ++j) {
                const Keypoint2D& kp = gt2d[f][v]->keypoints[j];
                if (!mask[j] || !kp.present() || !pred[f].valid[j]) continue;
                if (cams[v].camera_frame(pred[f].joints[j]).z() <= kMinDepthMm) continue;
                pool.push_back((project(pred[f].joints[j], cams[v]) - kp.position).norm());
            }
        }
    }
    return pool;
}

std::vector<double> errors_2d_direct(const std::vector<FrameObservations>& pred2d,
                                     const std::vector<FrameObservations>& gt2d,
                                     const std::array<bool, kJointCount>& mask) {
    if (pred2d.size() != gt2d.size()) {
        throw InvalidArgument("prediction and annotation sequences differ in length");
    }
    std::vector<double> pool;
    for (size_t f = 0; f < pred2d.size(); ++f) {
        if (pred2d[f].size() != gt2d[f].size()) {
            throw InvalidArgument("view counts differ at frame " + std::to_string(f));
        }
        for (size_t v = 0; v < pred2d[f].size(); ++v) {
            if (!pred2d[f][v] || !gt2d[f][v]) continue;
            for (int j = 0; j < kJointCount; ++j) {
                const Keypoint2D& p = pred2d[f][v]->keypoints[j];
                const Keypoint2D& g = gt2d[f][v]->keypoints[j];
                if (!mask[j] || !p.present() || !g.present()) continue;
                pool.push_back((p.position - g.position).norm());
            }
        }
    }
    return pool;
}

double mpjpe(const std::vector<HandPose3D>& pred, const std::vector<HandPose3D>& gt,
             const std::array<bool, kJointCount>& mask) {
    return mean_or_throw(errors_3d(pred, gt, mask), "mpjpe");
}

double mre(const std::vector<HandPose3D>& pred,
           const std::vector<FrameObservations>& gt2d,
           const std::vector<CameraParams>& cams,
           const std::array<bool, kJointCount>& mask) {
    return mean_or_throw(errors_2d_projected(pred, gt2d, cams, mask), "mre");
}

double mje(const std::vector<FrameObservations>& pred2d,
           const std::vector<FrameObservations>& gt2d,
           const std::array<bool, kJointCount>& mask) {
    return mean_or_throw(errors_2d_direct(pred2d, gt2d, mask), "mje");
}

std::vector<double> pck_fractions(const std::vector<double>& errors,
                                  const std::vector<double>& thresholds) {
    check_thresholds(thresholds, "thresholds");
    std::vector<double> out(thresholds.size(), 0.0);
    if (errors.empty()) return out;
    for (size_t i = 0; i < thresholds.size(); ++i) {
        long hits = 0;
        for (double e : errors) {
            if (e < thresholds[i]) ++hits;
        }
        out[i] = static_cast<double>(hits) / errors.size();
    }
    return out;
}

double mpck(const std::vector<double>& fractions) {
    if (fractions.empty()) throw InvalidArgument("no fractions to average");
    return std::accumulate(fractions.begin(), fractions.end(), 0.0) / fractions.size();
}

double oks(const ScoredInstance2D& pred, const ScoredInstance2D& gt,
           const std::array<double, kJointCount>& sigma) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    int visible = 0;
    for (int j = 0; j < kJointCount; ++j) {
        if (!gt.visible[j]) continue;
        ++visible;
        lo_x = std::min(lo_x, gt.keypoints[j].x());
        hi_x = std::max(hi_x, gt.keypoints[j].x());
        lo_y = std::min(lo_y, gt.keypoints[j].y());
        hi_y = std::max(hi_y, gt.keypoints[j].y());
    }
    if (visible == 0) return 0.0;
    const double s2 = std::max((hi_x - lo_x) * (hi_y - lo_y), 1e-12);

    double sum = 0.0;
    for (int j = 0; j < kJointCount; ++j) {
        if (!gt.visible[j]) continue;
        const double d2 = (pred.keypoints[j] - gt.keypoints[j]).squaredNorm();
        sum += std::exp(-d2 / (2.0 * s2 * sigma[j] * sigma[j]));
    }
    return sum / visible;
}

namespace {

struct Detection {
    double score = 0.0;
    bool tp = false;
};

// Greedy per-image matching at one OKS threshold: predictions in descending
// score order each take the unmatched gt with the highest OKS, true positive
// when that OKS clears the threshold. Sub-threshold pairs do not consume the
// gt, so every threshold gets its own matching.
std::vector<Detection> match_detections(
    const std::vector<std::vector<ScoredInstance2D>>& preds,
    const std::vector<std::vector<ScoredInstance2D>>& gts,
    const std::array<double, kJointCount>& sigma, double tau) {
    std::vector<Detection> all;
    for (size_t img = 0; img < preds.size(); ++img) {
        std::vector<int> order(preds[img].size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return preds[img][a].score > preds[img][b].score;
        });

        std::vector<bool> taken(gts[img].size(), false);
        for (int p : order) {
            Detection det;
            det.score = preds[img][p].score;
            int best = -1;
            double best_oks = -1.0;
            for (size_t g = 0; g < gts[img].size(); ++g) {
                if (taken[g]) continue;
                const double o = oks(preds[img][p], gts[img][g], sigma);
                if (o >= tau && o > best_oks) {
                    best_oks = o;
                    best = static_cast<int>(g);
                }
            }
            if (best >= 0) {
                taken[best] = true;
                det.tp = true;
            }
            all.push_back(det);
        }
    }
    return all;
}

double interpolated_ap(std::vector<Detection> dets, long gt_total) {
    if (gt_total == 0) return 0.0;
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<double> precision, recall;
    long tp = 0, fp = 0;
    for (const Detection& d : dets) {
        (d.tp ? tp : fp)++;
        precision.push_back(static_cast<double>(tp) / (tp + fp));
        recall.push_back(static_cast<double>(tp) / gt_total);
    }
    // Monotone envelope, then 101-point sampling.
    for (size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        sum += it == recall.end() ? 0.0 : precision[it - recall.begin()];
    }
    return sum / 101.0;
}

} // namespace

std::optional<double> average_precision(
    const std::vector<std::vector<ScoredInstance2D>>& preds,
    const std::vector<std::vector<ScoredInstance2D>>& gts,
    const MetricsConfig& cfg) {
    cfg.validate();
    if (preds.size() != gts.size()) {
        throw InvalidArgument("prediction and ground-truth image counts differ");
    }

    long gt_total = 0, det_total = 0;
    for (const auto& g : gts) gt_total += static_cast<long>(g.size());
    for (const auto& p : preds) det_total += static_cast<long>(p.size());
    if (det_total == 0 && gt_total == 0) return std::nullopt;

    double sum = 0.0;
    for (double tau : cfg.oks_thresholds) {
        std::vector<Detection> dets = match_detections(preds, gts, cfg.oks_sigma, tau);
        if (cfg.coco_interpolated_ap) {
            sum += interpolated_ap(std::move(dets), gt_total);
            continue;
        }
        long tp = 0;
        for (const Detection& d : dets) tp += d.tp ? 1 : 0;
        sum += dets.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(dets.size());
    }
    return sum / cfg.oks_thresholds.size();
}

std::vector<std::pair<int, int>> match_hands(const std::vector<HandPose3D>& pred,
                                             const std::vector<HandPose3D>& gt,
                                             double gate_mm) {
    std::vector<std::pair<int, int>> out;
    std::vector<bool> p_used(pred.size(), false), g_used(gt.size(), false);
    for (;;) {
        double best = gate_mm;
        int bp = -1, bg = -1;
        for (size_t p = 0; p < pred.size(); ++p) {
            if (p_used[p] || !pred[p].valid[kWristJoint]) continue;
            for (size_t g = 0; g < gt.size(); ++g) {
                if (g_used[g] || !gt[g].valid[kWristJoint]) continue;
                const double d =
                    (pred[p].joints[kWristJoint] - gt[g].joints[kWristJoint]).norm();
                if (d < best) {
                    best = d;
                    bp = static_cast<int>(p);
                    bg = static_cast<int>(g);
                }
            }
        }
        if (bp < 0) break;
        p_used[bp] = true;
        g_used[bg] = true;
        out.emplace_back(bp, bg);
    }
    return out;
}

MetricsReport build_report(const std::vector<HandPose3D>& pred,
                           const std::vector<HandPose3D>& gt3d,
                           const std::vector<FrameObservations>& gt2d,
                           const std::vector<CameraParams>& cams,
                           const MetricsConfig& cfg) {
    cfg.validate();
    MetricsReport rep;
    rep.frames = static_cast<long>(pred.size());

    if (!gt3d.empty()) {
        const std::vector<double> e3 = errors_3d(pred, gt3d, cfg.joint_mask);
        rep.evaluated_3d = static_cast<long>(e3.size());
        if (!e3.empty()) {
            rep.mpjpe_mm = std::accumulate(e3.begin(), e3.end(), 0.0) / e3.size();
            rep.pck3d = pck_fractions(e3, cfg.pck3d_thresholds);
            rep.mpck3d = mpck(rep.pck3d);
        }
    }
    if (!gt2d.empty()) {
        const std::vector<double> e2 =
            errors_2d_projected(pred, gt2d, cams, cfg.joint_mask);
        rep.evaluated_2d = static_cast<long>(e2.size());
        if (!e2.empty()) {
            rep.mre_px = std::accumulate(e2.begin(), e2.end(), 0.0) / e2.size();
            rep.pck2d = pck_fractions(e2, cfg.pck2d_thresholds);
            rep.mpck2d = mpck(rep.pck2d);
            rep.pck2d_source = "projected_3d";
        }
    }
    return rep;
}

MetricsReport build_report_2d(const std::vector<FrameObservations>& pred2d,
                              const std::vector<FrameObservations>& gt2d,
                              const MetricsConfig& cfg) {
    cfg.validate();
    MetricsReport rep;
    rep.frames = static_cast<long>(pred2d.size());

    const std::vector<double> e2 = errors_2d_direct(pred2d, gt2d, cfg.joint_mask);
    rep.evaluated_2d = static_cast<long>(e2.size());
    if (!e2.empty()) {
        rep.mje_px = std::accumulate(e2.begin(), e2.end(), 0.0) / e2.size();
        rep.pck2d = pck_fractions(e2, cfg.pck2d_thresholds);
        rep.mpck2d = mpck(rep.pck2d);
        rep.pck2d_source = "direct_2d";
    }
    return rep;
}

} // namespace mvhand
