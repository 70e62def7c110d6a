#ifndef SKILLTRACK_MOT_EVAL_HPP
#define SKILLTRACK_MOT_EVAL_HPP

// CLEAR-MOT evaluation: per-frame IoU matching with carryover of previous
// correspondences, then TP/FP/FN/ID-switch accounting and MOTA.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"
#include "skilltrack/hungarian.hpp"

namespace skilltrack {

inline double iou(const TlwhBox& a, const TlwhBox& b) {
    double ix = std::max(0.0, std::min(a.left + a.w, b.left + b.w) - std::max(a.left, b.left));
    double iy = std::max(0.0, std::min(a.top + a.h, b.top + b.h) - std::max(a.top, b.top));
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

struct LabeledBox {
    int id = 0;
    TlwhBox box;
};

struct FrameEvents {
    int frame = 0;
    std::int64_t tp = 0, fp = 0, fn = 0, id_switches = 0, num_gt = 0;
    std::vector<std::pair<int, int>> matches;  // (gt id, predicted id)
};

/// Ground-truth id -> predicted id of its most recent match.
using Carryover = std::map<int, int>;

/// Matches one frame. A ground-truth box keeps its previous predicted id when
/// that prediction is present and still overlaps by at least `iou_min`; the rest
/// are matched with maximum cardinality, then minimum total (1 - IoU). Updates
/// `carryover` with this frame's matches.
inline FrameEvents match_frame(std::span<const LabeledBox> gt, std::span<const LabeledBox> pred, double iou_min,
                               Carryover& carryover, int frame = 0) {
    if (!(iou_min > 0 && iou_min < 1)) throw ValidationError("iou threshold must lie in (0,1)");
    FrameEvents ev;
    ev.frame = frame;
    ev.num_gt = std::int64_t(gt.size());

    std::vector<char> gt_done(gt.size(), false), pred_done(pred.size(), false);
    for (std::size_t g = 0; g < gt.size(); ++g) {
        auto prev = carryover.find(gt[g].id);
        if (prev == carryover.end()) continue;
        for (std::size_t p = 0; p < pred.size(); ++p) {
            if (pred_done[p] || pred[p].id != prev->second) continue;
            if (iou(gt[g].box, pred[p].box) >= iou_min) {
                gt_done[g] = pred_done[p] = true;
                ev.matches.emplace_back(gt[g].id, pred[p].id);
            }
            break;
        }
    }

    std::vector<std::size_t> gs, ps;
    for (std::size_t g = 0; g < gt.size(); ++g)
        if (!gt_done[g]) gs.push_back(g);
    for (std::size_t p = 0; p < pred.size(); ++p)
        if (!pred_done[p]) ps.push_back(p);
    if (!gs.empty() && !ps.empty()) {
        // Infeasible pairs cost more than any feasible matching of larger size.
        const double infeasible = double(std::min(gs.size(), ps.size()) + 1);
        Matrix<double> cost(gs.size(), ps.size());
        for (std::size_t i = 0; i < gs.size(); ++i)
            for (std::size_t j = 0; j < ps.size(); ++j) {
                double o = iou(gt[gs[i]].box, pred[ps[j]].box);
                cost(i, j) = o >= iou_min ? 1.0 - o : infeasible;
            }
        for (auto [i, j] : hungarian(cost, infeasible).pairs)
            if (cost(i, j) < infeasible) ev.matches.emplace_back(gt[gs[i]].id, pred[ps[j]].id);
    }

    for (auto [g, p] : ev.matches) {
        auto prev = carryover.find(g);
        if (prev != carryover.end() && prev->second != p) ++ev.id_switches;
        carryover[g] = p;
    }
    std::sort(ev.matches.begin(), ev.matches.end());
    ev.tp = std::int64_t(ev.matches.size());
    ev.fp = std::int64_t(pred.size()) - ev.tp;
    ev.fn = ev.num_gt - ev.tp;
    return ev;
}

struct MotSummary {
    std::int64_t id_switches = 0;
    double mota = 0;
    std::int64_t fp = 0, fn = 0, tp = 0;
    double precision = 0, recall = 0;
    std::int64_t num_gt_objects = 0;
};

struct MotCounts {
    std::int64_t fp = 0, fn = 0, id_switches = 0, num_gt_objects = 0;
    std::int64_t tp() const { return num_gt_objects - fn; }
};

/// Precision is 0 when there are no predictions.
inline MotSummary summarize(const MotCounts& c) {
    if (c.num_gt_objects <= 0) throw InsufficientDataError("MOT summary undefined without ground-truth objects");
    if (c.fn > c.num_gt_objects || c.fp < 0 || c.fn < 0 || c.id_switches < 0)
        throw ValidationError("MOT counts are inconsistent");
    MotSummary s;
    s.fp = c.fp;
    s.fn = c.fn;
    s.id_switches = c.id_switches;
    s.num_gt_objects = c.num_gt_objects;
    s.tp = c.tp();
    s.mota = 1.0 - double(s.fp + s.fn + s.id_switches) / double(s.num_gt_objects);
    s.precision = s.tp + s.fp > 0 ? double(s.tp) / double(s.tp + s.fp) : 0.0;
    s.recall = double(s.tp) / double(s.num_gt_objects);
    return s;
}

inline MotSummary summarize(std::span<const FrameEvents> events) {
    MotCounts c;
    for (const auto& e : events) {
        c.fp += e.fp;
        c.fn += e.fn;
        c.id_switches += e.id_switches;
        c.num_gt_objects += e.num_gt;
    }
    return summarize(c);
}

/// Per-frame events over the frames that carry ground truth. Predictions on
/// frames without ground truth are not scored.
inline std::vector<FrameEvents> match_sequence(const std::vector<TrackRecord>& gt,
                                               const std::vector<TrackRecord>& pred, double iou_min = 0.5) {
    std::map<int, std::vector<LabeledBox>> gt_by_frame, pred_by_frame;
    for (const auto& r : gt) gt_by_frame[r.frame].push_back({r.track_id, r.bbox});
    for (const auto& r : pred) pred_by_frame[r.frame].push_back({r.track_id, r.bbox});

    Carryover carry;
    std::vector<FrameEvents> events;
    const std::vector<LabeledBox> none;
    for (const auto& [frame, boxes] : gt_by_frame) {
        auto it = pred_by_frame.find(frame);
        const auto& preds = it == pred_by_frame.end() ? none : it->second;
        events.push_back(match_frame(boxes, preds, iou_min, carry, frame));
    }
    return events;
}

inline MotSummary evaluate(const std::vector<TrackRecord>& gt, const std::vector<TrackRecord>& pred,
                           double iou_min = 0.5) {
    auto events = match_sequence(gt, pred, iou_min);
    return summarize(events);
}

inline nlohmann::ordered_json to_json(const MotSummary& s) {
    nlohmann::ordered_json j;
    j["id_switches"] = s.id_switches;
    j["mota"] = s.mota;
    j["fp"] = s.fp;
    j["fn"] = s.fn;
    j["tp"] = s.tp;
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    j["num_gt_objects"] = s.num_gt_objects;
    return j;
}

}  // namespace skilltrack

#endif
