#ifndef SKILLTRACK_TRACK_ENGINE_HPP
#define SKILLTRACK_TRACK_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "skilltrack/association.hpp"
#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"
#include "skilltrack/kalman_filter.hpp"

namespace skilltrack {

enum class TrackStatus { Active, Inactive, Deleted };

struct TrackerConfig {
    AssociationConfig association;
    KalmanConfig kalman;
    bool scale_kalman_to_image = true;  // derive process noise from the image diagonal
    int max_inactive_frames = 250;      // 0 disables recovery
    double recovery_lambda_sp_growth = 1.02;
    double recovery_feat_max = 0.7;

    void validate() const {
        association.validate();
        kalman.validate();
        if (max_inactive_frames < 0) throw ValidationError("tracker: max_inactive_frames must be >= 0");
        if (!(recovery_lambda_sp_growth >= 1)) throw ValidationError("tracker: recovery gate growth must be >= 1");
        if (!(recovery_feat_max > 0)) throw ValidationError("tracker: recovery_feat_max must be positive");
    }
};

struct Track {
    int id = 0;
    int class_id = 0;
    TrackStatus status = TrackStatus::Active;
    KalmanState kalman;
    int kalman_frame = 0;                 // frame the Kalman state refers to
    std::vector<Embedding> gallery;       // most recent last
    std::vector<std::pair<int, CenterBox>> history;
    int last_seen = 0;
    std::optional<int> inactive_since;

    TrackCandidate candidate() const { return {class_id, kalman.cx(), kalman.cy(), gallery}; }
};

/// An inactive track as seen by recovery.
struct RecoveryCandidate {
    TrackCandidate track;
    int frames_inactive = 0;
};

/// Recovery cost: D_feat, multiplied by M when the detection is both outside
/// the (inactivity-widened) spatial gate and of a different class.
inline double recovery_cost(double d_feat, bool spatially_far, bool class_mismatch, double penalty) {
    return (spatially_far && class_mismatch) ? d_feat * penalty : d_feat;
}

struct RecoveryMatch {
    std::size_t detection;  // index into the detections passed to recover()
    std::size_t track;      // index into the candidates passed to recover()
    double cost;
};

inline std::vector<RecoveryMatch> recover(std::span<const Detection> dets, std::span<const RecoveryCandidate> inactive,
                                          const TrackerConfig& cfg, double lambda_sp) {
    std::vector<RecoveryMatch> matches;
    if (dets.empty() || inactive.empty()) return matches;
    const auto& assoc = cfg.association;

    Matrix<double> cost(inactive.size(), dets.size());
    for (std::size_t t = 0; t < inactive.size(); ++t) {
        const auto& cand = inactive[t];
        double gate = lambda_sp * std::pow(cfg.recovery_lambda_sp_growth, cand.frames_inactive);
        for (std::size_t d = 0; d < dets.size(); ++d) {
            double feat = feature_distance(cand.track.gallery, dets[d].embedding, std::size_t(assoc.gallery_size));
            bool far = spatial_distance(cand.track, dets[d]) > gate;
            bool mismatch = assoc.class_term && dets[d].class_id != cand.track.class_id;
            cost(t, d) = recovery_cost(feat, far, mismatch, assoc.penalty);
        }
    }
    const double ceiling = std::min(assoc.penalty, cfg.recovery_feat_max);
    auto solved = hungarian(cost, padding_cost(cost, assoc.penalty));
    for (auto [t, d] : solved.pairs)
        if (cost(t, d) < ceiling) matches.push_back({d, t, cost(t, d)});
    std::sort(matches.begin(), matches.end(), [](auto& a, auto& b) { return a.detection < b.detection; });
    return matches;
}

/// What happened to the detections of one frame.
struct StepReport {
    struct Link {
        int track_id;
        int track_class;
        int detection_class;
    };
    std::vector<Link> associated;  // accepted by the active-track assignment
    std::vector<Link> recovered;
    std::vector<int> created;      // new track ids
    std::size_t dropped_low_confidence = 0;
};

/// Online tracker over one sequence. Frames must arrive in increasing order.
class Tracker {
public:
    Tracker(TrackerConfig cfg, SequenceMeta meta)
        : cfg_(std::move(cfg)), meta_(meta) {
        meta_.validate();
        cfg_.validate();
        if (cfg_.scale_kalman_to_image) {
            double diag = meta_.diagonal();
            cfg_.kalman.process_position_std = diag / 160.0;
            cfg_.kalman.process_area_std = std::pow(diag / 160.0, 2);
        }
        filter_ = BoxKalmanFilter(cfg_.kalman);
        lambda_sp_ = cfg_.association.resolved_lambda_sp(meta_);
    }

    const TrackerConfig& config() const { return cfg_; }
    double lambda_sp() const { return lambda_sp_; }
    const std::vector<Track>& tracks() const { return tracks_; }
    const StepReport& last_report() const { return report_; }
    bool recovery_enabled() const { return cfg_.max_inactive_frames > 0; }

    /// Processes one frame: predict, associate active tracks, gate, retire
    /// unmatched tracks, recover, create new tracks, update. Returns one record
    /// per track matched in this frame, sorted by track id.
    std::vector<TrackRecord> step(const FrameDetections& frame) {
        if (last_frame_ && frame.frame <= *last_frame_)
            throw SequenceError("frame " + std::to_string(frame.frame) + " does not follow frame " +
                                std::to_string(*last_frame_));
        last_frame_ = frame.frame;
        const int now = frame.frame;
        report_ = {};

        std::vector<Detection> dets;
        for (const auto& d : frame.detections) {
            if (d.confidence >= cfg_.association.det_conf_min)
                dets.push_back(d);
            else
                ++report_.dropped_low_confidence;
        }

        purge(now);
        for (auto& t : tracks_) {
            if (t.status == TrackStatus::Deleted) continue;
            t.kalman = filter_.predict(t.kalman, now - t.kalman_frame);
            t.kalman_frame = now;
        }

        std::vector<TrackRecord> out;
        std::vector<char> det_used(dets.size(), false);

        // Association with active tracks.
        std::vector<std::size_t> active;
        std::vector<TrackCandidate> candidates;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (tracks_[i].status != TrackStatus::Active) continue;
            active.push_back(i);
            candidates.push_back(tracks_[i].candidate());
        }
        auto costs = build_cost_matrix(candidates, dets, cfg_.association, lambda_sp_);
        auto accepted = gate_assignments(solve(costs, cfg_.association), costs, cfg_.association);
        for (auto [row, col] : accepted.pairs) {
            Track& t = tracks_[active[row]];
            report_.associated.push_back({t.id, t.class_id, dets[col].class_id});
            absorb(t, dets[col], now, out);
            t.kalman = filter_.update(t.kalman, dets[col]);
            det_used[col] = true;
        }
        for (auto row : accepted.unmatched_rows) {
            Track& t = tracks_[active[row]];
            t.status = TrackStatus::Inactive;
            t.inactive_since = now;
        }

        // Recovery of inactive tracks from the leftover detections.
        std::vector<std::size_t> leftover;
        for (std::size_t d = 0; d < dets.size(); ++d)
            if (!det_used[d]) leftover.push_back(d);
        if (recovery_enabled() && !leftover.empty()) {
            std::vector<std::size_t> inactive;
            std::vector<RecoveryCandidate> pool;
            for (std::size_t i = 0; i < tracks_.size(); ++i) {
                const Track& t = tracks_[i];
                if (t.status != TrackStatus::Inactive) continue;
                inactive.push_back(i);
                pool.push_back({t.candidate(), now - *t.inactive_since});
            }
            std::vector<Detection> pending;
            for (auto d : leftover) pending.push_back(dets[d]);
            for (const auto& m : recover(pending, pool, cfg_, lambda_sp_)) {
                Track& t = tracks_[inactive[m.track]];
                const Detection& d = dets[leftover[m.detection]];
                report_.recovered.push_back({t.id, t.class_id, d.class_id});
                t.status = TrackStatus::Active;
                t.inactive_since.reset();
                absorb(t, d, now, out);
                t.kalman = filter_.initiate(d);
                det_used[leftover[m.detection]] = true;
            }
        }

        // Everything else seeds a new track.
        for (std::size_t d = 0; d < dets.size(); ++d) {
            if (det_used[d]) continue;
            Track t;
            t.id = next_id_++;
            t.class_id = dets[d].class_id;
            t.kalman = filter_.initiate(dets[d]);
            t.kalman_frame = now;
            absorb(t, dets[d], now, out);
            report_.created.push_back(t.id);
            tracks_.push_back(std::move(t));
        }

        std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.track_id < b.track_id; });
        return out;
    }

private:
    void purge(int now) {
        for (auto& t : tracks_) {
            if (t.status != TrackStatus::Inactive) continue;
            if (!recovery_enabled() || now - *t.inactive_since > cfg_.max_inactive_frames) {
                t.status = TrackStatus::Deleted;
                t.gallery.clear();
            }
        }
    }

    void absorb(Track& t, const Detection& d, int now, std::vector<TrackRecord>& out) const {
        t.gallery.push_back(d.embedding);
        if (t.gallery.size() > std::size_t(cfg_.association.gallery_size)) t.gallery.erase(t.gallery.begin());
        t.history.emplace_back(now, d.bbox);
        t.last_seen = now;
        out.push_back({now, t.id, to_tlwh(d.bbox), d.confidence, t.class_id});
    }

    TrackerConfig cfg_;
    SequenceMeta meta_;
    BoxKalmanFilter filter_;
    double lambda_sp_ = 0;
    std::vector<Track> tracks_;
    std::optional<int> last_frame_;
    int next_id_ = 1;
    StepReport report_;
};

/// Tracks a whole sequence; records are sorted by (frame, track id).
inline std::vector<TrackRecord> run_tracker(const DetectionSequence& seq, const TrackerConfig& cfg) {
    Tracker tracker(cfg, seq.meta);
    std::vector<TrackRecord> records;
    for (const auto& frame : seq.frames) {
        auto emitted = tracker.step(frame);
        records.insert(records.end(), emitted.begin(), emitted.end());
    }
    return records;
}

}  // namespace skilltrack

#endif
