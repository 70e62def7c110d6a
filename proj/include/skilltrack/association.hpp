#ifndef SKILLTRACK_ASSOCIATION_HPP
#define SKILLTRACK_ASSOCIATION_HPP

// Track-to-detection cost:
//   cost(t, d) = D_feat(t, d) + M * [D_spatial(t, d) > lambda_sp] + M * [d.class != t.class]
// D_feat is the smallest Euclidean distance between the detection embedding and
// the track's N most recent embeddings; D_spatial is the distance between the
// detection center and the track's predicted center.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"
#include "skilltrack/hungarian.hpp"

namespace skilltrack {

struct AssociationConfig {
    double penalty = 1000.0;           // M
    double lambda_sp = 0.0;            // pixels; <= 0 selects lambda_sp_fraction * image diagonal
    double lambda_sp_fraction = 0.05;
    int gallery_size = 30;             // N
    double det_conf_min = 0.5;
    bool class_term = true;            // off only for differential tests
    bool spatial_term = true;

    double resolved_lambda_sp(const SequenceMeta& meta) const {
        return lambda_sp > 0 ? lambda_sp : lambda_sp_fraction * meta.diagonal();
    }

    void validate() const {
        if (!(penalty > 1)) throw ValidationError("association: M must exceed 1");
        if (lambda_sp <= 0 && !(lambda_sp_fraction > 0))
            throw ValidationError("association: lambda_sp must be positive");
        if (gallery_size < 1) throw ValidationError("association: gallery_N must be >= 1");
        if (!(det_conf_min >= 0 && det_conf_min <= 1)) throw ValidationError("association: det_conf_min outside [0,1]");
    }
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("embedding dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// Minimum distance from `query` to the last `recent` entries of `gallery`
/// (oldest first).
inline double feature_distance(std::span<const Embedding> gallery, std::span<const double> query,
                               std::size_t recent) {
    if (gallery.empty()) throw std::logic_error("feature_distance: track gallery is empty");
    if (recent == 0) throw ValidationError("feature_distance: recent count must be >= 1");
    auto first = gallery.size() > recent ? gallery.size() - recent : 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < gallery.size(); ++i) best = std::min(best, euclidean(gallery[i], query));
    return best;
}

/// What association needs to know about a track this frame.
struct TrackCandidate {
    int class_id = 0;
    double predicted_cx = 0, predicted_cy = 0;
    std::span<const Embedding> gallery;
};

enum GateFlag : std::uint8_t { kNoGate = 0, kSpatialGate = 1, kClassGate = 2 };

struct CostMatrix {
    Matrix<double> cost;
    Matrix<std::uint8_t> gates;

    std::size_t rows() const { return cost.rows(); }
    std::size_t cols() const { return cost.cols(); }
};

inline double spatial_distance(const TrackCandidate& t, const Detection& d) {
    return std::hypot(d.bbox.cx - t.predicted_cx, d.bbox.cy - t.predicted_cy);
}

inline CostMatrix build_cost_matrix(std::span<const TrackCandidate> tracks, std::span<const Detection> dets,
                                    const AssociationConfig& cfg, double lambda_sp) {
    CostMatrix m{Matrix<double>(tracks.size(), dets.size()), Matrix<std::uint8_t>(tracks.size(), dets.size())};
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        for (std::size_t d = 0; d < dets.size(); ++d) {
            double c = feature_distance(tracks[t].gallery, dets[d].embedding, std::size_t(cfg.gallery_size));
            std::uint8_t flags = kNoGate;
            if (cfg.spatial_term && spatial_distance(tracks[t], dets[d]) > lambda_sp) {
                c += cfg.penalty;
                flags |= kSpatialGate;
            }
            if (cfg.class_term && dets[d].class_id != tracks[t].class_id) {
                c += cfg.penalty;
                flags |= kClassGate;
            }
            m.cost(t, d) = c;
            m.gates(t, d) = flags;
        }
    }
    return m;
}

/// Pad value for rectangular problems: above every real entry and >= M.
inline double padding_cost(const Matrix<double>& cost, double penalty) {
    double hi = penalty;
    for (double v : cost.data()) hi = std::max(hi, v);
    return hi + 1;
}

inline Assignment solve(const CostMatrix& m, const AssociationConfig& cfg) {
    return hungarian(m.cost, padding_cost(m.cost, cfg.penalty));
}

/// Rejects pairs whose cost reached the penalty M.
inline Assignment gate_assignments(const Assignment& raw, const Matrix<double>& cost, double penalty) {
    Assignment out;
    out.unmatched_rows = raw.unmatched_rows;
    out.unmatched_cols = raw.unmatched_cols;
    for (auto [r, c] : raw.pairs) {
        if (cost(r, c) < penalty) {
            out.pairs.emplace_back(r, c);
        } else {
            out.unmatched_rows.push_back(r);
            out.unmatched_cols.push_back(c);
        }
    }
    std::sort(out.unmatched_rows.begin(), out.unmatched_rows.end());
    std::sort(out.unmatched_cols.begin(), out.unmatched_cols.end());
    return out;
}

inline Assignment gate_assignments(const Assignment& raw, const CostMatrix& m, const AssociationConfig& cfg) {
    return gate_assignments(raw, m.cost, cfg.penalty);
}

}  // namespace skilltrack

#endif
