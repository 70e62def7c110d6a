#ifndef SKILLTRACK_MOTION_FEATURES_HPP
#define SKILLTRACK_MOTION_FEATURES_HPP

// Main-tool trajectory extraction and hand-crafted motion metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"

namespace skilltrack {

/// Half-open frame range [begin, end).
struct FrameWindow {
    int begin = 0;
    int end = 0;
    int length() const { return end - begin; }
    bool contains(int f) const { return f >= begin && f < end; }
};

/// The trailing `seconds` of a sequence that ends (exclusive) at `end_frame`.
inline FrameWindow trailing_window(int end_frame, double seconds, double fps) {
    int len = int(std::lround(seconds * fps));
    return {std::max(0, end_frame - len), end_frame};
}

struct TrajectorySeries {
    std::vector<int> t;
    std::vector<double> x, y, area;
    std::vector<std::uint8_t> present;
    double fps = 25.0;
    int image_width = 1920, image_height = 1080;

    std::size_t size() const { return t.size(); }
    std::size_t present_count() const { return std::size_t(std::count(present.begin(), present.end(), 1)); }
    double diagonal() const { return std::hypot(double(image_width), double(image_height)); }
};

struct MotionFeatureVector {
    double path_length = 0;        // px
    double mean_velocity = 0;      // px/s
    double mean_acceleration = 0;  // px/s^2
    double mean_jerk = 0;          // px/s^3
    double mean_curvature = 0;     // 1/px
    std::optional<double> tortuosity;  // empty when the path nearly closes on itself
    double mean_turning_angle = 0;     // radians, unsigned
    double motion_ratio = 0;

    static constexpr std::array<const char*, 8> kNames{"path_length",    "mean_velocity", "mean_acceleration",
                                                       "mean_jerk",      "mean_curvature", "tortuosity",
                                                       "mean_turning_angle", "motion_ratio"};

    std::array<double, 8> values() const {
        return {path_length, mean_velocity, mean_acceleration, mean_jerk, mean_curvature,
                tortuosity.value_or(std::nan("")), mean_turning_angle, motion_ratio};
    }
};

/// Track present in the most frames of `window`; ties go to the smaller id.
inline int select_main_track(const std::vector<TrackRecord>& records, FrameWindow window) {
    if (window.length() <= 0) throw ValidationError("main track selection: empty window");
    std::map<int, int> presence;
    for (const auto& r : records)
        if (window.contains(r.frame)) ++presence[r.track_id];
    if (presence.empty()) throw InsufficientDataError("no track present in the selected window");
    int best_id = 0, best_count = -1;
    for (auto [id, count] : presence)
        if (count > best_count) best_id = id, best_count = count;  // map order: smaller id wins ties
    return best_id;
}

/// Dense series of one track over `window`. Gaps of at most `gap_fill_max`
/// frames between two present samples are linearly interpolated (still marked
/// absent); other absent samples hold zeros.
inline TrajectorySeries to_series(const std::vector<TrackRecord>& records, int track_id, FrameWindow window,
                                  const SequenceMeta& meta, int gap_fill_max = 5) {
    TrajectorySeries s;
    s.fps = meta.fps;
    s.image_width = meta.image_width;
    s.image_height = meta.image_height;
    const std::size_t n = std::size_t(std::max(0, window.length()));
    s.t.resize(n);
    s.x.assign(n, 0);
    s.y.assign(n, 0);
    s.area.assign(n, 0);
    s.present.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) s.t[i] = window.begin + int(i);

    for (const auto& r : records) {
        if (r.track_id != track_id || !window.contains(r.frame)) continue;
        auto i = std::size_t(r.frame - window.begin);
        s.x[i] = r.bbox.cx();
        s.y[i] = r.bbox.cy();
        s.area[i] = r.bbox.area();
        s.present[i] = 1;
    }

    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.present[i]) continue;
        if (prev && i - *prev > 1 && i - *prev - 1 <= std::size_t(gap_fill_max)) {
            const std::size_t a = *prev;
            const double span = double(i - a);
            for (std::size_t k = a + 1; k < i; ++k) {
                double u = double(k - a) / span;
                s.x[k] = s.x[a] + u * (s.x[i] - s.x[a]);
                s.y[k] = s.y[a] + u * (s.y[i] - s.y[a]);
                s.area[k] = s.area[a] + u * (s.area[i] - s.area[a]);
            }
        }
        prev = i;
    }
    return s;
}

/// Contiguous sub-window of `length` samples at a uniformly drawn offset.
inline TrajectorySeries sample_window(const TrajectorySeries& s, std::size_t length, std::uint64_t seed) {
    if (length == 0 || length > s.size())
        throw ValidationError("sample window length " + std::to_string(length) + " exceeds series length " +
                              std::to_string(s.size()));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> offset_dist(0, s.size() - length);
    const std::size_t off = offset_dist(rng);
    auto cut = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + off, v.begin() + off + length); };
    TrajectorySeries out = s;
    out.t = cut(s.t);
    out.x = cut(s.x);
    out.y = cut(s.y);
    out.area = cut(s.area);
    out.present = cut(s.present);
    return out;
}

namespace detail {

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double norm() const { return std::hypot(x, y); }
};

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Maximal runs of consecutive present samples.
inline std::vector<std::vector<Vec2>> present_spans(const TrajectorySeries& s) {
    std::vector<std::vector<Vec2>> spans;
    std::vector<Vec2> cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.present[i]) {
            cur.push_back({s.x[i], s.y[i]});
        } else if (!cur.empty()) {
            spans.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) spans.push_back(std::move(cur));
    return spans;
}

struct RunningMean {
    double sum = 0;
    std::size_t n = 0;
    void add(double v) { sum += v, ++n; }
    double value() const { return n ? sum / double(n) : 0.0; }
};

}  // namespace detail

/// Default stillness threshold: 2% of the image diagonal per second.
inline double default_motion_eps(const TrajectorySeries& s) { return 0.02 * s.diagonal(); }

/// Motion metrics over present samples. Differences never cross a gap in the
/// presence mask. Velocity uses central differences (one-sided at span edges),
/// acceleration the central second difference, jerk the four-point third
/// difference. Curvature and turning angle are averaged over samples in motion
/// (speed above `motion_eps`, px/s); tortuosity is path length over the summed
/// span chords and is left empty when those chords total under 1 px.
inline MotionFeatureVector compute_features(const TrajectorySeries& s, std::optional<double> motion_eps = {}) {
    using detail::Vec2;
    if (!(s.fps > 0)) throw ValidationError("series fps must be positive");
    const double eps = motion_eps.value_or(default_motion_eps(s));
    const double fps = s.fps;

    auto spans = detail::present_spans(s);
    std::size_t longest = 0;
    for (const auto& sp : spans) longest = std::max(longest, sp.size());
    if (longest < 4)
        throw InsufficientDataError("motion features need a run of at least 4 consecutive present samples");

    MotionFeatureVector f;
    detail::RunningMean speed, accel, jerk, curvature, turning;
    double chord = 0;
    std::size_t moving = 0, present = 0;

    for (const auto& p : spans) {
        const std::size_t n = p.size();
        present += n;
        if (n < 2) continue;
        for (std::size_t i = 0; i + 1 < n; ++i) f.path_length += (p[i + 1] - p[i]).norm();
        chord += (p[n - 1] - p[0]).norm();

        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 d = i == 0 ? p[1] - p[0] : i == n - 1 ? p[n - 1] - p[n - 2] : (p[i + 1] - p[i - 1]) * 0.5;
            v[i] = d.norm() * fps;
            speed.add(v[i]);
            if (v[i] > eps) ++moving;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            Vec2 d1 = (p[i + 1] - p[i - 1]) * 0.5;
            Vec2 d2 = p[i + 1] - p[i] * 2.0 + p[i - 1];
            accel.add(d2.norm() * fps * fps);
            if (v[i] > eps) curvature.add(std::abs(detail::cross(d1, d2)) / std::pow(d1.norm(), 3));

            Vec2 a = p[i] - p[i - 1], b = p[i + 1] - p[i];
            if (a.norm() * fps > eps && b.norm() * fps > eps)
                turning.add(std::atan2(std::abs(detail::cross(a, b)), detail::dot(a, b)));
        }
        for (std::size_t i = 1; i + 2 < n; ++i) {
            Vec2 d3 = p[i + 2] - p[i + 1] * 3.0 + p[i] * 3.0 - p[i - 1];
            jerk.add(d3.norm() * fps * fps * fps);
        }
    }

    f.mean_velocity = speed.value();
    f.mean_acceleration = accel.value();
    f.mean_jerk = jerk.value();
    f.mean_curvature = curvature.value();
    f.mean_turning_angle = turning.value();
    f.motion_ratio = present ? double(moving) / double(present) : 0.0;
    if (chord >= 1.0) f.tortuosity = f.path_length / chord;
    return f;
}

struct VideoFeatures {
    std::string video_id;
    MotionFeatureVector features;
};

inline void write_features_csv(std::ostream& out, const std::vector<VideoFeatures>& rows) {
    out << "video_id";
    for (const char* name : MotionFeatureVector::kNames) out << ',' << name;
    out << '\n';
    for (const auto& row : rows) {
        out << row.video_id;
        for (double v : row.features.values()) out << ',' << (std::isnan(v) ? std::string("nan") : detail::format_real(v));
        out << '\n';
    }
}

inline std::vector<VideoFeatures> read_features_csv(std::istream& in) {
    std::vector<VideoFeatures> rows;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty features file, expected header", 1);
    {
        auto header = detail::split(detail::trim(line), ',');
        bool ok = header.size() == 9 && header[0] == "video_id";
        for (std::size_t i = 0; ok && i < 8; ++i) ok = header[i + 1] == MotionFeatureVector::kNames[i];
        if (!ok) throw SchemaError("unexpected features header", 1);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split(detail::trim(line), ',');
        if (f.size() != 9) throw ParseError("expected 9 fields", lineno);
        std::array<double, 8> v{};
        for (std::size_t i = 0; i < 8; ++i)
            v[i] = detail::trim(f[i + 1]) == "nan" ? std::nan("") : detail::parse_number<double>(f[i + 1], lineno, MotionFeatureVector::kNames[i]);
        VideoFeatures row;
        row.video_id = std::string(detail::trim(f[0]));
        row.features = {v[0], v[1], v[2], v[3], v[4], std::nullopt, v[6], v[7]};
        if (!std::isnan(v[5])) row.features.tortuosity = v[5];
        rows.push_back(std::move(row));
    }
    return rows;
}

/// One line of sequences.jsonl: x, y normalized by the image size and area by
/// the image area.
inline nlohmann::ordered_json sequence_to_json(const std::string& video_id, const TrajectorySeries& s) {
    const double w = s.image_width, h = s.image_height;
    nlohmann::ordered_json j;
    j["video_id"] = video_id;
    j["fps"] = s.fps;
    std::vector<double> x(s.size()), y(s.size()), a(s.size());
    std::vector<int> present(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        x[i] = s.x[i] / w;
        y[i] = s.y[i] / h;
        a[i] = s.area[i] / (w * h);
        present[i] = s.present[i] ? 1 : 0;
    }
    j["x"] = x;
    j["y"] = y;
    j["area"] = a;
    j["present"] = present;
    return j;
}

}  // namespace skilltrack

#endif
