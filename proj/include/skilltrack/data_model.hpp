#ifndef SKILLTRACK_DATA_MODEL_HPP
#define SKILLTRACK_DATA_MODEL_HPP

// Domain types and the on-disk formats: detections.jsonl, MOT-style
// tracks/gt CSV, and labels.csv.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"

#include "skilltrack/error.hpp"

namespace skilltrack {

using Embedding = std::vector<double>;

struct CenterBox {
    double cx = 0, cy = 0, w = 0, h = 0;
    double area() const { return w * h; }
    friend bool operator==(const CenterBox&, const CenterBox&) = default;
};

/// Left/top/width/height, the MOT convention.
struct TlwhBox {
    double left = 0, top = 0, w = 0, h = 0;
    double cx() const { return left + w / 2; }
    double cy() const { return top + h / 2; }
    double area() const { return w * h; }
    friend bool operator==(const TlwhBox&, const TlwhBox&) = default;
};

inline TlwhBox to_tlwh(const CenterBox& b) { return {b.cx - b.w / 2, b.cy - b.h / 2, b.w, b.h}; }
inline CenterBox to_center(const TlwhBox& b) { return {b.cx(), b.cy(), b.w, b.h}; }

struct Detection {
    int frame = 0;
    CenterBox bbox;
    double confidence = 1.0;
    int class_id = 0;
    Embedding embedding;
};

struct TrackRecord {
    int frame = 0;
    int track_id = 1;
    TlwhBox bbox;
    double confidence = 1.0;
    int class_id = 0;
    friend bool operator==(const TrackRecord&, const TrackRecord&) = default;
};

struct SequenceMeta {
    int image_width = 1920;
    int image_height = 1080;
    double fps = 25.0;
    int embedding_dim = 128;

    double diagonal() const { return std::hypot(double(image_width), double(image_height)); }
    void validate() const {
        if (image_width <= 0 || image_height <= 0 || !(fps > 0) || embedding_dim <= 0)
            throw ValidationError("sequence meta: all fields must be positive");
    }
};

struct FrameDetections {
    int frame = 0;
    std::vector<Detection> detections;
};

struct DetectionSequence {
    SequenceMeta meta;
    std::vector<FrameDetections> frames;  // dense, ascending, starting at frame 0

    std::size_t detection_count() const {
        std::size_t n = 0;
        for (const auto& f : frames) n += f.detections.size();
        return n;
    }
};

enum class SkillClass { Low, High };

inline const char* to_string(SkillClass c) { return c == SkillClass::High ? "high" : "low"; }

struct SkillLabel {
    std::string video_id;
    std::pair<int, int> rater_scores{0, 0};
    double mean_score = 0;
    SkillClass binary_class = SkillClass::Low;
};

inline constexpr double kSkillCutoff = 3.5;

/// Averages the two rater scores; mean >= 3.5 is High.
inline SkillLabel binarize_label(std::pair<int, int> scores, std::string video_id = {}) {
    for (int s : {scores.first, scores.second})
        if (s < 1 || s > 5)
            throw ValidationError("rater score " + std::to_string(s) + " outside [1,5]");
    SkillLabel label;
    label.video_id = std::move(video_id);
    label.rater_scores = scores;
    label.mean_score = (scores.first + scores.second) / 2.0;
    label.binary_class = label.mean_score >= kSkillCutoff ? SkillClass::High : SkillClass::Low;
    return label;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot open input file: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    return out;
}

/// Shortest representation that round-trips.
inline std::string format_real(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format real");
    return {buf, end};
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
    field = trim(field);
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", line);
    return value;
}

template <class T>
T json_field(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string("missing key '") + key + "'", line);
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError(std::string("wrong type for key '") + key + "'", line);
    }
}

inline SequenceMeta parse_meta(const std::string& text, std::size_t line) {
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON header: ") + e.what(), line);
    }
    if (!header.is_object()) throw SchemaError("header must be a JSON object", line);
    SequenceMeta meta;
    meta.image_width = json_field<int>(header, "image_width", line);
    meta.image_height = json_field<int>(header, "image_height", line);
    meta.fps = header.contains("fps") ? json_field<double>(header, "fps", line) : 25.0;
    meta.embedding_dim = json_field<int>(header, "embedding_dim", line);
    try {
        meta.validate();
    } catch (const ValidationError& e) {
        throw SchemaError(e.what(), line);
    }
    return meta;
}

}  // namespace detail

inline nlohmann::ordered_json meta_to_json(const SequenceMeta& meta) {
    nlohmann::ordered_json j;
    j["image_width"] = meta.image_width;
    j["image_height"] = meta.image_height;
    j["fps"] = meta.fps;
    j["embedding_dim"] = meta.embedding_dim;
    return j;
}

/// Reads the header object on the first line of `path` (detections.jsonl or a
/// standalone meta file).
inline SequenceMeta read_meta(const std::string& path) {
    auto in = detail::open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file, expected header", 1);
    return detail::parse_meta(line, 1);
}

inline DetectionSequence read_detections(std::istream& in) {
    DetectionSequence seq;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file, expected header", 1);
    seq.meta = detail::parse_meta(line, 1);

    std::map<int, std::vector<Detection>> grouped;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw ParseError("malformed JSON", lineno);
        }
        if (!obj.is_object()) throw SchemaError("detection must be a JSON object", lineno);

        Detection d;
        d.frame = detail::json_field<int>(obj, "frame", lineno);
        d.class_id = detail::json_field<int>(obj, "class_id", lineno);
        d.confidence = detail::json_field<double>(obj, "conf", lineno);
        auto bbox = detail::json_field<std::vector<double>>(obj, "bbox", lineno);
        d.embedding = detail::json_field<std::vector<double>>(obj, "emb", lineno);
        if (bbox.size() != 4) throw SchemaError("bbox must have 4 entries", lineno);
        d.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};

        if (d.frame < 0) throw SchemaError("negative frame index", lineno);
        if (!(d.bbox.w > 0) || !(d.bbox.h > 0)) throw SchemaError("bbox width/height must be positive", lineno);
        if (!(d.confidence >= 0 && d.confidence <= 1)) throw SchemaError("conf outside [0,1]", lineno);
        if (d.embedding.size() != std::size_t(seq.meta.embedding_dim))
            throw SchemaError("embedding length " + std::to_string(d.embedding.size()) + " != embedding_dim " +
                                  std::to_string(seq.meta.embedding_dim),
                              lineno);
        grouped[d.frame].push_back(std::move(d));
    }

    if (!grouped.empty()) {
        int last = grouped.rbegin()->first;
        seq.frames.resize(std::size_t(last) + 1);
        for (int f = 0; f <= last; ++f) seq.frames[std::size_t(f)].frame = f;
        for (auto& [frame, dets] : grouped) seq.frames[std::size_t(frame)].detections = std::move(dets);
    }
    return seq;
}

inline DetectionSequence read_detections(const std::string& path) {
    auto in = detail::open_input(path);
    return read_detections(in);
}

inline void write_detections(std::ostream& out, const DetectionSequence& seq) {
    out << meta_to_json(seq.meta).dump() << '\n';
    for (const auto& frame : seq.frames) {
        for (const auto& d : frame.detections) {
            nlohmann::ordered_json j;
            j["frame"] = d.frame;
            j["class_id"] = d.class_id;
            j["conf"] = d.confidence;
            j["bbox"] = {d.bbox.cx, d.bbox.cy, d.bbox.w, d.bbox.h};
            j["emb"] = d.embedding;
            out << j.dump() << '\n';
        }
    }
}

/// Throws unless records are strictly increasing in (frame, track_id).
inline void validate_track_order(const std::vector<TrackRecord>& records) {
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        if (std::pair(a.frame, a.track_id) >= std::pair(b.frame, b.track_id))
            throw ValidationError("track records not strictly sorted by (frame, id) at index " + std::to_string(i));
    }
}

inline void write_tracks(std::ostream& out, const std::vector<TrackRecord>& records) {
    validate_track_order(records);
    using detail::format_real;
    for (const auto& r : records) {
        out << r.frame << ',' << r.track_id << ',' << format_real(r.bbox.left) << ',' << format_real(r.bbox.top)
            << ',' << format_real(r.bbox.w) << ',' << format_real(r.bbox.h) << ',' << format_real(r.confidence)
            << ',' << r.class_id << '\n';
    }
}

inline void write_tracks(const std::vector<TrackRecord>& records, const std::string& path) {
    validate_track_order(records);
    auto out = detail::open_output(path);
    write_tracks(out, records);
}

inline std::vector<TrackRecord> read_tracks(std::istream& in) {
    std::vector<TrackRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 8) throw ParseError("expected 8 comma-separated fields, got " + std::to_string(f.size()), lineno);
        TrackRecord r;
        r.frame = detail::parse_number<int>(f[0], lineno, "frame");
        r.track_id = detail::parse_number<int>(f[1], lineno, "id");
        r.bbox.left = detail::parse_number<double>(f[2], lineno, "left");
        r.bbox.top = detail::parse_number<double>(f[3], lineno, "top");
        r.bbox.w = detail::parse_number<double>(f[4], lineno, "width");
        r.bbox.h = detail::parse_number<double>(f[5], lineno, "height");
        r.confidence = detail::parse_number<double>(f[6], lineno, "conf");
        r.class_id = detail::parse_number<int>(f[7], lineno, "class_id");
        records.push_back(r);
    }
    return records;
}

inline std::vector<TrackRecord> read_tracks(const std::string& path) {
    auto in = detail::open_input(path);
    return read_tracks(in);
}

/// labels.csv: header line, then `video_id,rater1,rater2`.
inline std::vector<SkillLabel> read_labels(std::istream& in) {
    std::vector<SkillLabel> labels;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty labels file, expected header", 1);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 3) throw ParseError("expected video_id,rater1,rater2", lineno);
        int r1 = detail::parse_number<int>(f[1], lineno, "rater1");
        int r2 = detail::parse_number<int>(f[2], lineno, "rater2");
        try {
            labels.push_back(binarize_label({r1, r2}, std::string(detail::trim(f[0]))));
        } catch (const ValidationError& e) {
            throw SchemaError(e.what(), lineno);
        }
    }
    return labels;
}

inline std::vector<SkillLabel> read_labels(const std::string& path) {
    auto in = detail::open_input(path);
    return read_labels(in);
}

}  // namespace skilltrack

#endif
