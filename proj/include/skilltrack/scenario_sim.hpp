#ifndef SKILLTRACK_SCENARIO_SIM_HPP
#define SKILLTRACK_SCENARIO_SIM_HPP

// Synthetic detection streams with known ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"

namespace skilltrack {

struct MotionSpec {
    enum class Kind { Line, Circle, Spline };
    Kind kind = Kind::Line;
    // line: start + velocity * frame
    std::pair<double, double> start{0, 0}, velocity{0, 0};
    // circle: center + radius * (cos, sin)(phase + 2 pi frame / period)
    std::pair<double, double> center{0, 0};
    double radius = 0, period = 100, phase = 0;
    // spline: Catmull-Rom through waypoints, spread evenly over the duration
    std::vector<std::pair<double, double>> waypoints;
};

struct ObjectSpec {
    int class_id = 0;
    double width = 80, height = 80;
    MotionSpec motion;
    Embedding embedding_center;        // empty: random unit vector
    double embedding_noise_std = 0.0;  // RMS norm of the noise vector
    std::vector<std::pair<int, int>> occlusions;  // [start, end) frames
    double class_flip_prob = 0.0;
    int class_flip_window = 0;  // flips only within this many frames after a re-entry; 0 = always
};

struct ScenarioSpec {
    int duration = 100;
    SequenceMeta meta;
    std::vector<ObjectSpec> objects;
    double detector_noise = 0.0;  // bbox jitter std, px
    double fp_rate = 0.0;         // probability of one spurious detection per frame
    double confidence_floor = 0.6;
    int num_classes = 7;
    bool shuffle_detections = true;
    std::uint64_t seed = 0;

    void validate() const {
        meta.validate();
        if (duration < 1) throw ValidationError("scenario: duration must be >= 1");
        if (!(fp_rate >= 0 && fp_rate <= 1)) throw ValidationError("scenario: fp_rate must lie in [0,1]");
        if (!(detector_noise >= 0)) throw ValidationError("scenario: detector_noise must be >= 0");
        if (!(confidence_floor >= 0 && confidence_floor <= 1))
            throw ValidationError("scenario: confidence_floor must lie in [0,1]");
        if (num_classes < 2) throw ValidationError("scenario: num_classes must be >= 2");
        for (const auto& o : objects) {
            if (!(o.width > 0 && o.height > 0)) throw ValidationError("scenario: object size must be positive");
            if (!(o.class_flip_prob >= 0 && o.class_flip_prob <= 1))
                throw ValidationError("scenario: class_flip_prob must lie in [0,1]");
            if (!(o.embedding_noise_std >= 0)) throw ValidationError("scenario: embedding noise must be >= 0");
            if (!o.embedding_center.empty() && o.embedding_center.size() != std::size_t(meta.embedding_dim))
                throw ValidationError("scenario: embedding_center length must equal embedding_dim");
            for (auto [s, e] : o.occlusions)
                if (s < 0 || e > duration || s >= e) throw ValidationError("scenario: occlusion outside duration");
            if (o.motion.kind == MotionSpec::Kind::Spline && o.motion.waypoints.size() < 2)
                throw ValidationError("scenario: spline motion needs at least 2 waypoints");
            if (o.motion.kind == MotionSpec::Kind::Circle && !(o.motion.period > 0))
                throw ValidationError("scenario: circle period must be positive");
        }
    }
};

struct ScenarioOutput {
    DetectionSequence detections;
    std::vector<TrackRecord> ground_truth;  // id = object index + 1
};

/// Noise-free object center at `frame`.
inline std::pair<double, double> object_center(const MotionSpec& m, int frame, int duration) {
    switch (m.kind) {
        case MotionSpec::Kind::Line:
            return {m.start.first + m.velocity.first * frame, m.start.second + m.velocity.second * frame};
        case MotionSpec::Kind::Circle: {
            double a = m.phase + 2 * std::numbers::pi * frame / m.period;
            return {m.center.first + m.radius * std::cos(a), m.center.second + m.radius * std::sin(a)};
        }
        case MotionSpec::Kind::Spline: {
            const auto& w = m.waypoints;
            const std::size_t segs = w.size() - 1;
            double u = duration > 1 ? double(frame) / double(duration - 1) * double(segs) : 0.0;
            std::size_t i = std::min(std::size_t(u), segs - 1);
            double s = u - double(i);
            auto p = [&](std::ptrdiff_t k) {
                k = std::clamp<std::ptrdiff_t>(k, 0, std::ptrdiff_t(w.size()) - 1);
                return w[std::size_t(k)];
            };
            auto p0 = p(std::ptrdiff_t(i) - 1), p1 = p(std::ptrdiff_t(i)), p2 = p(std::ptrdiff_t(i) + 1),
                 p3 = p(std::ptrdiff_t(i) + 2);
            auto cr = [s](double a, double b, double c, double d) {
                return 0.5 * (2 * b + (-a + c) * s + (2 * a - 5 * b + 4 * c - d) * s * s + (-a + 3 * b - 3 * c + d) * s * s * s);
            };
            return {cr(p0.first, p1.first, p2.first, p3.first), cr(p0.second, p1.second, p2.second, p3.second)};
        }
    }
    return {0, 0};
}

namespace detail {

inline Embedding random_unit_vector(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Embedding v(dim);
    double norm = 0;
    do {
        norm = 0;
        for (auto& x : v) {
            x = g(rng);
            norm += x * x;
        }
    } while (norm == 0);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

inline ScenarioOutput generate(const ScenarioSpec& spec) {
    spec.validate();
    const auto dim = std::size_t(spec.meta.embedding_dim);
    const double W = spec.meta.image_width, H = spec.meta.image_height;

    ScenarioOutput out;
    out.detections.meta = spec.meta;
    out.detections.frames.resize(std::size_t(spec.duration));
    for (int f = 0; f < spec.duration; ++f) out.detections.frames[std::size_t(f)].frame = f;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const ObjectSpec& obj = spec.objects[k];
        std::mt19937_64 rng(detail::mix_seed(spec.seed, k));
        const Embedding center = obj.embedding_center.empty() ? detail::random_unit_vector(dim, rng) : obj.embedding_center;
        const double emb_std = obj.embedding_noise_std / std::sqrt(double(dim));
        std::normal_distribution<double> gauss(0.0, 1.0);

        bool was_visible = false, seen_before = false;
        int reentry = -1;
        for (int f = 0; f < spec.duration; ++f) {
            auto [cx, cy] = object_center(obj.motion, f, spec.duration);
            const bool on_screen = cx >= 0 && cx < W && cy >= 0 && cy < H;
            if (!on_screen) {
                was_visible = false;
                continue;
            }
            CenterBox truth{cx, cy, obj.width, obj.height};
            out.ground_truth.push_back({f, int(k) + 1, to_tlwh(truth), 1.0, obj.class_id});

            bool occluded = std::any_of(obj.occlusions.begin(), obj.occlusions.end(),
                                        [f](auto iv) { return f >= iv.first && f < iv.second; });
            if (occluded) {
                was_visible = false;
                continue;
            }
            if (!was_visible && seen_before) reentry = f;
            was_visible = seen_before = true;

            Detection d;
            d.frame = f;
            d.bbox = truth;
            if (spec.detector_noise > 0) {
                const double j = spec.detector_noise;
                d.bbox.cx += j * gauss(rng);
                d.bbox.cy += j * gauss(rng);
                d.bbox.w = std::max(1.0, d.bbox.w + j * gauss(rng));
                d.bbox.h = std::max(1.0, d.bbox.h + j * gauss(rng));
            }
            d.confidence = spec.confidence_floor + (1.0 - spec.confidence_floor) * unit(rng);
            d.class_id = obj.class_id;
            const bool in_flip_window = obj.class_flip_window == 0 || (reentry >= 0 && f - reentry < obj.class_flip_window);
            if (obj.class_flip_prob > 0 && in_flip_window && unit(rng) < obj.class_flip_prob)
                d.class_id = (obj.class_id + 1) % spec.num_classes;
            d.embedding = center;
            if (obj.embedding_noise_std > 0)
                for (auto& x : d.embedding) x += emb_std * gauss(rng);
            out.detections.frames[std::size_t(f)].detections.push_back(std::move(d));
        }
    }

    std::mt19937_64 rng(detail::mix_seed(spec.seed, 0xfa15eULL));
    std::uniform_int_distribution<int> cls(0, spec.num_classes - 1);
    for (int f = 0; f < spec.duration; ++f) {
        auto& dets = out.detections.frames[std::size_t(f)].detections;
        if (spec.fp_rate > 0 && unit(rng) < spec.fp_rate) {
            Detection d;
            d.frame = f;
            double w = 30 + 120 * unit(rng), h = 30 + 120 * unit(rng);
            d.bbox = {W * unit(rng), H * unit(rng), w, h};
            d.confidence = spec.confidence_floor + (1.0 - spec.confidence_floor) * unit(rng);
            d.class_id = cls(rng);
            d.embedding = detail::random_unit_vector(dim, rng);
            dets.push_back(std::move(d));
        }
        if (spec.shuffle_detections) std::shuffle(dets.begin(), dets.end(), rng);
    }

    std::sort(out.ground_truth.begin(), out.ground_truth.end(),
              [](auto& a, auto& b) { return std::pair(a.frame, a.track_id) < std::pair(b.frame, b.track_id); });
    return out;
}

namespace detail {

inline std::pair<double, double> json_pair(const nlohmann::json& j, const char* key) {
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) throw SchemaError(std::string("'") + key + "' must be a 2-element array");
    return {v[0], v[1]};
}

}  // namespace detail

/// ScenarioSpec from its JSON form. Unknown keys are rejected.
inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    auto check_keys = [](const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where) {
        if (!obj.is_object()) throw SchemaError(std::string(where) + " must be a JSON object");
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
                throw SchemaError(std::string("unknown key '") + it.key() + "' in " + where);
    };
    try {
        check_keys(j, {"duration", "image_width", "image_height", "fps", "embedding_dim", "objects", "detector_noise",
                       "fp_rate", "confidence_floor", "num_classes", "shuffle_detections", "seed"},
                   "scenario");
        ScenarioSpec s;
        s.duration = j.at("duration").get<int>();
        s.meta.image_width = j.value("image_width", s.meta.image_width);
        s.meta.image_height = j.value("image_height", s.meta.image_height);
        s.meta.fps = j.value("fps", s.meta.fps);
        s.meta.embedding_dim = j.value("embedding_dim", s.meta.embedding_dim);
        s.detector_noise = j.value("detector_noise", 0.0);
        s.fp_rate = j.value("fp_rate", 0.0);
        s.confidence_floor = j.value("confidence_floor", s.confidence_floor);
        s.num_classes = j.value("num_classes", s.num_classes);
        s.shuffle_detections = j.value("shuffle_detections", true);
        s.seed = j.value("seed", std::uint64_t{0});
        for (const auto& o : j.at("objects")) {
            check_keys(o, {"class_id", "size", "motion", "embedding_center", "embedding_noise_std", "occlusions",
                           "class_flip_prob", "class_flip_window"},
                       "object");
            ObjectSpec obj;
            obj.class_id = o.at("class_id").get<int>();
            if (o.contains("size")) std::tie(obj.width, obj.height) = detail::json_pair(o, "size");
            const auto& m = o.at("motion");
            const auto type = m.at("type").get<std::string>();
            if (type == "line") {
                check_keys(m, {"type", "start", "velocity"}, "line motion");
                obj.motion.kind = MotionSpec::Kind::Line;
                obj.motion.start = detail::json_pair(m, "start");
                obj.motion.velocity = detail::json_pair(m, "velocity");
            } else if (type == "circle") {
                check_keys(m, {"type", "center", "radius", "period", "phase"}, "circle motion");
                obj.motion.kind = MotionSpec::Kind::Circle;
                obj.motion.center = detail::json_pair(m, "center");
                obj.motion.radius = m.at("radius").get<double>();
                obj.motion.period = m.at("period").get<double>();
                obj.motion.phase = m.value("phase", 0.0);
            } else if (type == "spline") {
                check_keys(m, {"type", "waypoints"}, "spline motion");
                obj.motion.kind = MotionSpec::Kind::Spline;
                for (const auto& w : m.at("waypoints")) {
                    auto v = w.get<std::vector<double>>();
                    if (v.size() != 2) throw SchemaError("waypoints must be [x, y] pairs");
                    obj.motion.waypoints.emplace_back(v[0], v[1]);
                }
            } else {
                throw SchemaError("unknown motion type '" + type + "'");
            }
            obj.embedding_center = o.value("embedding_center", Embedding{});
            obj.embedding_noise_std = o.value("embedding_noise_std", 0.0);
            for (const auto& iv : o.value("occlusions", nlohmann::json::array())) {
                auto v = iv.get<std::vector<int>>();
                if (v.size() != 2) throw SchemaError("occlusions must be [start, end] pairs");
                obj.occlusions.emplace_back(v[0], v[1]);
            }
            obj.class_flip_prob = o.value("class_flip_prob", 0.0);
            obj.class_flip_window = o.value("class_flip_window", 0);
            s.objects.push_back(std::move(obj));
        }
        try {
            s.validate();
        } catch (const ValidationError& e) {
            throw SchemaError(e.what());
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("scenario spec: ") + e.what());
    }
}

inline ScenarioSpec read_scenario(const std::string& path) {
    auto in = detail::open_input(path);
    try {
        return scenario_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("scenario spec: ") + e.what());
    }
}

}  // namespace skilltrack

#endif
