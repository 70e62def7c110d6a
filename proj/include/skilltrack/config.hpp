#ifndef SKILLTRACK_CONFIG_HPP
#define SKILLTRACK_CONFIG_HPP

// Flat key -> value configuration (a single JSON object) covering the tracker,
// association, Kalman noise, forest and cross-validation settings.

#include <functional>
#include <map>
#include <string>

#include "json.hpp"

#include "skilltrack/error.hpp"
#include "skilltrack/skill_rf.hpp"
#include "skilltrack/track_engine.hpp"

namespace skilltrack {

struct PipelineConfig {
    TrackerConfig tracker;
    ForestConfig forest;
    CrossValidationConfig cv;
};

namespace detail {

template <class T>
T config_value(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace detail

/// Applies `j` on top of `base`. Unknown keys are an error.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {}) {
    if (!j.is_object()) throw SchemaError("config must be a flat JSON object");
    PipelineConfig c = std::move(base);
    auto& t = c.tracker;
    auto& a = t.association;
    auto& k = t.kalman;
    auto& f = c.forest;
    using detail::config_value;
    bool kalman_process_set = false;

    const std::map<std::string, std::function<void(const nlohmann::json&, const std::string&)>> setters{
        {"M", [&](auto& v, auto& key) { a.penalty = config_value<double>(v, key); }},
        {"lambda_sp", [&](auto& v, auto& key) { a.lambda_sp = config_value<double>(v, key); }},
        {"lambda_sp_fraction", [&](auto& v, auto& key) { a.lambda_sp_fraction = config_value<double>(v, key); }},
        {"gallery_N", [&](auto& v, auto& key) { a.gallery_size = config_value<int>(v, key); }},
        {"det_conf_min", [&](auto& v, auto& key) { a.det_conf_min = config_value<double>(v, key); }},
        {"class_term", [&](auto& v, auto& key) { a.class_term = config_value<bool>(v, key); }},
        {"spatial_term", [&](auto& v, auto& key) { a.spatial_term = config_value<bool>(v, key); }},
        {"max_inactive_frames", [&](auto& v, auto& key) { t.max_inactive_frames = config_value<int>(v, key); }},
        {"recovery_lambda_sp_growth",
         [&](auto& v, auto& key) { t.recovery_lambda_sp_growth = config_value<double>(v, key); }},
        {"recovery_feat_max", [&](auto& v, auto& key) { t.recovery_feat_max = config_value<double>(v, key); }},
        {"kalman_measurement_std_weight",
         [&](auto& v, auto& key) { k.measurement_std_weight = config_value<double>(v, key); }},
        {"kalman_process_position_std",
         [&](auto& v, auto& key) {
             k.process_position_std = config_value<double>(v, key);
             kalman_process_set = true;
         }},
        {"kalman_process_area_std",
         [&](auto& v, auto& key) {
             k.process_area_std = config_value<double>(v, key);
             kalman_process_set = true;
         }},
        {"kalman_process_aspect_std", [&](auto& v, auto& key) { k.process_aspect_std = config_value<double>(v, key); }},
        {"kalman_process_velocity_ratio",
         [&](auto& v, auto& key) { k.process_velocity_ratio = config_value<double>(v, key); }},
        {"kalman_initial_velocity_variance_factor",
         [&](auto& v, auto& key) { k.initial_velocity_variance_factor = config_value<double>(v, key); }},
        {"n_trees", [&](auto& v, auto& key) { f.n_trees = config_value<int>(v, key); }},
        {"max_depth", [&](auto& v, auto& key) { f.max_depth = config_value<int>(v, key); }},
        {"features_per_split", [&](auto& v, auto& key) { f.features_per_split = config_value<int>(v, key); }},
        {"min_leaf", [&](auto& v, auto& key) { f.min_leaf = config_value<int>(v, key); }},
        {"tie_votes_high", [&](auto& v, auto& key) { f.tie_votes_high = config_value<bool>(v, key); }},
        {"seed",
         [&](auto& v, auto& key) {
             f.seed = c.cv.seed = config_value<std::uint64_t>(v, key);
         }},
        {"cv_folds", [&](auto& v, auto& key) { c.cv.folds = config_value<int>(v, key); }},
        {"permutations", [&](auto& v, auto& key) { c.cv.permutations = config_value<int>(v, key); }},
    };

    for (auto it = j.begin(); it != j.end(); ++it) {
        auto s = setters.find(it.key());
        if (s == setters.end()) throw SchemaError("unknown config key '" + it.key() + "'");
        if (it.value().is_structured()) throw SchemaError("config key '" + it.key() + "' must be a scalar");
        s->second(it.value(), it.key());
    }
    if (kalman_process_set) t.scale_kalman_to_image = false;
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    return c;
}

inline PipelineConfig read_config(const std::string& path) {
    auto in = detail::open_input(path);
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
}

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    const auto& t = c.tracker;
    const auto& a = t.association;
    const auto& k = t.kalman;
    nlohmann::ordered_json j;
    j["M"] = a.penalty;
    j["lambda_sp"] = a.lambda_sp;
    j["lambda_sp_fraction"] = a.lambda_sp_fraction;
    j["gallery_N"] = a.gallery_size;
    j["det_conf_min"] = a.det_conf_min;
    j["class_term"] = a.class_term;
    j["spatial_term"] = a.spatial_term;
    j["max_inactive_frames"] = t.max_inactive_frames;
    j["recovery_lambda_sp_growth"] = t.recovery_lambda_sp_growth;
    j["recovery_feat_max"] = t.recovery_feat_max;
    j["kalman_measurement_std_weight"] = k.measurement_std_weight;
    if (!t.scale_kalman_to_image) {
        j["kalman_process_position_std"] = k.process_position_std;
        j["kalman_process_area_std"] = k.process_area_std;
    }
    j["kalman_process_aspect_std"] = k.process_aspect_std;
    j["kalman_process_velocity_ratio"] = k.process_velocity_ratio;
    j["kalman_initial_velocity_variance_factor"] = k.initial_velocity_variance_factor;
    j["n_trees"] = c.forest.n_trees;
    j["max_depth"] = c.forest.max_depth;
    j["features_per_split"] = c.forest.features_per_split;
    j["min_leaf"] = c.forest.min_leaf;
    j["tie_votes_high"] = c.forest.tie_votes_high;
    j["seed"] = c.forest.seed;
    j["cv_folds"] = c.cv.folds;
    j["permutations"] = c.cv.permutations;
    return j;
}

}  // namespace skilltrack

#endif
