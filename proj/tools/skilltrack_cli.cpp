// skilltrack: simulate -> track -> eval -> features -> classify.
//
// Every subcommand prints one JSON object to stdout; diagnostics go to stderr.
// Exit codes: 0 ok, 2 missing input, 3 parse/schema, 4 data consistency, 5 internal.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "skilltrack/skilltrack.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace skilltrack;

namespace {

constexpr const char* kVersion = "0.1.0";

/// UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible outputs.
std::string timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::time_t(std::strtoll(epoch, nullptr, 10));
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Manifest {
    std::string subcommand;
    ordered_json inputs = ordered_json::object();
    ordered_json outputs = ordered_json::object();
    std::string config;
    std::optional<std::uint64_t> seed;

    explicit Manifest(std::string name) : subcommand(std::move(name)) {}

    ordered_json to_json() const {
        ordered_json j;
        j["subcommand"] = subcommand;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["config"] = config.empty() ? ordered_json(nullptr) : ordered_json(config);
        j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
        j["tool_version"] = kVersion;
        j["timestamp"] = timestamp();
        return j;
    }
};

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw MissingInputError("input file not found: " + path);
}

void emit(const ordered_json& j) { std::cout << j.dump() << std::endl; }

std::string video_id_for(const std::string& tracks_path) {
    fs::path p(tracks_path);
    auto stem = p.stem().string();
    if (stem == "tracks" && p.has_parent_path() && !p.parent_path().filename().empty())
        return p.parent_path().filename().string();
    return stem;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << text;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string spec, out_dir;
};

int run_simulate(const SimulateArgs& a) {
    require_file(a.spec);
    auto spec = read_scenario(a.spec);
    auto result = generate(spec);
    fs::create_directories(a.out_dir);
    const auto det_path = (fs::path(a.out_dir) / "detections.jsonl").string();
    const auto gt_path = (fs::path(a.out_dir) / "gt.csv").string();
    {
        std::ofstream out(det_path, std::ios::binary);
        if (!out) throw Error("cannot open output file: " + det_path);
        write_detections(out, result.detections);
    }
    write_tracks(result.ground_truth, gt_path);

    Manifest m{"simulate"};
    m.inputs["spec"] = a.spec;
    m.outputs["detections"] = det_path;
    m.outputs["gt"] = gt_path;
    m.seed = spec.seed;
    ordered_json j;
    j["frames"] = spec.duration;
    j["detections"] = result.detections.detection_count();
    j["gt_records"] = result.ground_truth.size();
    j["manifest"] = m.to_json();
    emit(j);
    return 0;
}

// ---------------------------------------------------------------- track

struct TrackArgs {
    std::string detections, config, out;
};

int run_track(const TrackArgs& a) {
    require_file(a.detections);
    require_file(a.config);
    auto cfg = read_config(a.config);
    auto seq = read_detections(a.detections);
    auto records = run_tracker(seq, cfg.tracker);
    write_tracks(records, a.out);

    std::set<int> ids;
    for (const auto& r : records) ids.insert(r.track_id);
    Manifest m{"track"};
    m.inputs["detections"] = a.detections;
    m.outputs["tracks"] = a.out;
    m.config = a.config;
    ordered_json j;
    j["frames"] = seq.frames.size();
    j["detections"] = seq.detection_count();
    j["records"] = records.size();
    j["tracks"] = ids.size();
    j["manifest"] = m.to_json();
    emit(j);
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string tracks, gt, out;
    double iou = 0.5;
};

int run_eval(const EvalArgs& a) {
    require_file(a.tracks);
    require_file(a.gt);
    auto summary = evaluate(read_tracks(a.gt), read_tracks(a.tracks), a.iou);
    auto j = to_json(summary);
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
    emit(j);
    return 0;
}

// ---------------------------------------------------------------- features

struct FeaturesArgs {
    std::vector<std::string> tracks, meta, video_ids;
    std::optional<double> window_end_seconds;
    double window_seconds = 180.0;
    int gap_fill_max = 5;
    std::optional<double> motion_eps;
    std::size_t sample_length = 0;
    std::uint64_t seed = 0;
    std::string out, sequences_out;
};

int run_features(const FeaturesArgs& a) {
    if (a.meta.size() != 1 && a.meta.size() != a.tracks.size())
        throw ConsistencyError("--meta must be given once or once per --tracks");
    if (!a.video_ids.empty() && a.video_ids.size() != a.tracks.size())
        throw ConsistencyError("--video-id must be given once per --tracks");
    for (const auto& p : a.tracks) require_file(p);
    for (const auto& p : a.meta) require_file(p);

    std::vector<VideoFeatures> rows;
    std::vector<ordered_json> sequences;
    ordered_json skipped = ordered_json::array();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < a.tracks.size(); ++i) {
        const auto meta = read_meta(a.meta.size() == 1 ? a.meta[0] : a.meta[i]);
        const auto records = read_tracks(a.tracks[i]);
        const auto id = a.video_ids.empty() ? video_id_for(a.tracks[i]) : a.video_ids[i];
        if (!seen.insert(id).second) throw ConsistencyError("duplicate video id '" + id + "'");
        try {
            int last = -1;
            for (const auto& r : records) last = std::max(last, r.frame);
            const int end = a.window_end_seconds ? int(std::lround(*a.window_end_seconds * meta.fps)) : last + 1;
            const auto window = trailing_window(end, a.window_seconds, meta.fps);
            const int main_id = select_main_track(records, window);
            auto series = to_series(records, main_id, window, meta, a.gap_fill_max);
            if (a.sample_length > 0) series = sample_window(series, a.sample_length, a.seed + i);
            rows.push_back({id, compute_features(series, a.motion_eps)});
            sequences.push_back(sequence_to_json(id, series));
        } catch (const InsufficientDataError& e) {
            std::cerr << "skipping " << id << ": " << e.what() << '\n';
            skipped.push_back({{"video_id", id}, {"reason", e.what()}});
        }
    }

    {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw Error("cannot open output file: " + a.out);
        write_features_csv(out, rows);
    }
    if (!a.sequences_out.empty()) {
        std::ofstream out(a.sequences_out, std::ios::binary);
        if (!out) throw Error("cannot open output file: " + a.sequences_out);
        for (const auto& s : sequences) out << s.dump() << '\n';
    }

    Manifest m{"features"};
    m.inputs["tracks"] = a.tracks;
    m.inputs["meta"] = a.meta;
    m.outputs["features"] = a.out;
    if (!a.sequences_out.empty()) m.outputs["sequences"] = a.sequences_out;
    if (a.sample_length > 0) m.seed = a.seed;
    ordered_json j;
    j["videos"] = rows.size();
    j["skipped"] = skipped;
    j["manifest"] = m.to_json();
    emit(j);
    return 0;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
    std::string features, labels, config, out;
};

int run_classify(const ClassifyArgs& a) {
    require_file(a.features);
    require_file(a.labels);
    require_file(a.config);
    const auto cfg = read_config(a.config);
    std::vector<VideoFeatures> rows;
    {
        std::ifstream in(a.features);
        rows = read_features_csv(in);
    }
    const auto labels = read_labels(a.labels);

    std::map<std::string, SkillLabel> by_id;
    for (const auto& l : labels)
        if (!by_id.emplace(l.video_id, l).second) throw ConsistencyError("duplicate label for '" + l.video_id + "'");
    std::set<std::string> feature_ids;
    std::vector<std::string> orphans;
    for (const auto& r : rows) {
        feature_ids.insert(r.video_id);
        if (!by_id.count(r.video_id)) orphans.push_back(r.video_id + " (features without label)");
    }
    for (const auto& [id, l] : by_id)
        if (!feature_ids.count(id)) orphans.push_back(id + " (label without features)");
    if (!orphans.empty()) {
        std::string msg = "video ids do not match between features and labels:";
        for (const auto& o : orphans) msg += " " + o;
        throw ConsistencyError(msg);
    }

    FeatureMatrix X;
    Labels y;
    ordered_json excluded = ordered_json::array();
    for (const auto& r : rows) {
        if (!r.features.tortuosity) {
            excluded.push_back(r.video_id);
            continue;
        }
        auto v = r.features.values();
        X.emplace_back(v.begin(), v.end());
        y.push_back(by_id.at(r.video_id).binary_class);
    }

    const auto result = cross_validate(X, y, cfg.forest, cfg.cv);
    ordered_json j = to_json(result.report);
    j["p_value_test"] = "label permutation on accuracy, same folds";
    j["n_samples"] = X.size();
    j["excluded_undefined_tortuosity"] = excluded;
    j["confusion"] = {{"tp", result.confusion.tp},
                      {"fn", result.confusion.fn},
                      {"fp", result.confusion.fp},
                      {"tn", result.confusion.tn}};
    j["config"] = to_json(cfg);

    Manifest m{"classify"};
    m.inputs["features"] = a.features;
    m.inputs["labels"] = a.labels;
    if (!a.out.empty()) m.outputs["report"] = a.out;
    m.config = a.config;
    m.seed = cfg.cv.seed;
    j["manifest"] = m.to_json();
    if (!a.out.empty()) write_text(a.out, j.dump(2) + "\n");
    emit(j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tool tracking and motion-based skill assessment"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic detection stream and ground truth");
    c_sim->add_option("--spec", sim.spec, "Scenario spec (JSON)")->required();
    c_sim->add_option("--out-dir", sim.out_dir, "Directory for detections.jsonl and gt.csv")->required();

    TrackArgs trk;
    auto* c_trk = app.add_subcommand("track", "Track detections into identity-labeled records");
    c_trk->add_option("--detections", trk.detections, "detections.jsonl")->required();
    c_trk->add_option("--config", trk.config, "Flat JSON config")->required();
    c_trk->add_option("--out", trk.out, "Output tracks.csv")->required();

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "CLEAR-MOT evaluation against ground truth");
    c_ev->add_option("--tracks", ev.tracks, "Predicted tracks.csv")->required();
    c_ev->add_option("--gt", ev.gt, "Ground-truth gt.csv")->required();
    c_ev->add_option("--iou", ev.iou, "IoU threshold")->capture_default_str();
    c_ev->add_option("--out", ev.out, "Also write the summary JSON here");

    FeaturesArgs ft;
    double window_end = -1;
    auto* c_ft = app.add_subcommand("features", "Main-tool trajectories and motion metrics");
    c_ft->add_option("--tracks", ft.tracks, "tracks.csv (repeatable, one per video)")->required();
    c_ft->add_option("--meta", ft.meta, "Sequence header (detections.jsonl or meta JSON); once or per video")
        ->required();
    c_ft->add_option("--video-id", ft.video_ids, "Video id per --tracks (default: file stem, or the parent directory for tracks.csv)");
    auto* o_end = c_ft->add_option("--window-end-seconds", window_end,
                                   "End time of the analyzed phase (default: end of the tracks)");
    c_ft->add_option("--window-seconds", ft.window_seconds, "Length of the trailing window")->capture_default_str();
    c_ft->add_option("--gap-fill-max", ft.gap_fill_max, "Longest interpolated gap, frames")->capture_default_str();
    double motion_eps = -1;
    auto* o_eps = c_ft->add_option("--motion-eps", motion_eps, "Stillness threshold px/s (default 2% diagonal/s)");
    c_ft->add_option("--sample-length", ft.sample_length, "Random sub-window length in samples (0 = off)");
    c_ft->add_option("--seed", ft.seed, "Seed for --sample-length");
    c_ft->add_option("--out", ft.out, "features.csv")->required();
    c_ft->add_option("--sequences-out", ft.sequences_out, "sequences.jsonl for the sequence classifier");

    ClassifyArgs cl;
    auto* c_cl = app.add_subcommand("classify", "Random-forest skill classification with cross-validation");
    c_cl->add_option("--features", cl.features, "features.csv")->required();
    c_cl->add_option("--labels", cl.labels, "labels.csv")->required();
    c_cl->add_option("--config", cl.config, "Flat JSON config")->required();
    c_cl->add_option("--out", cl.out, "Also write the report JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*c_sim) return run_simulate(sim);
        if (*c_trk) return run_track(trk);
        if (*c_ev) return run_eval(ev);
        if (*c_ft) {
            if (o_end->count()) ft.window_end_seconds = window_end;
            if (o_eps->count()) ft.motion_eps = motion_eps;
            return run_features(ft);
        }
        if (*c_cl) return run_classify(cl);
    } catch (const skilltrack::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 5;
    }
    return 5;
}
