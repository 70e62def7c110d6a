// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "sim_fixtures.hpp"
#include "skilltrack/skilltrack.hpp"

namespace fs = std::filesystem;
using namespace skilltrack;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = budget_s <= 0 || secs < budget_s;
    bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::ostringstream line;
    line << (pass ? "PASS" : "FAIL") << "  " << name << "  [" << o.detail;
    line.precision(3);
    line << "; " << std::fixed << secs << " s";
    if (budget_s > 0) line << " (limit " << budget_s << " s)";
    line << "]";
    std::cout << line.str() << std::endl;
}

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- MOTA

Outcome mota_table() {
    auto a = summarize(MotCounts{2214, 2615, 210, 46479});
    auto b = summarize(MotCounts{783, 5367, 87, 46479});
    bool ok = std::abs(a.mota * 100 - 89.2) <= 0.05 && std::abs(b.mota * 100 - 86.6) <= 0.05;
    return {ok, "MOTA " + fmt(a.mota * 100, 5) + "% vs 89.2%, " + fmt(b.mota * 100, 5) + "% vs 86.6%, tol 0.05 pp"};
}

// ---------------------------------------------------------------- Hungarian

double best_injection(const Matrix<double>& m, std::size_t r, std::vector<char>& used, double acc) {
    if (r == m.rows()) return acc;
    double best = std::numeric_limits<double>::infinity();
    bool rows_le_cols = m.rows() <= m.cols();
    if (!rows_le_cols) {  // some rows stay unmatched: allow skipping while enough rows remain
        std::size_t matched = std::count(used.begin(), used.end(), 1);
        if (m.rows() - r > m.cols() - matched) best = best_injection(m, r + 1, used, acc);
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (used[c]) continue;
        used[c] = true;
        best = std::min(best, best_injection(m, r + 1, used, acc + m(r, c)));
        used[c] = false;
    }
    return best;
}

Outcome hungarian_optimality() {
    std::mt19937_64 rng(20240);
    std::uniform_int_distribution<int> dim(1, 7), val(0, 999);
    int exact = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::size_t r = std::size_t(dim(rng)), c = std::size_t(dim(rng));
        Matrix<double> m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) m(i, j) = val(rng);
        auto a = hungarian(m, 1000.0);
        std::vector<char> used(c, 0);
        exact += assignment_cost(m, a.pairs) == best_injection(m, 0, used, 0) && a.pairs.size() == std::min(r, c);
    }
    return {exact == trials, std::to_string(exact) + "/" + std::to_string(trials) + " equal to brute force (exact)"};
}

// ---------------------------------------------------------------- ID stability

Outcome id_stability() {
    int zero_with = 0, switched_without = 0;
    double min_ratio = 1e300;
    std::string worst;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto spec = fixtures::occlusion_scenario(seed);
        auto out = generate(spec);
        // centers as the generator draws them: recover from noise-free copies
        auto clean = spec;
        for (auto& o : clean.objects) o.embedding_noise_std = 0;
        auto c = generate(clean);
        std::map<int, Embedding> center;
        for (const auto& g : c.detections.frames)
            for (const auto& d : g.detections) center[d.class_id == 3 ? 2 : 1] = d.embedding;
        double dist = euclidean(center[1], center[2]);
        min_ratio = std::min(min_ratio, dist / spec.objects[0].embedding_noise_std);

        TrackerConfig off;
        off.max_inactive_frames = 0;
        auto with = evaluate(out.ground_truth, run_tracker(out.detections, {}));
        auto without = evaluate(out.ground_truth, run_tracker(out.detections, off));
        zero_with += with.id_switches == 0;
        switched_without += without.id_switches >= 1;
        if (with.id_switches != 0) worst += " seed" + std::to_string(seed) + "=" + std::to_string(with.id_switches);
    }
    bool ok = zero_with == 20 && switched_without >= 18 && min_ratio >= 5;
    return {ok, "recovery: 0 switches on " + std::to_string(zero_with) + "/20" + worst + "; disabled: >=1 switch on " +
                    std::to_string(switched_without) + "/20 (need >=18); min center distance " + fmt(min_ratio, 4) +
                    "x noise std"};
}

// ---------------------------------------------------------------- differential gating

Outcome differential_gating() {
    auto out = generate(fixtures::crossing_scenario());
    auto cross_links = [&](bool class_term) {
        TrackerConfig cfg;
        cfg.association.class_term = class_term;
        Tracker tr(cfg, out.detections.meta);
        int n = 0;
        for (const auto& f : out.detections.frames) {
            tr.step(f);
            for (const auto& l : tr.last_report().associated) n += l.track_class != l.detection_class;
        }
        return n;
    };
    int full = cross_links(true), ablated = cross_links(false);
    int again = cross_links(false);
    return {full == 0 && ablated >= 1 && again == ablated,
            "cross-class assignments: full cost " + std::to_string(full) + ", without class term " +
                std::to_string(ablated) + " (repeat " + std::to_string(again) + ")"};
}

// ---------------------------------------------------------------- motion oracles

TrajectorySeries series(const std::function<std::pair<double, double>(int)>& at, int n) {
    TrajectorySeries s;
    for (int i = 0; i < n; ++i) {
        auto [x, y] = at(i);
        s.t.push_back(i);
        s.x.push_back(x);
        s.y.push_back(y);
        s.area.push_back(1000);
        s.present.push_back(1);
    }
    return s;
}

Outcome motion_oracles() {
    auto circle = compute_features(series(
        [](int i) {
            double a = 2 * std::numbers::pi * i / 100;
            return std::pair{960 + 100 * std::cos(a), 540 + 100 * std::sin(a)};
        },
        100));
    auto line = compute_features(series([](int i) { return std::pair{100 + 2.0 * i, 50 + 1.0 * i}; }, 100));
    double curv_err = std::abs(circle.mean_curvature - 0.01) / 0.01;
    double tort_err = line.tortuosity ? std::abs(*line.tortuosity - 1) : 1e300;
    bool ok = curv_err <= 0.01 && tort_err <= 1e-9 && std::abs(line.mean_jerk) <= 1e-9;
    return {ok, "circle curvature " + fmt(circle.mean_curvature, 8) + " (rel err " + fmt(curv_err, 3) +
                    ", tol 1%); line tortuosity-1 = " + fmt(tort_err, 3) + ", jerk = " + fmt(line.mean_jerk, 3) +
                    " (tol 1e-9)"};
}

// ---------------------------------------------------------------- Kalman

Outcome kalman() {
    BoxKalmanFilter kf(KalmanConfig::for_image({}));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    bool mean_exact = true;
    double cov_err = 0;
    for (int t = 0; t < 100; ++t) {
        auto s = kf.initiate(CenterBox{900 + 50 * g(rng), 500 + 50 * g(rng), 60, 40});
        for (int i = 4; i < 8; ++i) s.mean[i] = g(rng);
        s = kf.update(kf.predict(s, 1), CenterBox{s.cx() + g(rng), s.cy() + g(rng), 61, 40});
        auto a = kf.predict(s, 3);
        auto b = kf.predict(kf.predict(kf.predict(s, 1), 1), 1);
        mean_exact = mean_exact && a.mean == b.mean;
        cov_err = std::max(cov_err, (a.covariance - b.covariance).cwiseAbs().maxCoeff());
    }
    auto truth = [](int f) { return CenterBox{300 + 4.0 * f, 700 - 2.5 * f, 80, 60}; };
    auto s = kf.initiate(truth(0));
    double worst = 0;
    for (int f = 1; f < 50; ++f) {
        s = kf.predict(s, 1);
        if (f > 10) worst = std::max(worst, std::hypot(s.cx() - truth(f).cx, s.cy() - truth(f).cy));
        s = kf.update(s, truth(f));
    }
    bool ok = mean_exact && cov_err <= 1e-9 && worst < 0.5;
    return {ok, std::string("dt=3 vs 3x dt=1: mean ") + (mean_exact ? "exact" : "differs") + ", covariance max diff " +
                    fmt(cov_err, 3) + " (tol 1e-9); center error after frame 10 max " + fmt(worst, 4) +
                    " px (tol 0.5)"};
}

// ---------------------------------------------------------------- skill_rf

Outcome skill_rf() {
    const double kappa = cohen_kappa({20, 5, 10, 15}), acc = accuracy({20, 5, 10, 15});

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    FeatureMatrix X;
    Labels y;
    for (int i = 0; i < 30; ++i) {
        bool high = i < 12;
        std::vector<double> row(4);
        for (auto& v : row) v = g(rng) + (high ? 10.0 : 0.0);
        X.push_back(row);
        y.push_back(high ? SkillClass::High : SkillClass::Low);
    }
    ForestConfig fc;
    fc.n_trees = 10;
    fc.seed = 1;
    CrossValidationConfig cv{5, 10000, 2};
    bool leakage_ok = true;
    CrossValidationResult res;
    try {
        res = cross_validate(X, y, fc, cv);
        for (const auto& f : res.folds) detail::assert_no_leakage(f);
    } catch (const std::logic_error&) {
        leakage_ok = false;
    }
    bool ok = acc == 0.7 && kappa == 0.4 && leakage_ok && res.report.p_value <= 1.0 / 10001.0;
    return {ok, "accuracy " + fmt(acc) + ", kappa " + fmt(kappa) + " (exact 0.70/0.40); separable p = " +
                    fmt(res.report.p_value, 4) + " (need <= 1/10001, 10000 permutations); leakage assertion " +
                    (leakage_ok ? "held" : "fired")};
}

// ---------------------------------------------------------------- end to end

int sh(const std::string& cmd, std::string* out = nullptr) {
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return -1;
    char buf[4096];
    std::size_t n;
    std::string text;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
    int st = pclose(p);
    if (out) *out += text;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Runs the full pipeline into `dir` and returns every output byte in a map.
std::map<std::string, std::string> pipeline(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = SKILLTRACK_CLI;
    std::string log;
    auto must = [&](const std::string& args) {
        if (sh(cli + " " + args + " 2>/dev/null", &log) != 0) throw std::runtime_error("command failed: " + args);
    };
    {
        std::ofstream(dir / "config.json") << R"({"n_trees": 25, "cv_folds": 3, "permutations": 200, "seed": 5})";
        std::ofstream labels(dir / "labels.csv");
        labels << "video_id,rater1,rater2\n";
        for (int v = 0; v < 12; ++v) {
            const bool high = v % 2 == 0;
            labels << "video" << v << ',' << (high ? 4 : 2) << ',' << (high ? 4 : 3) << '\n';
            nlohmann::json spec = {
                {"duration", 200},
                {"seed", 100 + v},
                {"detector_noise", high ? 1.0 : 4.0},
                {"fp_rate", 0.05},
                {"objects",
                 {{{"class_id", 1},
                   {"motion", {{"type", "spline"},
                               {"waypoints", {{300 + 20 * v, 300}, {700, 450 + 10 * v}, {1000, 300}, {1300, 500}}}}},
                   {"embedding_noise_std", 0.1},
                   {"occlusions", {{80, 90}}}},
                  {{"class_id", 2},
                   {"motion", {{"type", "circle"}, {"center", {1500, 800}}, {"radius", 60 + 5 * v}, {"period", 150}}},
                   {"embedding_noise_std", 0.1}}}}};
            std::ofstream(dir / ("spec" + std::to_string(v) + ".json")) << spec.dump(2);
        }
    }
    std::string tracks_args;
    for (int v = 0; v < 12; ++v) {
        const auto id = "video" + std::to_string(v);
        const auto sim = (dir / id).string();
        must("simulate --spec " + (dir / ("spec" + std::to_string(v) + ".json")).string() + " --out-dir " + sim);
        must("track --detections " + sim + "/detections.jsonl --config " + (dir / "config.json").string() +
             " --out " + sim + "/tracks.csv");
        tracks_args += " --tracks " + sim + "/tracks.csv --video-id " + id;
    }
    must("eval --tracks " + (dir / "video0/tracks.csv").string() + " --gt " + (dir / "video0/gt.csv").string() +
         " --out " + (dir / "eval.json").string());
    must("features" + tracks_args + " --meta " + (dir / "video0/detections.jsonl").string() + " --out " +
         (dir / "features.csv").string() + " --sequences-out " + (dir / "sequences.jsonl").string());
    must("classify --features " + (dir / "features.csv").string() + " --labels " + (dir / "labels.csv").string() +
         " --config " + (dir / "config.json").string() + " --out " + (dir / "report.json").string());

    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    files["<stdout>"] = log;
    return files;
}

Outcome end_to_end() {
    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    const fs::path dir = fs::temp_directory_path() / "skilltrack_acceptance_e2e";
    auto first = pipeline(dir);
    auto second = pipeline(dir);
    fs::remove_all(dir);
    std::size_t bytes = 0, differing = 0;
    for (const auto& [name, content] : first) {
        bytes += content.size();
        auto it = second.find(name);
        if (it == second.end() || it->second != content) ++differing;
    }
    bool ok = differing == 0 && first.size() == second.size() && first.count("report.json") &&
              first.count("sequences.jsonl");
    return {ok, std::to_string(first.size()) + " outputs (" + std::to_string(bytes) + " bytes), " +
                    std::to_string(differing) + " differ between runs"};
}

}  // namespace

int main() {
    criterion("MOTA arithmetic reproduces the published tracker rows", 1.0, mota_table);
    criterion("Hungarian optimality on 1000 random matrices (n, m <= 7)", 10.0, hungarian_optimality);
    criterion("ID stability under occlusion, 20 seeds", 30.0, id_stability);
    criterion("Differential gating by the class-mismatch term", 0, differential_gating);
    criterion("Motion-metric oracles (circle curvature, line tortuosity and jerk)", 1.0, motion_oracles);
    criterion("Kalman compositionality and convergence", 0, kalman);
    criterion("Skill classifier sanity (kappa, permutation p-value, leakage)", 0, skill_rf);
    criterion("End-to-end determinism simulate -> track -> eval -> features -> classify", 0, end_to_end);
    std::cout << (failures ? "ACCEPTANCE FAILED: " + std::to_string(failures) + " criterion(s)" : "ACCEPTANCE PASSED")
              << std::endl;
    return failures ? 1 : 0;
}
