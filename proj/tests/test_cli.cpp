#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    std::string cmd = std::string(SKILLTRACK_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string run_stderr(const std::string& args) {
    std::string cmd = std::string(SKILLTRACK_CLI) + " " + args + " 2>&1 >/dev/null";
    std::string err;
    FILE* pipe = popen(cmd.c_str(), "r");
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) err.append(buf.data(), n);
    pclose(pipe);
    return err;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("skilltrack_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_F(Cli, SimulateTrackEvalOnBundledScenario) {
    auto sim = run("simulate --spec " SKILLTRACK_DEMO_DIR "/example_scenario.json --out-dir " + at("sim"));
    ASSERT_EQ(sim.code, 0);
    auto sj = nlohmann::json::parse(sim.out);
    EXPECT_EQ(sj["frames"], 300);
    EXPECT_TRUE(fs::exists(at("sim/detections.jsonl")));

    auto trk = run("track --detections " + at("sim/detections.jsonl") + " --config " SKILLTRACK_DEMO_DIR
                   "/config.json --out " + at("tracks.csv"));
    ASSERT_EQ(trk.code, 0);
    EXPECT_GT(nlohmann::json::parse(trk.out)["records"].get<int>(), 0);

    auto ev = run("eval --tracks " + at("tracks.csv") + " --gt " + at("sim/gt.csv"));
    ASSERT_EQ(ev.code, 0);
    auto j = nlohmann::json::parse(ev.out);
    EXPECT_EQ(j.size(), 8u);
    EXPECT_EQ(j["id_switches"], 0);
    EXPECT_GT(j["mota"].get<double>(), 0.9);
}

TEST_F(Cli, EvalIdenticalTracksGivesMotaOne) {
    write(at("gt.csv"), "0,1,10,10,50,50,1,0\n1,1,12,10,50,50,1,0\n1,2,300,300,40,40,1,2\n");
    auto ev = run("eval --tracks " + at("gt.csv") + " --gt " + at("gt.csv"));
    ASSERT_EQ(ev.code, 0);
    auto j = nlohmann::json::parse(ev.out);
    EXPECT_EQ(j["mota"], 1.0);
    EXPECT_EQ(j["num_gt_objects"], 3);
}

TEST_F(Cli, MissingConfigIsExitTwoNamingPath) {
    write(at("d.jsonl"), R"({"image_width":640,"image_height":480,"fps":25,"embedding_dim":2})"
                         "\n");
    const std::string args = "track --detections " + at("d.jsonl") + " --config " + at("nope.json") + " --out " +
                             at("t.csv");
    EXPECT_EQ(run(args).code, 2);
    EXPECT_NE(run_stderr(args).find(at("nope.json")), std::string::npos);
}

TEST_F(Cli, CorruptDetectionLineIsExitThreeWithLine) {
    write(at("d.jsonl"), R"({"image_width":640,"image_height":480,"fps":25,"embedding_dim":2})"
                         "\n"
                         R"({"frame":0,"class_id":1,"conf":0.9,"bbox":[10,10,5,5],"emb":[0,1]})"
                         "\n"
                         R"({"frame":1,"class_id":1,"conf":0.9,"bbox":[10,10,5,5],"emb":[0]})"
                         "\n");
    write(at("c.json"), "{}");
    const std::string args = "track --detections " + at("d.jsonl") + " --config " + at("c.json") + " --out " +
                             at("t.csv");
    EXPECT_EQ(run(args).code, 3);
    EXPECT_NE(run_stderr(args).find("line 3"), std::string::npos);
}

TEST_F(Cli, UnknownConfigKeyIsExitThree) {
    write(at("d.jsonl"), R"({"image_width":640,"image_height":480,"fps":25,"embedding_dim":2})"
                         "\n");
    write(at("c.json"), R"({"gallery_size": 3})");
    EXPECT_EQ(run("track --detections " + at("d.jsonl") + " --config " + at("c.json") + " --out " + at("t.csv")).code,
              3);
}

TEST_F(Cli, ClassifyOrphansIsExitFour) {
    write(at("f.csv"),
          "video_id,path_length,mean_velocity,mean_acceleration,mean_jerk,mean_curvature,tortuosity,"
          "mean_turning_angle,motion_ratio\n"
          "v1,1,2,3,4,5,1.5,0.1,0.5\nv2,1,2,3,4,5,1.5,0.1,0.5\n");
    write(at("l.csv"), "video_id,rater1,rater2\nv1,3,4\nv3,2,2\n");
    write(at("c.json"), "{}");
    const std::string args =
        "classify --features " + at("f.csv") + " --labels " + at("l.csv") + " --config " + at("c.json");
    EXPECT_EQ(run(args).code, 4);
    auto err = run_stderr(args);
    EXPECT_NE(err.find("v2"), std::string::npos);
    EXPECT_NE(err.find("v3"), std::string::npos);
}

TEST_F(Cli, FeaturesAndSequencesFromTracks) {
    std::ofstream t(at("tracks.csv"));
    for (int f = 0; f < 100; ++f) t << f << ",1," << 100 + 3 * f << ",200,40,40,0.9,1\n";
    t.close();
    write(at("meta.json"), R"({"image_width":1920,"image_height":1080,"fps":25,"embedding_dim":128})");
    auto r = run("features --tracks " + at("tracks.csv") + " --meta " + at("meta.json") + " --out " + at("f.csv") +
                 " --sequences-out " + at("s.jsonl"));
    ASSERT_EQ(r.code, 0);
    std::ifstream f(at("f.csv"));
    std::string header, row;
    std::getline(f, header);
    std::getline(f, row);
    EXPECT_EQ(row.substr(0, row.find(',')), fs::path(dir).filename().string());
    std::ifstream s(at("s.jsonl"));
    std::string line;
    std::getline(s, line);
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["x"].size(), 100u);
    EXPECT_EQ(j["present"][0], 1);
}

TEST_F(Cli, BadArgumentsAreExitTwo) {
    EXPECT_EQ(run("track --detections").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
}
