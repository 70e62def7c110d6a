// Scenario fixtures shared by the tracker tests and the acceptance run.
#ifndef SKILLTRACK_TESTS_SIM_FIXTURES_HPP
#define SKILLTRACK_TESTS_SIM_FIXTURES_HPP

#include <cstdint>

#include "skilltrack/scenario_sim.hpp"

namespace fixtures {

inline skilltrack::ObjectSpec line_object(int cls, double x0, double y0, double vx, double vy) {
    skilltrack::ObjectSpec o;
    o.class_id = cls;
    o.motion.kind = skilltrack::MotionSpec::Kind::Line;
    o.motion.start = {x0, y0};
    o.motion.velocity = {vx, vy};
    return o;
}

/// Two tools far apart; the first is hidden for 20 frames and comes back with
/// a wrong class label for 5 frames. Embedding centers are random unit vectors.
inline skilltrack::ScenarioSpec occlusion_scenario(std::uint64_t seed) {
    skilltrack::ScenarioSpec s;
    s.duration = 150;
    s.seed = seed;
    s.detector_noise = 1.0;
    auto a = line_object(1, 300, 300, 2.0, 0.5);
    a.embedding_noise_std = 0.1;
    a.occlusions = {{60, 80}};
    a.class_flip_prob = 1.0;
    a.class_flip_window = 5;
    auto b = line_object(3, 1500, 800, -1.5, -0.5);
    b.embedding_noise_std = 0.1;
    s.objects = {a, b};
    return s;
}

/// Two tools of different classes with the same appearance that cross paths.
inline skilltrack::ScenarioSpec crossing_scenario() {
    skilltrack::ScenarioSpec s;
    s.duration = 60;
    s.seed = 7;
    s.meta.embedding_dim = 16;
    s.shuffle_detections = false;
    skilltrack::Embedding shared(16, 0.0);
    shared[0] = 1.0;
    auto a = line_object(1, 800, 500, 4.0, 0.0);
    auto b = line_object(2, 1040, 500, -4.0, 0.0);
    a.embedding_center = b.embedding_center = shared;
    a.embedding_noise_std = b.embedding_noise_std = 0.01;
    s.objects = {a, b};
    return s;
}

}  // namespace fixtures

#endif
