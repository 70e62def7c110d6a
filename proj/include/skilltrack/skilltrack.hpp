#ifndef SKILLTRACK_SKILLTRACK_HPP
#define SKILLTRACK_SKILLTRACK_HPP

#include "skilltrack/association.hpp"
#include "skilltrack/config.hpp"
#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"
#include "skilltrack/hungarian.hpp"
#include "skilltrack/kalman_filter.hpp"
#include "skilltrack/mot_eval.hpp"
#include "skilltrack/motion_features.hpp"
#include "skilltrack/scenario_sim.hpp"
#include "skilltrack/skill_rf.hpp"
#include "skilltrack/track_engine.hpp"

#endif
