#pragma once

#include "weldar/analytics.hpp"
#include "weldar/errors.hpp"
#include "weldar/feedback.hpp"
#include "weldar/integrity.hpp"
#include "weldar/json_io.hpp"
#include "weldar/kalman.hpp"
#include "weldar/lesson.hpp"
#include "weldar/pose_model.hpp"
#include "weldar/protocol.hpp"
#include "weldar/session.hpp"
#include "weldar/skill_extractor.hpp"
#include "weldar/synth_bench.hpp"
#include "weldar/validation.hpp"
#include "weldar/weld_trigger.hpp"
