#pragma once

#include "engage/behavior.hpp"
#include "engage/engine.hpp"
#include "engage/error.hpp"
#include "engage/evaluation.hpp"
#include "engage/io.hpp"
#include "engage/rng.hpp"
#include "engage/stats.hpp"
#include "engage/synthgen.hpp"
#include "engage/timeline.hpp"
#include "engage/trainer.hpp"
