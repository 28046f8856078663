#pragma once

#include "vss/bench.hpp"
#include "vss/contours.hpp"
#include "vss/cues.hpp"
#include "vss/pipeline.hpp"
#include "vss/scene.hpp"
#include "vss/synthesis.hpp"
