#pragma once

// Umbrella header for the steercomp workbench.

#include "steercomp/compensator.hpp"
#include "steercomp/config.hpp"
#include "steercomp/errors.hpp"
#include "steercomp/feature_analysis.hpp"
#include "steercomp/linalg.hpp"
#include "steercomp/metrics.hpp"
#include "steercomp/plant.hpp"
#include "steercomp/predictor.hpp"
#include "steercomp/rng.hpp"
#include "steercomp/telemetry.hpp"
