#pragma once

// Umbrella header: analytical machine loss model, efficiency-map fitting,
// optimal transmission ratios, and drive-cycle energy accounting.

#include "gearopt/cycle_analysis.hpp"
#include "gearopt/errors.hpp"
#include "gearopt/loss_model.hpp"
#include "gearopt/map_fit.hpp"
#include "gearopt/numeric.hpp"
#include "gearopt/ratio_opt.hpp"
#include "gearopt/units.hpp"
#include "gearopt/vehicle.hpp"
