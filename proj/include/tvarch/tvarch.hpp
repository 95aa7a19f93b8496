#pragma once

// Umbrella header for the tvARCH simulation / estimation / verification
// toolkit.

#include "tvarch/asymptotics.hpp"
#include "tvarch/config.hpp"
#include "tvarch/csv.hpp"
#include "tvarch/curve.hpp"
#include "tvarch/errors.hpp"
#include "tvarch/estimate.hpp"
#include "tvarch/innovation.hpp"
#include "tvarch/kernel.hpp"
#include "tvarch/likelihood.hpp"
#include "tvarch/manifest.hpp"
#include "tvarch/model.hpp"
#include "tvarch/montecarlo.hpp"
#include "tvarch/numerics.hpp"
#include "tvarch/rng.hpp"
#include "tvarch/simulate.hpp"
#include "tvarch/version.hpp"
