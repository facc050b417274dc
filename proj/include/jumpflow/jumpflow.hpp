#pragma once

// Umbrella header. config.hpp and experiments.hpp additionally need the
// vendored json.hpp on the include path.

#include "jumpflow/constants.hpp"
#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/montecarlo.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/partitions.hpp"
#include "jumpflow/quadrature.hpp"
#include "jumpflow/rng.hpp"
#include "jumpflow/simulate.hpp"
#include "jumpflow/variational.hpp"
