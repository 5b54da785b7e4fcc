#pragma once

#include "wspec/error.hpp"
#include "wspec/inference.hpp"
#include "wspec/kernels.hpp"
#include "wspec/optimize.hpp"
#include "wspec/penalty_system.hpp"
#include "wspec/periodogram.hpp"
#include "wspec/selection.hpp"
#include "wspec/simulation.hpp"
#include "wspec/whittle.hpp"
