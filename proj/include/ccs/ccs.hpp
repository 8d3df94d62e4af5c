#pragma once

#include "ccs/bench.hpp"
#include "ccs/causal.hpp"
#include "ccs/dataset.hpp"
#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/io.hpp"
#include "ccs/kernels.hpp"
#include "ccs/random.hpp"
#include "ccs/rl.hpp"
#include "ccs/stats.hpp"
#include "ccs/timeseries.hpp"
#include "ccs/types.hpp"
