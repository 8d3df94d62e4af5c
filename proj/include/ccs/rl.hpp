#pragma once

#include "ccs/rl/agents.hpp"
#include "ccs/rl/buffer.hpp"
#include "ccs/rl/environment.hpp"
#include "ccs/rl/value_function.hpp"
