#pragma once

#include "powerctl/bench.hpp"
#include "powerctl/config.hpp"
#include "powerctl/equilibrium.hpp"
#include "powerctl/errors.hpp"
#include "powerctl/finite.hpp"
#include "powerctl/fluid.hpp"
#include "powerctl/kernel.hpp"
#include "powerctl/model.hpp"
#include "powerctl/threshold.hpp"
