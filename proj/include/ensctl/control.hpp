#pragma once

#include "ensctl/control/assumptions.hpp"
#include "ensctl/control/bisection.hpp"
#include "ensctl/control/costs.hpp"
#include "ensctl/control/trajectory.hpp"
