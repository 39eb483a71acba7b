#pragma once

#include "ensctl/gramian/cocg.hpp"
#include "ensctl/gramian/maneuver.hpp"
#include "ensctl/gramian/sylvester.hpp"
