#pragma once

#include "ensctl/ensemble/chain.hpp"
#include "ensctl/ensemble/distribution.hpp"
#include "ensctl/ensemble/nonlinear.hpp"
#include "ensctl/ensemble/rng.hpp"
#include "ensctl/ensemble/sampling.hpp"
#include "ensctl/ensemble/spec.hpp"
