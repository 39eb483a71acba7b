#pragma once

#include "ensctl/linalg/cholesky.hpp"
#include "ensctl/linalg/complex.hpp"
#include "ensctl/linalg/expm.hpp"
#include "ensctl/linalg/lu.hpp"
#include "ensctl/linalg/matrix.hpp"
#include "ensctl/linalg/schur_eigen.hpp"
#include "ensctl/linalg/symmetric_eigen.hpp"
