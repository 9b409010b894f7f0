// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spde/coefficients.hpp"
#include "spde/config.hpp"
#include "spde/csv.hpp"
#include "spde/diagnostics.hpp"
#include "spde/error.hpp"
#include "spde/finite_difference.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/grid.hpp"
#include "spde/matrix.hpp"
#include "spde/operators.hpp"
#include "spde/parallel.hpp"
#include "spde/quadrature.hpp"
#include "spde/random.hpp"
#include "spde/runner.hpp"
#include "spde/solver.hpp"
#include "spde/studies.hpp"
#include "spde/test_function.hpp"
#include "spde/yield_curve.hpp"
