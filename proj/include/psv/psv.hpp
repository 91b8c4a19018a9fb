#pragma once

// Umbrella header for the psv library.

#include "psv/analysis.hpp"
#include "psv/arith.hpp"
#include "psv/bitmap_io.hpp"
#include "psv/closed_sets.hpp"
#include "psv/matrix.hpp"
#include "psv/pratt.hpp"
#include "psv/sieve.hpp"
#include "psv/universe.hpp"
