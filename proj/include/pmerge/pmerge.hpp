#pragma once

// Umbrella header for the whole library.

#include "pmerge/adjust.hpp"
#include "pmerge/analysis.hpp"
#include "pmerge/calibrator.hpp"
#include "pmerge/classic.hpp"
#include "pmerge/coefficients.hpp"
#include "pmerge/csv.hpp"
#include "pmerge/discovery.hpp"
#include "pmerge/errors.hpp"
#include "pmerge/induced.hpp"
#include "pmerge/method.hpp"
#include "pmerge/normal.hpp"
#include "pmerge/pvector.hpp"
#include "pmerge/rng.hpp"
#include "pmerge/simlab.hpp"
#include "pmerge/util.hpp"
