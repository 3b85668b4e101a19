#pragma once

// Umbrella header: synthesis and inference for multifractal fractional
// random walks (log-normal cascade measures, conditionally Gaussian paths,
// structure-function statistics and scaling-exponent estimation).

#include "mfrw/cascade.hpp"
#include "mfrw/config.hpp"
#include "mfrw/covariance.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/experiments.hpp"
#include "mfrw/fft.hpp"
#include "mfrw/hermite.hpp"
#include "mfrw/io.hpp"
#include "mfrw/kernel.hpp"
#include "mfrw/parallel.hpp"
#include "mfrw/paths.hpp"
#include "mfrw/rng.hpp"
#include "mfrw/scaling.hpp"
#include "mfrw/variations.hpp"
