#pragma once

// Umbrella header for the NL-LFR identification toolkit.

#include "lfrid/bla.hpp"
#include "lfrid/boucwen.hpp"
#include "lfrid/config.hpp"
#include "lfrid/errors.hpp"
#include "lfrid/fit.hpp"
#include "lfrid/init.hpp"
#include "lfrid/io.hpp"
#include "lfrid/lm.hpp"
#include "lfrid/lti.hpp"
#include "lfrid/metrics.hpp"
#include "lfrid/nllfr.hpp"
#include "lfrid/pipeline.hpp"
#include "lfrid/random.hpp"
#include "lfrid/signals.hpp"
#include "lfrid/spectra.hpp"
#include "lfrid/version.hpp"
