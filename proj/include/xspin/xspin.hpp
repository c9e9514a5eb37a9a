#pragma once

// Umbrella header for the xspin library.

#include "xspin/polarization.hpp"
#include "xspin/dynamics.hpp"
#include "xspin/readout.hpp"
#include "xspin/csv.hpp"
#include "xspin/tomography.hpp"
#include "xspin/config.hpp"
#include "xspin/presets.hpp"
#include "xspin/plot.hpp"
