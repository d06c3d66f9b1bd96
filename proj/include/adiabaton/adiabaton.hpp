#pragma once

// Umbrella header for the adiabaton library: shape-preserving pulse-pair
// propagation in coherently driven multilevel media, with the closed-form
// adiabatic-limit oracles and the diagnostics that decide whether a run is in
// the adiabatonic regime.

#include "adiabaton/scheme.hpp"
#include "adiabaton/dynamics.hpp"
#include "adiabaton/integrator.hpp"
#include "adiabaton/adiabatic.hpp"
#include "adiabaton/diagnostics.hpp"
#include "adiabaton/io.hpp"
