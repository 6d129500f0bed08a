// lmg.hpp — umbrella header for the dissipative delayed-feedback collective-spin toolkit
#pragma once

#include "config.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "meanfield.hpp"
#include "signals.hpp"
#include "spectrum.hpp"
#include "stability.hpp"
