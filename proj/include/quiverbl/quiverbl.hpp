#pragma once

// Umbrella header for the quiver Brascamp-Lieb solver library.

#include "quiverbl/config.hpp"
#include "quiverbl/error.hpp"
#include "quiverbl/io.hpp"
#include "quiverbl/objective.hpp"
#include "quiverbl/oracle.hpp"
#include "quiverbl/quiver.hpp"
#include "quiverbl/random.hpp"
#include "quiverbl/scaling.hpp"
#include "quiverbl/spd.hpp"
#include "quiverbl/stability.hpp"
