#pragma once

#include "tetratomo/accuracy.hpp"
#include "tetratomo/estimate.hpp"
#include "tetratomo/parallel.hpp"
#include "tetratomo/povm.hpp"
#include "tetratomo/qstate.hpp"
#include "tetratomo/sim.hpp"
