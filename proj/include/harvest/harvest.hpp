#pragma once

#include "harvest/geometry.hpp"
#include "harvest/io/config.hpp"
#include "harvest/io/csv.hpp"
#include "harvest/io/svg.hpp"
#include "harvest/msa.hpp"
#include "harvest/request.hpp"
#include "harvest/scheduler.hpp"
#include "harvest/sim/config.hpp"
#include "harvest/sim/coordination.hpp"
#include "harvest/sim/fsm.hpp"
#include "harvest/sim/monte_carlo.hpp"
#include "harvest/sim/world.hpp"
#include "harvest/stats.hpp"
#include "harvest/trace.hpp"
