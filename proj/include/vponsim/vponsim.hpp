#pragma once

#include "vponsim/error.hpp"
#include "vponsim/ocdma_codes.hpp"
#include "vponsim/topology_power.hpp"
#include "vponsim/rng.hpp"
#include "vponsim/mpcp_protocol.hpp"
#include "vponsim/dba_scheduler.hpp"
#include "vponsim/event_queue.hpp"
#include "vponsim/traffic.hpp"
#include "vponsim/stats.hpp"
#include "vponsim/scenario.hpp"
#include "vponsim/scenario_io.hpp"
#include "vponsim/simulator.hpp"
#include "vponsim/results_io.hpp"
#include "vponsim/orchestration.hpp"
