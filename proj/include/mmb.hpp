#pragma once

#include "mmb/experiment.hpp"
#include "mmb/graph.hpp"
#include "mmb/labst.hpp"
#include "mmb/metrics.hpp"
#include "mmb/mmb.hpp"
#include "mmb/network.hpp"
#include "mmb/random.hpp"
#include "mmb/schedule.hpp"
#include "mmb/topology.hpp"
