#pragma once

#include "core.hpp"
#include "network.hpp"
#include "edge_list.hpp"
#include "production.hpp"
#include "cascade.hpp"
#include "rewiring.hpp"
#include "optimizer.hpp"
#include "metrics.hpp"
#include "community.hpp"
#include "datasets.hpp"
