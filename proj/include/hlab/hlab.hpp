#pragma once

#include "hlab/config.hpp"
#include "hlab/correctors.hpp"
#include "hlab/diagnostics.hpp"
#include "hlab/eigen.hpp"
#include "hlab/error.hpp"
#include "hlab/grid.hpp"
#include "hlab/grid_io.hpp"
#include "hlab/heat_obstacle.hpp"
#include "hlab/lab.hpp"
#include "hlab/multigrid.hpp"
#include "hlab/pme.hpp"
#include "hlab/report.hpp"
#include "hlab/trend.hpp"
