#pragma once

#include "mdli/core.hpp"
#include "mdli/pla.hpp"
#include "mdli/zorder.hpp"
#include "mdli/zmi.hpp"
#include "mdli/kmeans.hpp"
#include "mdli/mli.hpp"
#include "mdli/lisa.hpp"
#include "mdli/knn.hpp"
#include "mdli/grid.hpp"
#include "mdli/str_tree.hpp"
#include "mdli/kd_tree.hpp"
#include "mdli/ifi.hpp"
#include "mdli/full_scan.hpp"
#include "mdli/workload.hpp"
#include "mdli/bench.hpp"
