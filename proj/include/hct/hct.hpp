#pragma once

#include "hct/baselines.hpp"
#include "hct/cluster.hpp"
#include "hct/counting.hpp"
#include "hct/dense_trellis.hpp"
#include "hct/ginkgo.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"
#include "hct/oracle.hpp"
#include "hct/sparse_trellis.hpp"
