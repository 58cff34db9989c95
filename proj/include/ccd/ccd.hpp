#pragma once

#include "ccd/bench.hpp"
#include "ccd/calibrate.hpp"
#include "ccd/cascade.hpp"
#include "ccd/cascade_io.hpp"
#include "ccd/clustopt.hpp"
#include "ccd/errors.hpp"
#include "ccd/graph.hpp"
#include "ccd/io.hpp"
#include "ccd/lfr.hpp"
#include "ccd/likelihood.hpp"
#include "ccd/log.hpp"
#include "ccd/louvain.hpp"
#include "ccd/metrics.hpp"
#include "ccd/partition.hpp"
#include "ccd/planted.hpp"
#include "ccd/random.hpp"
#include "ccd/simulate.hpp"
#include "ccd/surrogate.hpp"
