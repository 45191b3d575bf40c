#pragma once

#include "tmsmd/csv.hpp"
#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/market_structure.hpp"
#include "tmsmd/msmd_inference.hpp"
#include "tmsmd/optimize.hpp"
#include "tmsmd/parallel.hpp"
#include "tmsmd/random.hpp"
#include "tmsmd/stats.hpp"
#include "tmsmd/subordination.hpp"
#include "tmsmd/tick_ingest.hpp"
