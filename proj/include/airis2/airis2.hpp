#pragma once

#include "airis2/dataset.hpp"
#include "airis2/dataset_io.hpp"
#include "airis2/error.hpp"
#include "airis2/evaluation.hpp"
#include "airis2/manifest.hpp"
#include "airis2/model.hpp"
#include "airis2/predictors.hpp"
#include "airis2/rng.hpp"
#include "airis2/sgdsim.hpp"
#include "airis2/timeseries.hpp"
#include "airis2/training.hpp"
#include "airis2/version.hpp"
