#pragma once

/// Umbrella header for the change-point detection library.

#include "lsvar/core.hpp"
#include "lsvar/estimation.hpp"
#include "lsvar/evaluation.hpp"
#include "lsvar/io.hpp"
#include "lsvar/multi_detect.hpp"
#include "lsvar/pipeline.hpp"
#include "lsvar/single_detect.hpp"
#include "lsvar/surrogate.hpp"
#include "lsvar/var_model.hpp"
