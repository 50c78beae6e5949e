// Umbrella header.

#pragma once

#include "skillinject/core_math.hpp"
#include "skillinject/dataset.hpp"
#include "skillinject/dynamics.hpp"
#include "skillinject/error.hpp"
#include "skillinject/estimation.hpp"
#include "skillinject/geometry.hpp"
#include "skillinject/io.hpp"
#include "skillinject/random.hpp"
#include "skillinject/report.hpp"
#include "skillinject/rules.hpp"
#include "skillinject/segment_class.hpp"
#include "skillinject/segmentation.hpp"
