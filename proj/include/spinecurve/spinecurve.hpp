#pragma once

#include "spinecurve/error.hpp"
#include "spinecurve/geometry.hpp"
#include "spinecurve/records.hpp"
#include "spinecurve/curvature.hpp"
#include "spinecurve/detection_io.hpp"
#include "spinecurve/metrics.hpp"
#include "spinecurve/synth.hpp"
#include "spinecurve/svg.hpp"
