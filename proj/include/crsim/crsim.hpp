#pragma once

#include "crsim/config.hpp"
#include "crsim/event_log.hpp"
#include "crsim/experiment.hpp"
#include "crsim/kernel.hpp"
#include "crsim/metrics.hpp"
#include "crsim/model.hpp"
#include "crsim/random.hpp"
#include "crsim/time.hpp"
