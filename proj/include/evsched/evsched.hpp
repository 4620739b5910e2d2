#pragma once

#include "evsched/allocation.hpp"
#include "evsched/behavior.hpp"
#include "evsched/csv.hpp"
#include "evsched/day_ahead.hpp"
#include "evsched/envelope.hpp"
#include "evsched/events.hpp"
#include "evsched/metrics.hpp"
#include "evsched/outputs.hpp"
#include "evsched/pipeline.hpp"
#include "evsched/rng.hpp"
#include "evsched/scenario.hpp"
#include "evsched/session.hpp"
#include "evsched/time_grid.hpp"
