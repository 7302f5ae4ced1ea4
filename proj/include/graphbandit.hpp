#pragma once

#include "graphbandit/adversary.hpp"
#include "graphbandit/baselines.hpp"
#include "graphbandit/corral.hpp"
#include "graphbandit/distribution.hpp"
#include "graphbandit/graph.hpp"
#include "graphbandit/harness.hpp"
#include "graphbandit/metrics.hpp"
#include "graphbandit/minibatch.hpp"
#include "graphbandit/omd.hpp"
#include "graphbandit/policy_regret.hpp"
#include "graphbandit/rng.hpp"
#include "graphbandit/trace.hpp"
