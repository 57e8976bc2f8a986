#pragma once

#include "clustering.hpp"
#include "convergence.hpp"
#include "dag.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "heterogeneity.hpp"
#include "io.hpp"
#include "latency.hpp"
#include "ppo.hpp"
#include "random.hpp"
#include "scheduler.hpp"
