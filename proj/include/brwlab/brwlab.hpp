#pragma once

// Umbrella header.

#include "brwlab/gibbs.hpp"
#include "brwlab/harness.hpp"
#include "brwlab/io.hpp"
#include "brwlab/limits.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/rwalk.hpp"
#include "brwlab/spine.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/trajectory.hpp"
#include "brwlab/tree.hpp"
