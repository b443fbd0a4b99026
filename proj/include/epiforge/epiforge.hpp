#pragma once

// Umbrella header for the epiforge toolkit: a spatio-temporal SEIRD
// reaction-diffusion simulator plus a learned implicit time integrator
// (deep residual recurrent network) with physics-regularized training,
// recurrent baselines, and reproducible command-line plumbing.

#include "epiforge/adam.hpp"
#include "epiforge/commands.hpp"
#include "epiforge/config.hpp"
#include "epiforge/data_io.hpp"
#include "epiforge/dense.hpp"
#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/grad.hpp"
#include "epiforge/grid.hpp"
#include "epiforge/integrators.hpp"
#include "epiforge/losses.hpp"
#include "epiforge/manifest.hpp"
#include "epiforge/ode.hpp"
#include "epiforge/pgm.hpp"
#include "epiforge/rng.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/seird.hpp"
#include "epiforge/serialize.hpp"
#include "epiforge/textio.hpp"
#include "epiforge/train.hpp"
#include "epiforge/version.hpp"
