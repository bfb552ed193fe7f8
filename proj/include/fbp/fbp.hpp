#pragma once

// Umbrella header for the first-break picking library.

#include "fbp/array2d.hpp"
#include "fbp/checkpoint.hpp"
#include "fbp/dataset.hpp"
#include "fbp/io.hpp"
#include "fbp/losses.hpp"
#include "fbp/metrics.hpp"
#include "fbp/noise.hpp"
#include "fbp/picking.hpp"
#include "fbp/pipeline.hpp"
#include "fbp/plot.hpp"
#include "fbp/reproduce.hpp"
#include "fbp/rng.hpp"
#include "fbp/synth.hpp"
#include "fbp/train.hpp"
#include "fbp/types.hpp"
#include "fbp/unet.hpp"
#include "fbp/velocity.hpp"
