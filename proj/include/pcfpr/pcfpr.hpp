#pragma once

// Umbrella header for the point-cloud false-positive-reduction library.

#include "pcfpr/augment.hpp"
#include "pcfpr/cloud.hpp"
#include "pcfpr/config.hpp"
#include "pcfpr/errors.hpp"
#include "pcfpr/eval.hpp"
#include "pcfpr/geom.hpp"
#include "pcfpr/grid.hpp"
#include "pcfpr/linalg.hpp"
#include "pcfpr/manifest.hpp"
#include "pcfpr/model.hpp"
#include "pcfpr/npcd.hpp"
#include "pcfpr/nvol.hpp"
#include "pcfpr/nwts.hpp"
#include "pcfpr/phantom.hpp"
#include "pcfpr/pipeline.hpp"
#include "pcfpr/ply.hpp"
#include "pcfpr/rng.hpp"
#include "pcfpr/sampling.hpp"
#include "pcfpr/train.hpp"
#include "pcfpr/volume.hpp"
