#pragma once

#include "locsme/array.hpp"
#include "locsme/beamformer.hpp"
#include "locsme/config.hpp"
#include "locsme/harness.hpp"
#include "locsme/io.hpp"
#include "locsme/rng.hpp"
#include "locsme/shrinkage.hpp"
#include "locsme/types.hpp"
