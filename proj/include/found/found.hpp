#pragma once

#include "found/augment.hpp"
#include "found/bessel.hpp"
#include "found/config.hpp"
#include "found/error.hpp"
#include "found/format.hpp"
#include "found/image.hpp"
#include "found/io.hpp"
#include "found/rng.hpp"
#include "found/spectral.hpp"
#include "found/vmf.hpp"
#include "found/harness/ablation.hpp"
#include "found/harness/metrics.hpp"
#include "found/harness/model.hpp"
#include "found/harness/pca.hpp"
#include "found/harness/synth.hpp"
#include "found/harness/train.hpp"
