#pragma once

// Umbrella header for the maximum-entropy orthogonal NMF library.

#include "meponmf/annealing.hpp"
#include "meponmf/baselines.hpp"
#include "meponmf/common.hpp"
#include "meponmf/config.hpp"
#include "meponmf/data_matrix.hpp"
#include "meponmf/datagen.hpp"
#include "meponmf/facade.hpp"
#include "meponmf/io.hpp"
#include "meponmf/metrics.hpp"
#include "meponmf/model_selection.hpp"
#include "meponmf/rng.hpp"
