#pragma once

#include "tavaal/error.hpp"
#include "tavaal/random.hpp"

#include "tavaal/autodiff/losses.hpp"
#include "tavaal/autodiff/ops.hpp"
#include "tavaal/autodiff/optim.hpp"
#include "tavaal/autodiff/tensor.hpp"

#include "tavaal/nn/layers.hpp"
#include "tavaal/task/ranker.hpp"
#include "tavaal/task/ranking_losses.hpp"
#include "tavaal/task/task_net.hpp"

#include "tavaal/adversary/cvae.hpp"
#include "tavaal/adversary/objectives.hpp"

#include "tavaal/data/dataset.hpp"
#include "tavaal/data/idx.hpp"
#include "tavaal/data/pool.hpp"
#include "tavaal/data/sampling.hpp"

#include "tavaal/strategies/selection.hpp"

#include "tavaal/experiment/config.hpp"
#include "tavaal/experiment/records.hpp"
#include "tavaal/experiment/runner.hpp"
#include "tavaal/experiment/training.hpp"
