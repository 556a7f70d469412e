#pragma once

#include "dpl/numerics.hpp"
#include "dpl/schedule.hpp"
#include "dpl/prototype.hpp"
#include "dpl/mlp.hpp"
#include "dpl/geometry.hpp"
#include "dpl/denoiser.hpp"
#include "dpl/diffusion.hpp"
#include "dpl/fusion.hpp"
#include "dpl/losses.hpp"
#include "dpl/episodes.hpp"
#include "dpl/optim.hpp"
#include "dpl/model.hpp"
#include "dpl/config.hpp"
#include "dpl/checkpoint.hpp"
#include "dpl/parallel.hpp"
#include "dpl/trainer.hpp"
#include "dpl/experiments.hpp"
#include "dpl/selftest.hpp"
