#pragma once

#include "koopmotion/adam.hpp"
#include "koopmotion/checkpoint.hpp"
#include "koopmotion/errors.hpp"
#include "koopmotion/export.hpp"
#include "koopmotion/geometry.hpp"
#include "koopmotion/koopman_model.hpp"
#include "koopmotion/lifting.hpp"
#include "koopmotion/losses.hpp"
#include "koopmotion/metrics.hpp"
#include "koopmotion/rollout.hpp"
#include "koopmotion/spectral.hpp"
#include "koopmotion/sweep.hpp"
#include "koopmotion/synthetic.hpp"
#include "koopmotion/trainer.hpp"
#include "koopmotion/trajectory_data.hpp"
#include "koopmotion/vehicle_sim.hpp"
