#pragma once

#include "intervene/benefit.hpp"
#include "intervene/core.hpp"
#include "intervene/derivatives.hpp"
#include "intervene/equilibrium.hpp"
#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/mechanism.hpp"
#include "intervene/mechanisms.hpp"
#include "intervene/models.hpp"
#include "intervene/numerics.hpp"
