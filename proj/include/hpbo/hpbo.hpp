#pragma once

#include "hpbo/acq.hpp"
#include "hpbo/acqopt.hpp"
#include "hpbo/errors.hpp"
#include "hpbo/gp.hpp"
#include "hpbo/loop.hpp"
#include "hpbo/qmc.hpp"
#include "hpbo/space.hpp"
