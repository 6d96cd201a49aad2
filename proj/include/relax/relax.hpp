// relax.hpp - umbrella header.

#pragma once

#include "relax/errors.hpp"
#include "relax/chain.hpp"
#include "relax/spectral.hpp"
#include "relax/trajectory.hpp"
#include "relax/rigidity.hpp"
#include "relax/thermo.hpp"
#include "relax/power_iter.hpp"
#include "relax/accel.hpp"
#include "relax/first_passage.hpp"
#include "relax/zoo.hpp"
