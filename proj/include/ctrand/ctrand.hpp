#pragma once

#include "ctrand/complexity.hpp"
#include "ctrand/crn.hpp"
#include "ctrand/ctmc.hpp"
#include "ctrand/errors.hpp"
#include "ctrand/io.hpp"
#include "ctrand/martingale.hpp"
#include "ctrand/prng.hpp"
#include "ctrand/rational.hpp"
#include "ctrand/real.hpp"
#include "ctrand/sojourn.hpp"
#include "ctrand/transition.hpp"
