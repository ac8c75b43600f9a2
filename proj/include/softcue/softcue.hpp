#pragma once

#include "softcue/csv.hpp"
#include "softcue/errors.hpp"
#include "softcue/frechet.hpp"
#include "softcue/geometry.hpp"
#include "softcue/psycho.hpp"
#include "softcue/skinfit.hpp"
#include "softcue/stats.hpp"
#include "softcue/stiffness.hpp"
#include "softcue/synth.hpp"
#include "softcue/trace.hpp"
