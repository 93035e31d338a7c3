#pragma once

#include "dpd/core.hpp"
#include "dpd/diagnostics.hpp"
#include "dpd/edpd.hpp"
#include "dpd/imaging.hpp"
#include "dpd/ldpd.hpp"
#include "dpd/linops.hpp"
#include "dpd/model.hpp"
#include "dpd/prox.hpp"
#include "dpd/rng.hpp"
#include "dpd/solver_common.hpp"
#include "dpd/synthetic.hpp"
