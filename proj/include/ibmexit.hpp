#pragma once

#include "ibmexit/errors.hpp"
#include "ibmexit/series_policy.hpp"
#include "ibmexit/special_functions.hpp"
#include "ibmexit/roots.hpp"
#include "ibmexit/quadrature.hpp"
#include "ibmexit/rng.hpp"
#include "ibmexit/parallel.hpp"
#include "ibmexit/bm_laws.hpp"
#include "ibmexit/exit_law.hpp"
#include "ibmexit/cone.hpp"
#include "ibmexit/ibm.hpp"
#include "ibmexit/asymptotics.hpp"
#include "ibmexit/pde_checks.hpp"
