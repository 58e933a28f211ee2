#pragma once

#include "magtrap/core.hpp"
#include "magtrap/geometry.hpp"
#include "magtrap/quadrature.hpp"
#include "magtrap/forms.hpp"
#include "magtrap/fields.hpp"
#include "magtrap/dynamics.hpp"
#include "magtrap/integrator.hpp"
#include "magtrap/rng.hpp"
#include "magtrap/scenarios.hpp"
#include "magtrap/diagnostics.hpp"
