#pragma once

// Umbrella header.

#include "wns/grid.hpp"
#include "wns/field.hpp"
#include "wns/spectral.hpp"
#include "wns/weighted.hpp"
#include "wns/quadrature.hpp"
#include "wns/mollifier.hpp"
#include "wns/calderon.hpp"
#include "wns/solver.hpp"
#include "wns/estimates.hpp"
#include "wns/testfields.hpp"
#include "wns/io.hpp"
#include "wns/pipeline.hpp"
