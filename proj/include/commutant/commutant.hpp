#pragma once

#include "commutant/conditions.hpp"
#include "commutant/expr.hpp"
#include "commutant/ltv.hpp"
#include "commutant/mat2.hpp"
#include "commutant/metrics.hpp"
#include "commutant/scenario.hpp"
#include "commutant/simulate.hpp"
#include "commutant/synthesis.hpp"
