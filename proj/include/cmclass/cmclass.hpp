#pragma once

#include "cmclass/error.hpp"
#include "cmclass/grid.hpp"
#include "cmclass/edt.hpp"
#include "cmclass/connectivity.hpp"
#include "cmclass/morphology.hpp"
#include "cmclass/metrics.hpp"
#include "cmclass/cm_class.hpp"
#include "cmclass/convergence.hpp"
#include "cmclass/elliptic.hpp"
#include "cmclass/shape_opt.hpp"
