#pragma once

#include "dgw/errors.hpp"
#include "dgw/frame.hpp"
#include "dgw/graph.hpp"
#include "dgw/kernels.hpp"
#include "dgw/localization.hpp"
#include "dgw/simulator.hpp"
#include "dgw/solver.hpp"
#include "dgw/time_vertex.hpp"
