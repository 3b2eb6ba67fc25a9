#pragma once

#include "qpmp/core.hpp"
#include "qpmp/linalg.hpp"
#include "qpmp/liouville_space.hpp"
#include "qpmp/dynamics.hpp"
#include "qpmp/extremal_solver.hpp"
#include "qpmp/arc_classifier.hpp"
#include "qpmp/qre.hpp"
#include "qpmp/models.hpp"
