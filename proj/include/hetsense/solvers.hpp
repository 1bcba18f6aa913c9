#pragma once

#include "hetsense/solvers/greedy.hpp"
#include "hetsense/solvers/result.hpp"
#include "hetsense/solvers/weighted_l1.hpp"
#include "hetsense/solvers/weights.hpp"
