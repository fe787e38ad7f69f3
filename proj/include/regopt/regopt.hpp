#ifndef REGOPT_REGOPT_HPP
#define REGOPT_REGOPT_HPP

#include "regopt/experiment.hpp"
#include "regopt/linops.hpp"
#include "regopt/models.hpp"
#include "regopt/objective.hpp"
#include "regopt/problems.hpp"
#include "regopt/quasinewton.hpp"
#include "regopt/regularizers.hpp"
#include "regopt/rng.hpp"
#include "regopt/solvers.hpp"

#endif  // REGOPT_REGOPT_HPP
