#ifndef FINEQ_FINEQ_HPP
#define FINEQ_FINEQ_HPP

#include "fineq/analytic.hpp"
#include "fineq/config.hpp"
#include "fineq/evaluation.hpp"
#include "fineq/game.hpp"
#include "fineq/io.hpp"
#include "fineq/learner.hpp"
#include "fineq/nn.hpp"
#include "fineq/parallel.hpp"
#include "fineq/policy.hpp"
#include "fineq/rng.hpp"
#include "fineq/strategy.hpp"
#include "fineq/types.hpp"

#endif  // FINEQ_FINEQ_HPP
