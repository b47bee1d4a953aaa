#ifndef ISTL_ISTL_HPP
#define ISTL_ISTL_HPP

#include "istl/errors.hpp"
#include "istl/interval.hpp"
#include "istl/expr.hpp"
#include "istl/formula.hpp"
#include "istl/parser.hpp"
#include "istl/trace.hpp"
#include "istl/sliding_window.hpp"
#include "istl/semantics.hpp"
#include "istl/embedding.hpp"
#include "istl/milp.hpp"
#include "istl/simplex.hpp"
#include "istl/branch_and_bound.hpp"
#include "istl/encode.hpp"
#include "istl/receding_horizon.hpp"

#endif
