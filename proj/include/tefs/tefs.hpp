#ifndef TEFS_TEFS_HPP
#define TEFS_TEFS_HPP

#include "tefs/errors.hpp"
#include "tefs/estimators.hpp"
#include "tefs/evaluation.hpp"
#include "tefs/kdtree.hpp"
#include "tefs/scm.hpp"
#include "tefs/selection.hpp"
#include "tefs/timeseries.hpp"

#endif  // TEFS_TEFS_HPP
