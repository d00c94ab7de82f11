#ifndef FAIRBOOST_FAIRBOOST_HPP_
#define FAIRBOOST_FAIRBOOST_HPP_

#include "fairboost/boosting.hpp"
#include "fairboost/config.hpp"
#include "fairboost/error.hpp"
#include "fairboost/experiment.hpp"
#include "fairboost/ips.hpp"
#include "fairboost/metrics.hpp"
#include "fairboost/mf.hpp"
#include "fairboost/random.hpp"
#include "fairboost/ratings.hpp"
#include "fairboost/report.hpp"
#include "fairboost/serialize.hpp"

#endif  // FAIRBOOST_FAIRBOOST_HPP_
