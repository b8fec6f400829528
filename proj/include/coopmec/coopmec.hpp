#pragma once

#include <coopmec/barrier.hpp>
#include <coopmec/baselines.hpp>
#include <coopmec/case1.hpp>
#include <coopmec/case2.hpp>
#include <coopmec/channel.hpp>
#include <coopmec/config_io.hpp>
#include <coopmec/objective.hpp>
#include <coopmec/oracle.hpp>
#include <coopmec/rng.hpp>
#include <coopmec/sweep.hpp>
#include <coopmec/types.hpp>
