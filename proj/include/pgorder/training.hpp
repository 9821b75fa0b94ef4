#pragma once

#include "pgorder/training/curriculum.hpp"
#include "pgorder/training/ensemble.hpp"
#include "pgorder/training/fit.hpp"
#include "pgorder/training/losses.hpp"
